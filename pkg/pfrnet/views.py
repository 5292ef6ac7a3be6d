import io
import logging
import threading
from functools import lru_cache

import numpy as np
from django.http import HttpResponse
from PIL import Image
from rest_framework import status
from rest_framework.decorators import api_view, permission_classes
from rest_framework.permissions import AllowAny
from rest_framework.response import Response

from .conf import pfrnet_settings
from .data import read_image
from .evaluation import load_frozen, predict_map
from .exceptions import PFRNetError
from .metrics import score_pair
from .serializers import MapPairSerializer, PredictionUploadSerializer

logger = logging.getLogger(__name__)

_model_lock = threading.Lock()


@lru_cache(maxsize=1)
def _load_serving_model(checkpoint):
    logger.info('Loading serving checkpoint %s', checkpoint)
    return load_frozen(checkpoint)


def serving_model():
    """The frozen model named by ``PFRNET['SERVE_CHECKPOINT']``, loaded once."""
    checkpoint = pfrnet_settings.SERVE_CHECKPOINT
    if not checkpoint:
        return None
    with _model_lock:
        return _load_serving_model(str(checkpoint))


def _png_response(prediction):
    pixels = np.round(prediction.numpy() * 255).astype(np.uint8)
    buffer = io.BytesIO()
    Image.fromarray(pixels).save(buffer, format='PNG')
    return HttpResponse(buffer.getvalue(), content_type='image/png')


@api_view(['POST'])
@permission_classes([AllowAny])
def predict(request):
    """Camouflage map of an uploaded image, as a PNG at the upload's size"""
    serializer = PredictionUploadSerializer(data=request.data)
    if not serializer.is_valid():
        return Response({'error': serializer.errors}, status=status.HTTP_400_BAD_REQUEST)

    try:
        loaded = serving_model()
    except PFRNetError as e:
        logger.error('Serving checkpoint unusable: %s', e)
        return Response({'error': str(e)}, status=status.HTTP_503_SERVICE_UNAVAILABLE)
    if loaded is None:
        return Response({'error': 'No serving checkpoint configured'}, status=status.HTTP_503_SERVICE_UNAVAILABLE)
    model, resolution = loaded

    try:
        prediction = predict_map(model, read_image(serializer.validated_data['image']), resolution)
    except (PFRNetError, OSError) as e:
        return Response({'error': str(e)}, status=status.HTTP_400_BAD_REQUEST)

    if request.query_params.get('format') == 'json':
        height, width = prediction.shape
        return Response({
            'width': width,
            'height': height,
            'foreground_fraction': float((prediction >= 0.5).float().mean()),
            'mean_confidence': float(prediction.mean()),
        })
    return _png_response(prediction)


@api_view(['POST'])
@permission_classes([AllowAny])
def metrics(request):
    """S-alpha, E-phi, weighted F and MAE for one prediction/ground-truth pair"""
    serializer = MapPairSerializer(data=request.data)
    if not serializer.is_valid():
        return Response({'error': serializer.errors}, status=status.HTTP_400_BAD_REQUEST)

    try:
        with Image.open(serializer.validated_data['ground_truth']) as gt_image:
            gt = np.asarray(gt_image.convert('L')) >= pfrnet_settings.MASK_THRESHOLD
        with Image.open(serializer.validated_data['prediction']) as pred_image:
            pred_image = pred_image.convert('L')
            if pred_image.size != (gt.shape[1], gt.shape[0]):
                pred_image = pred_image.resize((gt.shape[1], gt.shape[0]), Image.Resampling.BILINEAR)
            pred = np.asarray(pred_image, dtype=np.float64) / 255.0
        scores = score_pair(pred, gt)
    except (PFRNetError, OSError, ValueError) as e:
        return Response({'error': str(e)}, status=status.HTTP_400_BAD_REQUEST)

    return Response({**scores, 'width': gt.shape[1], 'height': gt.shape[0]})
