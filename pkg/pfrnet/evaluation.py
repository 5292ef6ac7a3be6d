"""
Checkpoint evaluation: predict every image of a dataset, write 8-bit maps at
GT resolution, then score them with ``metrics.evaluate_dataset``.
"""
import json
import logging
from pathlib import Path

import torch
from PIL import Image

from .blocks import resample
from .checkpoints import load_checkpoint
from .conf import pfrnet_settings
from .data import MASK_DIR, load_dataset, normalize, read_image
from .metrics import evaluate_dataset, format_table, write_map
from .serializers import MetricReportSerializer

logger = logging.getLogger(__name__)


def load_frozen(checkpoint):
    """Model from ``checkpoint`` in eval mode with gradients off; returns ``(model, resolution)``."""
    model, payload = load_checkpoint(checkpoint)
    model.eval()
    for parameter in model.parameters():
        parameter.requires_grad_(False)
    train_config = payload.get('train_config') or {}
    return model, train_config.get('resolution', pfrnet_settings.TRAIN_RESOLUTION)


def predict_map(model, image, resolution, size=None):
    """
    Camouflage map for one ``(3, H, W)`` image in [0, 1].

    The image is resized to ``resolution`` for the network; the map comes back
    at ``size`` (``(H, W)`` of the image by default) as a ``(h, w)`` tensor.
    """
    size = tuple(size or image.shape[-2:])
    batch = resample(image[None], size=(resolution, resolution))
    with torch.no_grad():
        prediction = model.predict(normalize(batch))
    return resample(prediction, size=size)[0, 0].clamp(0.0, 1.0)


def predict_file(model, image_path, out_path, resolution):
    prediction = predict_map(model, read_image(image_path), resolution)
    return write_map(out_path, prediction.numpy())


def model_label(checkpoint):
    checkpoint = Path(checkpoint)
    return f'{checkpoint.parent.name}/{checkpoint.stem}'


def evaluate(checkpoint, dataset_root, out_dir=None, model=None, resolution=None):
    """Write prediction maps for ``dataset_root`` and return its ``MetricReport``."""
    if model is None:
        model, resolution = load_frozen(checkpoint)
    resolution = resolution or pfrnet_settings.TRAIN_RESOLUTION
    dataset_root = Path(dataset_root)
    name = dataset_root.name
    out_dir = Path(out_dir) if out_dir else Path(checkpoint).parent / 'predictions'
    pred_dir = out_dir / name

    samples = load_dataset(dataset_root)
    for sample in samples:
        with Image.open(dataset_root / MASK_DIR / f'{sample.id}.png') as gt:
            width, height = gt.size
        prediction = predict_map(model, sample.image, resolution, size=(height, width))
        write_map(pred_dir / f'{sample.id}.png', prediction.numpy())
    logger.info('Wrote %d prediction maps to %s', len(samples), pred_dir)

    return evaluate_dataset(pred_dir, dataset_root / MASK_DIR, dataset=name, model=model_label(checkpoint))


def evaluate_many(checkpoint, dataset_roots, out_dir=None):
    """``evaluate`` over several benchmarks with one model load."""
    model, resolution = load_frozen(checkpoint)
    return [
        evaluate(checkpoint, root, out_dir=out_dir, model=model, resolution=resolution)
        for root in dataset_roots
    ]


def write_reports(reports, out_dir):
    """``metrics.json`` (structured) and ``metrics.txt`` (table) in ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = MetricReportSerializer(reports, many=True).data
    (out_dir / 'metrics.json').write_text(json.dumps(rows, indent=2))
    table = format_table(rows, ('dataset', 'model', 'n_images'))
    (out_dir / 'metrics.txt').write_text(table + '\n')
    return rows, table
