import io

import numpy as np
import torch
from django.core.files.uploadedfile import SimpleUploadedFile
from django.test import SimpleTestCase, override_settings
from PIL import Image
from rest_framework import status
from rest_framework.test import APIClient

from pfrnet import views
from pfrnet.backbone import STUB
from pfrnet.checkpoints import save_checkpoint
from pfrnet.network import build_network

from .helpers import TempDirMixin


def _png(array, name='image.png'):
    buffer = io.BytesIO()
    Image.fromarray(np.asarray(array, dtype=np.uint8)).save(buffer, format='PNG')
    return SimpleUploadedFile(name, buffer.getvalue(), content_type='image/png')


class APITestBase(TempDirMixin, SimpleTestCase):
    def setUp(self):
        super().setUp()
        self.client = APIClient()
        views._load_serving_model.cache_clear()
        self.addCleanup(views._load_serving_model.cache_clear)


class PredictAPITests(APITestBase):
    def setUp(self):
        super().setUp()
        torch.manual_seed(0)
        self.checkpoint = save_checkpoint(
            self.tmp / 'best.pt', build_network(STUB), train_config={'resolution': 64},
        )
        self.image = np.random.default_rng(0).integers(0, 256, (30, 50, 3))

    def test_no_checkpoint_configured(self):
        with override_settings(PFRNET={'SERVE_CHECKPOINT': None}):
            response = self.client.post('/api/predict/', {'image': _png(self.image)}, format='multipart')
        self.assertEqual(response.status_code, status.HTTP_503_SERVICE_UNAVAILABLE)

    def test_broken_checkpoint(self):
        with override_settings(PFRNET={'SERVE_CHECKPOINT': str(self.tmp / 'absent.pt')}):
            response = self.client.post('/api/predict/', {'image': _png(self.image)}, format='multipart')
        self.assertEqual(response.status_code, status.HTTP_503_SERVICE_UNAVAILABLE)

    def test_not_an_image(self):
        upload = SimpleUploadedFile('notes.txt', b'plain text', content_type='text/plain')
        response = self.client.post('/api/predict/', {'image': upload}, format='multipart')
        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
        self.assertIn('image', response.json()['error'])

    def test_png_map_at_upload_size(self):
        with override_settings(PFRNET={'SERVE_CHECKPOINT': str(self.checkpoint)}):
            response = self.client.post('/api/predict/', {'image': _png(self.image)}, format='multipart')
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response['Content-Type'], 'image/png')
        with Image.open(io.BytesIO(response.content)) as image:
            self.assertEqual((image.mode, image.size), ('L', (50, 30)))

    def test_json_summary(self):
        with override_settings(PFRNET={'SERVE_CHECKPOINT': str(self.checkpoint)}):
            response = self.client.post(
                '/api/predict/?format=json', {'image': _png(self.image)}, format='multipart',
            )
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        body = response.json()
        self.assertEqual((body['width'], body['height']), (50, 30))
        self.assertTrue(0.0 <= body['foreground_fraction'] <= 1.0)
        self.assertTrue(0.0 <= body['mean_confidence'] <= 1.0)


class MetricsAPITests(APITestBase):
    def test_perfect_pair(self):
        gt = np.zeros((24, 32), dtype=np.uint8)
        gt[6:18, 8:24] = 255
        response = self.client.post(
            '/api/metrics/',
            {'prediction': _png(gt, 'pred.png'), 'ground_truth': _png(gt, 'gt.png')},
            format='multipart',
        )
        self.assertEqual(response.status_code, status.HTTP_200_OK)
        body = response.json()
        self.assertEqual((body['width'], body['height']), (32, 24))
        self.assertAlmostEqual(body['s_alpha'], 1.0, delta=1e-3)
        self.assertAlmostEqual(body['e_phi'], 1.0, delta=1e-3)
        self.assertAlmostEqual(body['f_beta_w'], 1.0, delta=1e-3)
        self.assertEqual(body['mae'], 0.0)

    def test_missing_ground_truth(self):
        gt = np.zeros((8, 8), dtype=np.uint8)
        response = self.client.post('/api/metrics/', {'prediction': _png(gt)}, format='multipart')
        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
