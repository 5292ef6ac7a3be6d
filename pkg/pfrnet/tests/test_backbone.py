import torch
from django.test import SimpleTestCase, tag

from pfrnet.backbone import RES2NET50, STUB, BackboneSpec, build_backbone, extract_features
from pfrnet.exceptions import CheckpointError, ShapeError

from .helpers import TempDirMixin


class StubBackboneTests(SimpleTestCase):
    def test_pyramid_shapes(self):
        pyramid = extract_features(torch.randn(1, 3, 64, 64), build_backbone(STUB))
        self.assertEqual(pyramid.f1.shape, (1, 16, 16, 16))
        self.assertEqual(pyramid.f2.shape, (1, 32, 8, 8))
        self.assertEqual(pyramid.f3.shape, (1, 64, 4, 4))
        self.assertEqual(pyramid.f4.shape, (1, 128, 2, 2))

    def test_strides_hold_for_other_sizes(self):
        pyramid = build_backbone(STUB)(torch.randn(2, 3, 96, 160))
        for level, stride in zip(pyramid, (4, 8, 16, 32)):
            self.assertEqual(level.shape[-2:], (96 // stride, 160 // stride))
            self.assertEqual(level.shape[0], 2)

    def test_rejects_size_not_divisible_by_32(self):
        with self.assertRaises(ShapeError):
            build_backbone(STUB)(torch.randn(1, 3, 100, 100))

    def test_rejects_non_rgb(self):
        with self.assertRaises(ShapeError):
            build_backbone(STUB)(torch.randn(1, 1, 64, 64))

    def test_deterministic_under_seed(self):
        image = torch.randn(1, 3, 64, 64)
        torch.manual_seed(3)
        first = build_backbone(STUB).eval()(image)
        torch.manual_seed(3)
        second = build_backbone(STUB).eval()(image)
        for a, b in zip(first, second):
            self.assertTrue(torch.equal(a, b))

    def test_stub_has_no_pretrained_weights(self):
        with self.assertRaises(CheckpointError):
            build_backbone(BackboneSpec('stub', STUB.channels, 'weights.pth'))

    def test_spec_validation_and_round_trip(self):
        with self.assertRaises(ValueError):
            BackboneSpec('stub', (16, 32, 64))
        self.assertEqual(BackboneSpec.from_dict(RES2NET50.to_dict()), RES2NET50)

    def test_unknown_backbone(self):
        with self.assertRaises(ValueError):
            build_backbone(BackboneSpec('vgg16', STUB.channels))


@tag('slow')
class Res2NetBackboneTests(SimpleTestCase):
    def test_stage_shapes(self):
        backbone = build_backbone(RES2NET50).eval()
        with torch.no_grad():
            pyramid = backbone(torch.randn(1, 3, 352, 352))
        self.assertEqual(pyramid.f1.shape, (1, 256, 88, 88))
        self.assertEqual(pyramid.f2.shape, (1, 512, 44, 44))
        self.assertEqual(pyramid.f3.shape, (1, 1024, 22, 22))
        self.assertEqual(pyramid.f4.shape, (1, 2048, 11, 11))

    def test_missing_weights_file(self):
        spec = BackboneSpec('res2net50', RES2NET50.channels, '/nonexistent/res2net50.pth')
        with self.assertRaises(CheckpointError):
            build_backbone(spec)


@tag('slow')
class Res2NetWeightsTests(TempDirMixin, SimpleTestCase):
    def setUp(self):
        super().setUp()
        torch.manual_seed(0)
        self.source = build_backbone(RES2NET50)
        self.state = self.source.body.state_dict()

    def _save(self, state):
        path = self.tmp / 'res2net50.pth'
        torch.save(state, path)
        return path

    def test_renamed_keys_are_rejected(self):
        path = self._save({f'encoder.{key}': value for key, value in self.state.items()})
        with self.assertRaises(CheckpointError):
            build_backbone(RES2NET50).load_pretrained(path)

    def test_partial_state_is_rejected(self):
        partial = {key: value for key, value in self.state.items() if not key.startswith('layer4.')}
        with self.assertRaisesMessage(CheckpointError, 'layer4.'):
            build_backbone(RES2NET50).load_pretrained(self._save(partial))

    def test_data_parallel_dump_and_classifier_keys(self):
        state = {f'module.{key}': value for key, value in self.state.items()}
        state['module.fc.weight'] = torch.zeros(1000, 2048)
        target = build_backbone(RES2NET50)
        target.load_pretrained(self._save(state))
        first = next(iter(self.state))
        self.assertTrue(torch.equal(target.body.state_dict()[first], self.state[first]))
