import torch
from django.test import SimpleTestCase

from pfrnet.backbone import STUB, build_backbone
from pfrnet.exceptions import ShapeError
from pfrnet.frm import FeatureRefinement, FeatureRefinementModule


class FeatureRefinementTests(SimpleTestCase):
    def setUp(self):
        torch.manual_seed(0)

    def test_level_shapes(self):
        pyramid = build_backbone(STUB)(torch.randn(1, 3, 64, 64))
        refined = FeatureRefinementModule(STUB.channels)(pyramid, torch.rand(1, 1, 8, 8))
        self.assertEqual([r.shape for r in refined], [(1, 256, 16, 16), (1, 256, 8, 8), (1, 256, 4, 4)])

    def test_guidance_of_ones_is_the_plain_path(self):
        refine = FeatureRefinement(32, level=2).eval()
        f = torch.randn(2, 32, 8, 8)
        with torch.no_grad():
            self.assertTrue(torch.equal(refine.gated(f, torch.ones(2, 1, 8, 8)), refine.gated(f)))
            self.assertTrue(torch.allclose(refine(f, torch.ones(2, 1, 8, 8)), refine(f), atol=1e-6))

    def test_guidance_of_zeros_annihilates(self):
        refine = FeatureRefinement(16, level=1).eval()
        gated = refine.gated(torch.randn(1, 16, 16, 16), torch.zeros(1, 1, 8, 8))
        self.assertEqual(torch.count_nonzero(gated), 0)

    def test_gating_is_monotone(self):
        refine = FeatureRefinement(64, level=3).eval()
        f = torch.randn(1, 64, 4, 4)
        with torch.no_grad():
            coarse = refine.gated(f)
            gated = refine.gated(f, torch.rand(1, 1, 8, 8) * 0.98 + 0.01)
        self.assertTrue(torch.all(gated.abs() <= coarse.abs()))

    def test_gradient_reaches_guidance(self):
        refine = FeatureRefinement(16, level=2)
        ggi = torch.full((1, 1, 2, 2), 0.5, requires_grad=True)
        refine(torch.randn(1, 16, 2, 2), ggi).sum().backward()
        self.assertTrue(torch.any(ggi.grad != 0))

    def test_misaligned_guidance(self):
        with self.assertRaises(ShapeError):
            FeatureRefinement(16, level=1)(torch.randn(1, 16, 16, 16), torch.rand(1, 1, 4, 4))
        with self.assertRaises(ShapeError):
            FeatureRefinement(16, level=2)(torch.randn(1, 16, 8, 8), torch.rand(1, 2, 8, 8))

    def test_unknown_level(self):
        with self.assertRaises(ValueError):
            FeatureRefinement(16, level=4)
