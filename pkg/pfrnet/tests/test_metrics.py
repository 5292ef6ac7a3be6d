import numpy as np
from django.test import SimpleTestCase

from pfrnet.exceptions import DatasetError, ShapeError
from pfrnet.metrics import (
    METRIC_FIELDS, e_measure, e_measure_curve, evaluate_dataset, format_table, gaussian_kernel, mae,
    read_prediction, s_measure, score_pair, weighted_f, write_map,
)

from .helpers import TempDirMixin, write_png


def _square_mask(size=32):
    gt = np.zeros((size, size), dtype=bool)
    gt[8:20, 10:26] = True
    return gt


class MAETests(SimpleTestCase):
    def test_worked_example(self):
        pred = np.array([[0, 0.5], [1, 0.25]])
        gt = np.array([[0, 1], [1, 0]], dtype=bool)
        self.assertEqual(mae(pred, gt), 0.1875)

    def test_brute_force(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            pred, gt = rng.random((12, 12)), rng.random((12, 12)) > 0.5
            expected = sum(abs(pred[i, j] - float(gt[i, j])) for i in range(12) for j in range(12)) / 144
            self.assertAlmostEqual(mae(pred, gt), expected, places=12)

    def test_flipping_pixels(self):
        gt = _square_mask()
        pred = gt.astype(np.float64)
        for k in (1, 5, 17):
            flipped = pred.copy().ravel()
            flipped[:k] = 1 - flipped[:k]
            self.assertAlmostEqual(mae(flipped.reshape(gt.shape), gt), k / gt.size, places=12)

    def test_input_checks(self):
        with self.assertRaises(ShapeError):
            mae(np.zeros((4, 4)), np.zeros((4, 5), dtype=bool))
        with self.assertRaises(ValueError):
            mae(np.full((4, 4), 1.5), np.zeros((4, 4), dtype=bool))


class StructuralMetricTests(SimpleTestCase):
    def test_perfect_map(self):
        gt = _square_mask()
        scores = score_pair(gt.astype(np.float64), gt)
        self.assertEqual(set(scores), set(METRIC_FIELDS))
        for name, ideal in {'s_alpha': 1.0, 'e_phi': 1.0, 'f_beta_w': 1.0, 'mae': 0.0}.items():
            self.assertAlmostEqual(scores[name], ideal, delta=1e-3, msg=name)

    def test_inverted_map(self):
        gt = _square_mask()
        inverted = 1 - gt.astype(np.float64)
        self.assertLess(e_measure(inverted, gt), 0.25)
        self.assertLess(s_measure(inverted, gt), 0.25)
        self.assertLess(weighted_f(inverted, gt), 0.25)

    def test_empty_ground_truth(self):
        gt = np.zeros((16, 16), dtype=bool)
        pred = np.full((16, 16), 0.25)
        self.assertAlmostEqual(s_measure(pred, gt), 0.75)
        self.assertEqual(weighted_f(pred, gt), 0.0)
        self.assertAlmostEqual(e_measure(np.zeros((16, 16)), gt), 1.0)

    def test_full_ground_truth(self):
        gt = np.ones((16, 16), dtype=bool)
        self.assertAlmostEqual(s_measure(np.full((16, 16), 0.8), gt), 0.8)

    def test_perfect_binary_map_scores_exactly_one(self):
        gt = _square_mask()
        curve = e_measure_curve(gt.astype(np.float64), gt)
        self.assertEqual(curve.shape, (255,))
        self.assertAlmostEqual(e_measure(gt.astype(np.float64), gt), 1.0, places=12)
        self.assertLessEqual(curve.max(), 1.0)

    def test_curve_has_one_score_per_threshold(self):
        rng = np.random.default_rng(3)
        curve = e_measure_curve(rng.random((20, 20)), rng.random((20, 20)) > 0.6)
        self.assertEqual(curve.shape, (255,))
        self.assertTrue(np.all((curve >= 0) & (curve <= 1 + 1e-9)))

    def test_scores_lie_in_unit_interval(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            scores = score_pair(rng.random((24, 24)), rng.random((24, 24)) > 0.7)
            for name, value in scores.items():
                self.assertTrue(0.0 <= value <= 1.0, f'{name}={value}')

    def test_gaussian_kernel(self):
        kernel = gaussian_kernel()
        self.assertEqual(kernel.shape, (7, 7))
        self.assertAlmostEqual(kernel.sum(), 1.0)
        self.assertEqual(kernel.argmax(), 24)


class EvaluateDatasetTests(TempDirMixin, SimpleTestCase):
    def _write_masks(self, directory, ids):
        gt = _square_mask().astype(np.uint8) * 255
        for image_id in ids:
            write_png(directory / f'{image_id}.png', gt)

    def test_self_evaluation(self):
        gt_dir = self.tmp / 'CAMO' / 'GT'
        self._write_masks(gt_dir, ('b', 'a', 'c'))
        self._write_masks(self.tmp / 'pred', ('a', 'b', 'c'))
        report = evaluate_dataset(self.tmp / 'pred', gt_dir, model='run/best')
        self.assertEqual(report.dataset, 'CAMO')
        self.assertEqual(report.image_ids, ['a', 'b', 'c'])
        summary = report.to_dict()
        self.assertEqual(
            list(summary), ['dataset', 'model', 's_alpha', 'e_phi', 'f_beta_w', 'mae', 'n_images'],
        )
        self.assertEqual((summary['s_alpha'], summary['e_phi'], summary['f_beta_w'], summary['mae']), (1.0, 1.0, 1.0, 0.0))
        self.assertEqual(summary['n_images'], 3)

    def test_prediction_resized_to_ground_truth(self):
        write_map(self.tmp / 'small.png', np.full((8, 8), 0.5))
        self.assertEqual(read_prediction(self.tmp / 'small.png', size=(32, 16)).shape, (16, 32))

    def test_unmatched_files(self):
        self._write_masks(self.tmp / 'gt', ('a', 'b'))
        self._write_masks(self.tmp / 'pred', ('a', 'z'))
        with self.assertLogs('pfrnet.metrics', 'WARNING'):
            with self.assertRaisesMessage(DatasetError, 'b, z'):
                evaluate_dataset(self.tmp / 'pred', self.tmp / 'gt')

    def test_duplicate_prediction_ids(self):
        self._write_masks(self.tmp / 'gt', ('a',))
        self._write_masks(self.tmp / 'pred', ('a',))
        write_png(self.tmp / 'pred' / 'a.jpg', np.zeros((32, 32)))
        with self.assertRaises(DatasetError):
            evaluate_dataset(self.tmp / 'pred', self.tmp / 'gt')

    def test_empty_directories(self):
        (self.tmp / 'gt').mkdir()
        (self.tmp / 'pred').mkdir()
        with self.assertRaises(DatasetError):
            evaluate_dataset(self.tmp / 'pred', self.tmp / 'gt')
        self._write_masks(self.tmp / 'gt', ('a',))
        with self.assertRaises(DatasetError):
            evaluate_dataset(self.tmp / 'pred', self.tmp / 'gt')


class FormatTableTests(SimpleTestCase):
    def test_missing_metrics_render_as_dash(self):
        rows = [
            {'lambda': 0.5, 'dataset': 'CAMO', 's_alpha': 0.8, 'e_phi': 0.9, 'f_beta_w': 0.7, 'mae': 0.05},
            {'lambda': 0.6, 'dataset': '-'},
        ]
        lines = format_table(rows, ('lambda', 'dataset')).splitlines()
        self.assertEqual(len(lines), 3)
        self.assertIn('0.800', lines[1])
        self.assertEqual(lines[2].split()[-4:], ['-', '-', '-', '-'])
