from unittest import mock

from django.test import SimpleTestCase, tag

from pfrnet.cfdm import BranchSet
from pfrnet.self_check import CHECKS, run_self_check

FAST = ['dla_identity', 'guidance_algebra', 'split_concat', 'dependency_isolation', 'metric_oracles', 'schedule']


def _swapped_split4(y):
    y1, y2, y3, y4 = y.chunk(4, dim=1)
    return BranchSet(y4, y2, y3, y1)


class SelfCheckTests(SimpleTestCase):
    def test_fast_checks_pass(self):
        results = run_self_check(FAST)
        self.assertEqual([r.name for r in results], FAST)
        for result in results:
            self.assertTrue(result.passed, f'{result.name}: {result.detail}')

    def test_swapped_branches_are_caught(self):
        with mock.patch('pfrnet.self_check.split4', _swapped_split4):
            with self.assertLogs('pfrnet.self_check', 'ERROR'):
                [result] = run_self_check(['dependency_isolation'])
        self.assertFalse(result.passed)
        self.assertIn('AssertionError', result.detail)

    def test_check_names_are_unique(self):
        names = [name for name, _ in CHECKS]
        self.assertEqual(len(names), len(set(names)))


@tag('slow')
class FullBatteryTests(SimpleTestCase):
    def test_every_check_passes(self):
        results = run_self_check()
        self.assertEqual(len(results), len(CHECKS))
        failed = [f'{r.name}: {r.detail}' for r in results if not r.passed]
        self.assertEqual(failed, [])
