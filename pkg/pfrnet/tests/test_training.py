import json
import math
import re
from dataclasses import replace
from unittest import mock

import torch
from django.test import SimpleTestCase, override_settings, tag

from pfrnet.checkpoints import read_checkpoint
from pfrnet.config import PROFILES
from pfrnet.data import normalize, synth_generate
from pfrnet.exceptions import TrainingDiverged
from pfrnet.losses import LossTerms
from pfrnet.training import TrainLog, make_run_dir, train

from .helpers import TempDirMixin, tiny_config


class TrainTests(TempDirMixin, SimpleTestCase):
    def test_run_artifacts(self):
        result = train(tiny_config(), run_dir=self.tmp / 'run')
        for name in ('config.json', 'last.pt', 'best.pt', 'train_log.json'):
            self.assertTrue((self.tmp / 'run' / name).is_file(), name)
        self.assertEqual(len(result.log.losses), 2)
        self.assertEqual(result.log.learning_rates, [1e-4])

        payload = read_checkpoint(result.checkpoint)
        self.assertEqual((payload['epoch'], payload['step']), (1, 2))
        self.assertEqual(payload['train_config']['lam'], 0.5)
        self.assertEqual(json.loads((self.tmp / 'run' / 'config.json').read_text())['profile'], 'desk')

        log = TrainLog.load(self.tmp / 'run' / 'train_log.json')
        self.assertEqual([entry['step'] for entry in log.steps], [1, 2])
        self.assertTrue(all(math.isfinite(loss) for loss in log.losses))

    def test_identical_runs(self):
        first = train(tiny_config(), run_dir=self.tmp / 'a')
        second = train(tiny_config(), run_dir=self.tmp / 'b')
        self.assertEqual(first.log.losses, second.log.losses)

    def test_resume_repeats_uninterrupted_run(self):
        config = tiny_config(epochs=2, max_steps=4, augment=True)
        full = train(config, run_dir=self.tmp / 'full')

        partial = train(replace(config, epochs=1), run_dir=self.tmp / 'partial')
        resumed = train(config, resume=partial.checkpoint)
        self.assertEqual(resumed.run_dir, self.tmp / 'partial')
        self.assertEqual([entry['step'] for entry in resumed.log.steps], [1, 2, 3, 4])
        for expected, actual in zip(full.log.losses, resumed.log.losses):
            self.assertAlmostEqual(expected, actual, places=5)

    def test_resume_inside_a_cut_epoch(self):
        # 6 samples in batches of 2: three steps per epoch, so max_steps=4 stops after batch 1 of epoch 1
        config = tiny_config(synthetic_samples=6, epochs=2, max_steps=6, augment=True)
        full = train(config, run_dir=self.tmp / 'full')
        self.assertEqual(len(full.log.losses), 6)

        cut = train(replace(config, max_steps=4), run_dir=self.tmp / 'cut')
        payload = read_checkpoint(cut.checkpoint)
        self.assertEqual((payload['epoch'], payload['batch'], payload['step']), (1, 1, 4))
        self.assertEqual([entry['epoch'] for entry in cut.log.epochs], [0])
        self.assertEqual(read_checkpoint(cut.best_checkpoint)['epoch'], 1)

        resumed = train(config, resume=cut.checkpoint)
        self.assertEqual([entry['step'] for entry in resumed.log.steps], [1, 2, 3, 4, 5, 6])
        self.assertAlmostEqual(resumed.log.losses[4], full.log.losses[4], places=5)
        self.assertAlmostEqual(resumed.log.losses[5], full.log.losses[5], places=5)
        self.assertAlmostEqual(resumed.log.epochs[1]['mean_loss'], full.log.epochs[1]['mean_loss'], places=5)

    def test_resume_with_changed_config_warns(self):
        first = train(tiny_config(epochs=2), run_dir=self.tmp / 'run')
        with self.assertLogs('pfrnet.training', 'WARNING') as logs:
            train(tiny_config(epochs=2, max_steps=4, lam=0.3), resume=first.checkpoint)
        self.assertIn('lam 0.5 -> 0.3', logs.output[0])
        self.assertNotIn('max_steps', logs.output[0])

    def test_non_finite_loss(self):
        nan = torch.tensor(float('nan'))
        terms = LossTerms(nan, nan, nan, nan, nan)
        with mock.patch('pfrnet.training.loss_terms', return_value=terms):
            with self.assertRaises(TrainingDiverged) as caught:
                train(tiny_config(), run_dir=self.tmp / 'run')
        self.assertEqual(caught.exception.step, 1)
        self.assertIn('total=nan', str(caught.exception))

    def test_run_directory_name(self):
        with override_settings(PFRNET={'RUN_ROOT': self.tmp}):
            path = make_run_dir(tiny_config())
        self.assertEqual(path.parent, self.tmp)
        self.assertRegex(path.name, re.compile(r'^[0-9a-f]{12}-\d{8}T\d{12}$'))

    def test_log_rejects_repeated_steps(self):
        log = TrainLog()
        log.record_step(1, 0, {'total': 1.0})
        with self.assertRaises(ValueError):
            log.record_step(1, 0, {'total': 0.5})


@tag('slow')
class DeskOverfitTests(TempDirMixin, SimpleTestCase):
    def test_desk_profile_overfits_synthetic_set(self):
        config = PROFILES['desk']
        result = train(config, run_dir=self.tmp / 'desk')
        losses = result.log.losses
        self.assertEqual(len(losses), 200)
        self.assertLessEqual(result.log.epochs[-1]['mean_loss'], 0.2 * losses[0])

        samples = synth_generate(config.seed, config.synthetic_samples, config.resolution)
        model = result.model.eval()
        with torch.no_grad():
            images = normalize(torch.stack([s.image for s in samples]))
            predictions = model.predict(images)
        masks = torch.stack([s.mask for s in samples])
        self.assertLess(float((predictions - masks).abs().mean()), 0.15)
