from pathlib import Path

from django.apps import apps
from django.test import SimpleTestCase, override_settings

from pfrnet.conf import DEFAULTS, pfrnet_settings


class PFRNetSettingsTests(SimpleTestCase):
    def test_defaults_fill_missing_keys(self):
        with override_settings(PFRNET={'EVAL_WORKERS': 2}):
            self.assertEqual(pfrnet_settings.EVAL_WORKERS, 2)
            self.assertEqual(pfrnet_settings.MASK_THRESHOLD, DEFAULTS['MASK_THRESHOLD'])

    def test_run_root_is_a_path(self):
        with override_settings(PFRNET={'RUN_ROOT': '/tmp/pfrnet-runs'}):
            self.assertEqual(pfrnet_settings.RUN_ROOT, Path('/tmp/pfrnet-runs'))

    def test_unknown_setting(self):
        for name in ('DESK_RESOLUTION', 'BATCH_SIZE'):
            with self.subTest(name=name), self.assertRaises(AttributeError):
                getattr(pfrnet_settings, name)

    def test_no_account_apps(self):
        self.assertFalse(apps.is_installed('django.contrib.auth'))
        self.assertFalse(apps.is_installed('django.contrib.contenttypes'))
        self.assertTrue(apps.is_installed('rest_framework'))
