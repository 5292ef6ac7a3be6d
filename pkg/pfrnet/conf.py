"""
Access to the ``PFRNET`` settings dict with built-in defaults.

Library code never touches ``django.conf.settings`` directly::

    from pfrnet.conf import pfrnet_settings
    pfrnet_settings.RUN_ROOT
"""
from pathlib import Path

from django.conf import settings
from django.core.exceptions import ImproperlyConfigured

DEFAULTS = {
    'RUN_ROOT': Path('runs'),
    'SERVE_CHECKPOINT': None,
    'IMAGE_MEAN': (0.485, 0.456, 0.406),
    'IMAGE_STD': (0.229, 0.224, 0.225),
    'TRAIN_RESOLUTION': 352,
    'MASK_THRESHOLD': 128,
    'EVAL_WORKERS': 4,
}


class PFRNetSettings:
    """Lazy view of ``settings.PFRNET`` falling back to ``DEFAULTS``."""

    def __getattr__(self, name):
        if name not in DEFAULTS:
            raise AttributeError(f'Invalid PFRNet setting: {name!r}')
        try:
            user_settings = getattr(settings, 'PFRNET', {})
        except ImproperlyConfigured:
            user_settings = {}
        value = user_settings.get(name, DEFAULTS[name])
        if name == 'RUN_ROOT':
            value = Path(value)
        return value


pfrnet_settings = PFRNetSettings()
