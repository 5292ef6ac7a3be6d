import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np
from PIL import Image

from pfrnet.config import PROFILES


def write_png(path, array):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.asarray(array, dtype=np.uint8)).save(path)
    return path


def make_dataset(root, ids, size=(32, 32), seed=0):
    """Random RGB images with rectangle masks under ``root/Imgs`` and ``root/GT``."""
    rng = np.random.default_rng(seed)
    root = Path(root)
    height, width = size
    for image_id in ids:
        write_png(root / 'Imgs' / f'{image_id}.png', rng.integers(0, 256, (height, width, 3)))
        mask = np.zeros((height, width), dtype=np.uint8)
        mask[height // 4:height // 2, width // 4:3 * width // 4] = 255
        write_png(root / 'GT' / f'{image_id}.png', mask)
    return root


def tiny_config(**overrides):
    """Desk profile cut down to a couple of steps."""
    values = {'max_steps': 2, 'epochs': 1, 'synthetic_samples': 4, 'batch_size': 2, 'log_every': 1}
    values.update(overrides)
    return replace(PROFILES['desk'], **values)


class TempDirMixin:
    def setUp(self):
        super().setUp()
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()
        super().tearDown()
