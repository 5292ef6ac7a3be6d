"""
Image/mask datasets: directory ingestion, synthetic camouflage scenes and the
training input pipeline.

Directory layout::

    <root>/Imgs/<id>.jpg|png
    <root>/GT/<id>.png
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image
from scipy.ndimage import gaussian_filter
from torch.utils.data import Dataset

from .conf import pfrnet_settings
from .exceptions import DatasetError
from .metrics import read_mask

logger = logging.getLogger(__name__)

IMAGE_DIR = 'Imgs'
MASK_DIR = 'GT'
IMAGE_SUFFIXES = ('.jpg', '.jpeg', '.png')
SIZE_MULTIPLE = 32
FOREGROUND_RANGE = (0.05, 0.4)
MAX_SHIFT = 0.15


@dataclass(frozen=True)
class Sample:
    image: torch.Tensor  # (3, H, W) float32 in [0, 1]
    mask: torch.Tensor   # (1, H, W) float32 in {0, 1}
    id: str

    def __post_init__(self):
        if self.image.dim() != 3 or self.image.shape[0] != 3:
            raise DatasetError(f'{self.id}: image must be (3, H, W), got {tuple(self.image.shape)}')
        if self.mask.dim() != 3 or self.mask.shape[0] != 1:
            raise DatasetError(f'{self.id}: mask must be (1, H, W), got {tuple(self.mask.shape)}')
        if self.image.shape[-2:] != self.mask.shape[-2:]:
            raise DatasetError(
                f'{self.id}: image {tuple(self.image.shape[-2:])} and mask '
                f'{tuple(self.mask.shape[-2:])} differ in size'
            )
        if not torch.all((self.mask == 0) | (self.mask == 1)):
            raise DatasetError(f'{self.id}: mask is not binary')
        if not torch.all(torch.isfinite(self.image)) or self.image.min() < 0 or self.image.max() > 1:
            raise DatasetError(f'{self.id}: image values must lie in [0, 1]')

    @property
    def size(self):
        return tuple(self.image.shape[-2:])

    @property
    def foreground_fraction(self):
        return float(self.mask.mean())


# Directory datasets

def _index(directory, suffixes):
    found = {}
    for path in sorted(directory.iterdir()):
        if path.suffix.lower() not in suffixes:
            continue
        if path.stem in found:
            raise DatasetError(f'Two files for id {path.stem!r} in {directory}: {found[path.stem].name}, {path.name}')
        found[path.stem] = path
    return found


def read_image(path):
    with Image.open(path) as image:
        pixels = np.asarray(image.convert('RGB'), dtype=np.float32) / 255.0
    return torch.from_numpy(pixels).permute(2, 0, 1).contiguous()


def _load_pair(image_id, image_path, mask_path):
    image = read_image(image_path)
    mask = torch.from_numpy(read_mask(mask_path).astype(np.float32))[None]
    if mask.shape[-2:] != image.shape[-2:]:
        logger.warning(
            'Mask of %s is %s but image is %s; resampling mask (nearest)',
            image_id, tuple(mask.shape[-2:]), tuple(image.shape[-2:]),
        )
        mask = F.interpolate(mask[None], size=image.shape[-2:], mode='nearest')[0]
    return Sample(image, mask, image_id)


def load_dataset(root, workers=None):
    """Load all ``Imgs``/``GT`` pairs under ``root``, sorted by id."""
    root = Path(root)
    image_dir, mask_dir = root / IMAGE_DIR, root / MASK_DIR
    for directory in (image_dir, mask_dir):
        if not directory.is_dir():
            raise DatasetError(f'Missing dataset directory: {directory}')

    images = _index(image_dir, IMAGE_SUFFIXES)
    masks = _index(mask_dir, ('.png',))
    offenders = sorted(set(images) ^ set(masks))
    if offenders:
        raise DatasetError(f'Images without masks or masks without images in {root}: {", ".join(offenders)}')
    if not images:
        raise DatasetError(f'No samples in {root}')

    ids = sorted(images)
    with ThreadPoolExecutor(max_workers=workers or pfrnet_settings.EVAL_WORKERS) as pool:
        samples = list(pool.map(lambda i: _load_pair(i, images[i], masks[i]), ids))
    logger.info('Loaded %d samples from %s', len(samples), root)
    return samples


def save_dataset(samples, root):
    """Write ``samples`` as ``Imgs/<id>.png`` and ``GT/<id>.png``."""
    root = Path(root)
    (root / IMAGE_DIR).mkdir(parents=True, exist_ok=True)
    (root / MASK_DIR).mkdir(parents=True, exist_ok=True)
    for sample in samples:
        pixels = (sample.image.clamp(0, 1).permute(1, 2, 0).numpy() * 255).round().astype(np.uint8)
        Image.fromarray(pixels).save(root / IMAGE_DIR / f'{sample.id}.png')
        mask = (sample.mask[0].numpy() * 255).astype(np.uint8)
        Image.fromarray(mask).save(root / MASK_DIR / f'{sample.id}.png')
    return root


# Synthetic camouflage scenes

def _texture(rng, size, sigma):
    noise = gaussian_filter(rng.standard_normal((3, size, size)), sigma=(0, sigma, sigma))
    return noise / (noise.std() + 1e-8)


def _blob(rng, size):
    """Union of one to three random rotated ellipses."""
    yy, xx = np.mgrid[0:size, 0:size] / size
    mask = np.zeros((size, size), dtype=bool)
    for _ in range(rng.integers(1, 4)):
        cy, cx = rng.uniform(0.25, 0.75, size=2)
        ry, rx = rng.uniform(0.1, 0.3, size=2)
        angle = rng.uniform(0, np.pi)
        dy, dx = yy - cy, xx - cx
        u = dx * np.cos(angle) + dy * np.sin(angle)
        v = -dx * np.sin(angle) + dy * np.cos(angle)
        mask |= (u / rx) ** 2 + (v / ry) ** 2 <= 1
    return mask


def _shift(rng):
    return rng.choice((-1, 1)) * rng.uniform(0.5 * MAX_SHIFT, MAX_SHIFT)


def synth_sample(seed, index, size):
    rng = np.random.default_rng((seed, index))
    while True:
        mask = _blob(rng, size)
        if FOREGROUND_RANGE[0] <= mask.mean() <= FOREGROUND_RANGE[1]:
            break

    base = rng.uniform(0.3, 0.6, size=3)
    amplitude = rng.uniform(0.06, 0.12)
    grain = rng.uniform(1.0, 2.5)
    background = base[:, None, None] + amplitude * _texture(rng, size, grain)
    # Foreground keeps the background's look with colour, contrast and grain each moved <= 15%
    foreground = (
        base[:, None, None] * (1 + _shift(rng))
        + amplitude * (1 + _shift(rng)) * _texture(rng, size, grain * (1 + _shift(rng)))
    )
    image = np.clip(np.where(mask[None], foreground, background), 0.0, 1.0)
    return Sample(
        torch.from_numpy(image.astype(np.float32)),
        torch.from_numpy(mask[None].astype(np.float32)),
        f'synth_{seed}_{index:04d}',
    )


def synth_generate(seed, n, size):
    """``n`` deterministic camouflage-like samples of ``size`` x ``size`` pixels."""
    if size < SIZE_MULTIPLE or size % SIZE_MULTIPLE:
        raise DatasetError(f'Synthetic size must be a positive multiple of {SIZE_MULTIPLE}, got {size}')
    if n < 1:
        raise DatasetError(f'Need at least one synthetic sample, got n={n}')
    return [synth_sample(seed, index, size) for index in range(n)]


# Input pipeline

def hflip(sample):
    return Sample(sample.image.flip(-1), sample.mask.flip(-1), sample.id)


def resize(sample, resolution):
    size = (resolution, resolution)
    if sample.size == size:
        return sample
    image = F.interpolate(sample.image[None], size=size, mode='bilinear', align_corners=False)[0]
    mask = F.interpolate(sample.mask[None], size=size, mode='nearest')[0]
    return Sample(image.clamp(0, 1), mask, sample.id)


def augment(sample, seed, resolution=None):
    """Flip horizontally with probability 0.5, then resize to ``resolution``."""
    rng = np.random.default_rng(seed)
    if rng.random() < 0.5:
        sample = hflip(sample)
    return resize(sample, resolution or pfrnet_settings.TRAIN_RESOLUTION)


def normalize(image, mean=None, std=None):
    mean = pfrnet_settings.IMAGE_MEAN if mean is None else mean
    std = pfrnet_settings.IMAGE_STD if std is None else std
    mean = torch.as_tensor(mean, dtype=image.dtype, device=image.device)
    std = torch.as_tensor(std, dtype=image.dtype, device=image.device)
    return (image - mean.view(-1, 1, 1)) / std.view(-1, 1, 1)


class CamoDataset(Dataset):
    """
    Training view over a list of samples.

    Augmentation for item ``i`` in epoch ``e`` is seeded with ``(seed, e, i)``,
    so the stream is reproducible and resumable at any epoch.
    """

    def __init__(self, samples, resolution, seed=0, augment=True):
        if not samples:
            raise DatasetError('Training dataset is empty')
        self.samples = list(samples)
        self.resolution = resolution
        self.seed = seed
        self.augment = augment
        self.epoch = 0

    def set_epoch(self, epoch):
        self.epoch = epoch

    def __len__(self):
        return len(self.samples)

    def __getitem__(self, index):
        sample = self.samples[index]
        if self.augment:
            sample = augment(sample, (self.seed, self.epoch, index), self.resolution)
        else:
            sample = resize(sample, self.resolution)
        return normalize(sample.image), sample.mask
