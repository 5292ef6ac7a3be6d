"""
COD evaluation metrics: S-measure, mean E-measure, weighted F-measure and MAE.

Maps are 2-D float64 arrays. Predictions lie in [0, 1]; ground truth is
boolean (or {0, 1}). Formulas and the empty-mask conventions follow the
widely used SOD evaluation toolbox, except that predictions are not
min-max rescaled: a map is scored as written.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image
from scipy.ndimage import convolve
from scipy.ndimage import distance_transform_edt as bwdist

from .conf import pfrnet_settings
from .exceptions import DatasetError, ShapeError

logger = logging.getLogger(__name__)

_EPS = np.spacing(1)
S_ALPHA = 0.5
F_BETA2 = 1.0
IMAGE_SUFFIXES = ('.png', '.jpg', '.jpeg', '.bmp')
METRIC_FIELDS = ('s_alpha', 'e_phi', 'f_beta_w', 'mae')


def _check_pair(pred, gt):
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt).astype(bool)
    if pred.ndim != 2 or pred.shape != gt.shape:
        raise ShapeError(f'Prediction {pred.shape} and GT {gt.shape} must be equal 2-D shapes')
    if not np.all(np.isfinite(pred)) or pred.min() < 0 or pred.max() > 1:
        raise ValueError('Prediction values must be finite and lie in [0, 1]')
    return pred, gt


def mae(pred, gt):
    pred, gt = _check_pair(pred, gt)
    return float(np.mean(np.abs(pred - gt)))


# S-measure

def s_measure(pred, gt, alpha=S_ALPHA):
    pred, gt = _check_pair(pred, gt)
    y = gt.mean()
    if y == 0:
        score = 1 - pred.mean()
    elif y == 1:
        score = pred.mean()
    else:
        score = alpha * _object_score(pred, gt) + (1 - alpha) * _region_score(pred, gt)
    return float(np.clip(score, 0.0, 1.0))


def _object_score(pred, gt):
    u = gt.mean()
    fg = _s_object(pred, gt)
    bg = _s_object(1 - pred, ~gt)
    return u * fg + (1 - u) * bg


def _s_object(pred, mask):
    values = pred[mask]
    x = values.mean()
    sigma_x = values.std(ddof=1) if values.size > 1 else 0.0
    return 2 * x / (x ** 2 + 1 + sigma_x + _EPS)


def _centroid(gt):
    h, w = gt.shape
    if not gt.any():
        return int(np.round(w / 2)) + 1, int(np.round(h / 2)) + 1
    y, x = np.argwhere(gt).mean(axis=0).round()
    return int(x) + 1, int(y) + 1


def _region_score(pred, gt):
    h, w = gt.shape
    x, y = _centroid(gt)
    x, y = min(x, w), min(y, h)
    area = h * w
    quadrants = (
        (np.s_[0:y, 0:x], x * y),
        (np.s_[0:y, x:w], y * (w - x)),
        (np.s_[y:h, 0:x], (h - y) * x),
        (np.s_[y:h, x:w], (h - y) * (w - x)),
    )
    score = 0.0
    for region, size in quadrants:
        if size:
            score += size / area * _ssim(pred[region], gt[region].astype(np.float64))
    return score


def _ssim(pred, gt):
    n = pred.size
    x = pred.mean()
    y = gt.mean()
    if n > 1:
        sigma_x = np.sum((pred - x) ** 2) / (n - 1)
        sigma_y = np.sum((gt - y) ** 2) / (n - 1)
        sigma_xy = np.sum((pred - x) * (gt - y)) / (n - 1)
    else:
        sigma_x = sigma_y = sigma_xy = 0.0
    alpha = 4 * x * y * sigma_xy
    beta = (x ** 2 + y ** 2) * (sigma_x + sigma_y)
    if alpha != 0:
        return alpha / (beta + _EPS)
    if beta == 0:
        return 1.0
    return 0.0


# E-measure

def e_measure_curve(pred, gt):
    """Enhanced-alignment score at every 8-bit threshold ``t = 1..255``."""
    pred, gt = _check_pair(pred, gt)
    quantized = np.round(pred * 255).astype(np.int64)
    bins = np.arange(257)
    fg_hist, _ = np.histogram(quantized[gt], bins=bins)
    bg_hist, _ = np.histogram(quantized[~gt], bins=bins)
    # Pixels >= t for t = 255..1
    fg_fg = np.cumsum(fg_hist[::-1])[:255]
    fg_bg = np.cumsum(bg_hist[::-1])[:255]

    size = gt.size
    gt_fg = np.count_nonzero(gt)
    pred_fg = fg_fg + fg_bg
    pred_bg = size - pred_fg

    if gt_fg == 0:
        enhanced = pred_bg.astype(np.float64)
    elif gt_fg == size:
        enhanced = pred_fg.astype(np.float64)
    else:
        bg_fg = gt_fg - fg_fg
        bg_bg = pred_bg - bg_fg
        mean_pred = pred_fg / size
        mean_gt = gt_fg / size
        parts = (
            (fg_fg, 1 - mean_pred, 1 - mean_gt),
            (fg_bg, 1 - mean_pred, -mean_gt),
            (bg_fg, -mean_pred, 1 - mean_gt),
            (bg_bg, -mean_pred, -mean_gt),
        )
        enhanced = np.zeros(255, dtype=np.float64)
        for count, p, g in parts:
            align = 2 * p * g / (p ** 2 + g ** 2 + _EPS)
            enhanced += (align + 1) ** 2 / 4 * count
    return (enhanced / size)[::-1]


def e_measure(pred, gt):
    """Mean E-measure over all thresholds."""
    return float(np.clip(e_measure_curve(pred, gt).mean(), 0.0, 1.0))


# Weighted F-measure

def gaussian_kernel(shape=(7, 7), sigma=5.0):
    m, n = [(extent - 1) / 2 for extent in shape]
    y, x = np.ogrid[-m:m + 1, -n:n + 1]
    kernel = np.exp(-(x * x + y * y) / (2 * sigma * sigma))
    kernel[kernel < np.finfo(kernel.dtype).eps * kernel.max()] = 0
    total = kernel.sum()
    if total:
        kernel /= total
    return kernel


def weighted_f(pred, gt, beta2=F_BETA2):
    pred, gt = _check_pair(pred, gt)
    if not gt.any():
        return 0.0

    dist, (idx_y, idx_x) = bwdist(~gt, return_indices=True)
    error = np.abs(pred - gt)
    # Background errors take the value of the nearest foreground pixel
    spread = error.copy()
    spread[~gt] = spread[idx_y[~gt], idx_x[~gt]]
    smoothed = convolve(spread, weights=gaussian_kernel(), mode='constant', cval=0)
    min_error = np.where(gt & (smoothed < error), smoothed, error)

    importance = np.where(gt, 1.0, 2 - np.exp(np.log(0.5) / 5 * dist))
    weighted = min_error * importance

    tp = gt.sum() - weighted[gt].sum()
    fp = weighted[~gt].sum()
    recall = 1 - weighted[gt].mean()
    precision = tp / (tp + fp + _EPS)
    score = (1 + beta2) * recall * precision / (recall + beta2 * precision + _EPS)
    return float(np.clip(score, 0.0, 1.0))


def score_pair(pred, gt):
    return {
        's_alpha': s_measure(pred, gt),
        'e_phi': e_measure(pred, gt),
        'f_beta_w': weighted_f(pred, gt),
        'mae': mae(pred, gt),
    }


# Map files

def read_prediction(path, size=None):
    """8-bit grayscale map as float64 in [0, 1], bilinearly resized to ``size`` (w, h)."""
    with Image.open(path) as image:
        image = image.convert('L')
        if size is not None and image.size != tuple(size):
            image = image.resize(tuple(size), Image.Resampling.BILINEAR)
        return np.asarray(image, dtype=np.float64) / 255.0


def read_mask(path):
    """Ground-truth map binarized at ``MASK_THRESHOLD``."""
    with Image.open(path) as image:
        return np.asarray(image.convert('L')) >= pfrnet_settings.MASK_THRESHOLD


def write_map(path, values):
    """Save a [0, 1] map as an 8-bit grayscale PNG."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pixels = np.round(np.clip(np.asarray(values, dtype=np.float64), 0, 1) * 255).astype(np.uint8)
    Image.fromarray(pixels).save(path)
    return path


def _index_maps(directory):
    directory = Path(directory)
    if not directory.is_dir():
        raise DatasetError(f'Not a directory: {directory}')
    maps = {}
    for path in sorted(directory.iterdir()):
        if path.suffix.lower() not in IMAGE_SUFFIXES:
            continue
        if path.stem in maps:
            raise DatasetError(f'Two maps for id {path.stem!r} in {directory}: {maps[path.stem].name}, {path.name}')
        maps[path.stem] = path
    return maps


@dataclass
class MetricReport:
    dataset: str
    model: str
    image_ids: list = field(default_factory=list)
    per_image: dict = field(default_factory=lambda: {name: [] for name in METRIC_FIELDS})

    @property
    def n_images(self):
        return len(self.image_ids)

    def mean(self, name):
        return float(np.mean(self.per_image[name])) if self.image_ids else float('nan')

    def means(self):
        return {name: self.mean(name) for name in METRIC_FIELDS}

    def to_dict(self):
        """Structured summary with dataset means rounded to 3 decimals."""
        summary = {'dataset': self.dataset, 'model': self.model}
        summary.update({name: round(value, 3) for name, value in self.means().items()})
        summary['n_images'] = self.n_images
        return summary


def evaluate_dataset(pred_dir, gt_dir, dataset=None, model='', workers=None):
    """
    Score every prediction in ``pred_dir`` against its same-stem map in ``gt_dir``.

    Metrics run at each GT's native resolution. Any file without a partner is
    an error; so are empty directories.
    """
    preds = _index_maps(pred_dir)
    gts = _index_maps(gt_dir)
    if not gts:
        raise DatasetError(f'No ground-truth maps in {gt_dir}')
    if not preds:
        raise DatasetError(f'No prediction maps in {pred_dir}')
    unmatched = sorted(set(preds) ^ set(gts))
    if unmatched:
        logger.warning('Unmatched maps between %s and %s: %s', pred_dir, gt_dir, unmatched)
        raise DatasetError(f'Unmatched prediction/GT files: {", ".join(unmatched)}')

    ids = sorted(gts)

    def score(image_id):
        gt = read_mask(gts[image_id])
        pred = read_prediction(preds[image_id], size=(gt.shape[1], gt.shape[0]))
        return score_pair(pred, gt)

    workers = workers or pfrnet_settings.EVAL_WORKERS
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(score, ids))

    report = MetricReport(dataset=dataset or Path(gt_dir).parent.name or Path(gt_dir).name, model=model)
    for image_id, row in zip(ids, rows):
        report.image_ids.append(image_id)
        for name in METRIC_FIELDS:
            report.per_image[name].append(row[name])
    logger.info('Evaluated %d maps of %s: %s', report.n_images, report.dataset, report.to_dict())
    return report


def format_table(rows, key_columns):
    """Plain-text table; ``rows`` are dicts sharing the ``key_columns + metric`` keys."""
    headers = list(key_columns) + ['S_alpha', 'E_phi', 'F_beta_w', 'MAE']
    lines = [headers]
    for row in rows:
        cells = [str(row.get(column, '')) for column in key_columns]
        for name in METRIC_FIELDS:
            value = row.get(name)
            cells.append('-' if value is None else f'{value:.3f}')
        lines.append(cells)
    widths = [max(len(line[i]) for line in lines) for i in range(len(headers))]
    return '\n'.join('  '.join(cell.ljust(width) for cell, width in zip(line, widths)).rstrip() for line in lines)
