"""
Training losses on 1-channel logit maps against binary ground truth.

``total = sum_{i=1..3} structure(O_i, GT) + dice(O4, GT)`` where every
output is first resized bilinearly to the GT resolution. All losses are
computed per image and averaged over the batch.
"""
from typing import NamedTuple

import torch
import torch.nn.functional as F

from .blocks import resample
from .exceptions import LossInputError

DICE_SMOOTH = 1.0
WEIGHT_POOL = 31
WEIGHT_FACTOR = 5.0
IOU_EPS = 1e-8


class LossTerms(NamedTuple):
    total: torch.Tensor
    struct_o1: torch.Tensor
    struct_o2: torch.Tensor
    struct_o3: torch.Tensor
    dice_o4: torch.Tensor

    def as_floats(self):
        return {name: float(value.detach()) for name, value in self._asdict().items()}


def _check_inputs(logits, gt):
    if logits.shape != gt.shape:
        raise LossInputError(f'Logits {tuple(logits.shape)} and GT {tuple(gt.shape)} differ in shape')
    if not torch.all((gt == 0) | (gt == 1)):
        raise LossInputError('GT must be binary (values in {0, 1})')


def dice_loss(logits, gt, smooth=DICE_SMOOTH):
    """``1 - (2*sum(p*g) + s) / (sum(p) + sum(g) + s)`` with ``p = sigmoid(logits)``."""
    _check_inputs(logits, gt)
    p = torch.sigmoid(logits).flatten(1)
    g = gt.flatten(1)
    score = (2 * (p * g).sum(dim=1) + smooth) / (p.sum(dim=1) + g.sum(dim=1) + smooth)
    return (1 - score).mean()


def boundary_weights(gt):
    """``1 + 5*|avgpool31(gt) - gt|``: pixels near object boundaries weigh up to 6."""
    pooled = F.avg_pool2d(gt, kernel_size=WEIGHT_POOL, stride=1, padding=WEIGHT_POOL // 2)
    return 1 + WEIGHT_FACTOR * torch.abs(pooled - gt)


def weighted_bce(logits, gt):
    _check_inputs(logits, gt)
    weight = boundary_weights(gt)
    bce = F.binary_cross_entropy_with_logits(logits, gt, reduction='none')
    return ((weight * bce).sum(dim=(1, 2, 3)) / weight.sum(dim=(1, 2, 3))).mean()


def weighted_iou(logits, gt):
    _check_inputs(logits, gt)
    weight = boundary_weights(gt)
    p = torch.sigmoid(logits)
    inter = (weight * p * gt).sum(dim=(1, 2, 3))
    union = (weight * (p + gt - p * gt)).sum(dim=(1, 2, 3))
    return (1 - inter / (union + IOU_EPS)).mean()


def structure_loss(logits, gt):
    return weighted_bce(logits, gt) + weighted_iou(logits, gt)


def loss_terms(outputs, gt):
    """All terms of the total loss, each output resized to ``gt``'s resolution."""
    size = gt.shape[-2:]
    struct = [structure_loss(resample(o, size=size), gt) for o in (outputs.o1, outputs.o2, outputs.o3)]
    dice = dice_loss(resample(outputs.o4, size=size), gt)
    total = struct[0] + struct[1] + struct[2] + dice
    return LossTerms(total, struct[0], struct[1], struct[2], dice)


def total_loss(outputs, gt):
    return loss_terms(outputs, gt).total
