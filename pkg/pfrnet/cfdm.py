"""
Context-aware feature decoding.

Each level splits a 256-channel map into four 64-channel branches, couples
neighbouring branches through atrous context blocks, merges them back with a
lambda-scaled residual and decodes 1-channel logits. Levels run top-down:
``O3`` from ``RF3``, then ``(RF2, O3) -> O2`` and ``(RF1, O2) -> O1``.
"""
from dataclasses import dataclass
from typing import NamedTuple

import torch
import torch.nn as nn
import torch.nn.functional as F

from .blocks import ConvBlock, PlainConv, check_feature_map, resample
from .exceptions import ShapeError

WIDTH = 256
BRANCHES = 4
HEAD_RESIDUAL_SOURCES = ('y', 'z')


@dataclass(frozen=True)
class DecoderConfig:
    lam: float = 0.5
    # Residual input of the output head: the level input ``y`` or the merged ``Z``
    head_residual: str = 'y'

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f'lambda must lie in [0, 1], got {self.lam}')
        if self.head_residual not in HEAD_RESIDUAL_SOURCES:
            raise ValueError(f'head_residual must be one of {HEAD_RESIDUAL_SOURCES}, got {self.head_residual!r}')


class BranchSet(NamedTuple):
    y1: torch.Tensor
    y2: torch.Tensor
    y3: torch.Tensor
    y4: torch.Tensor


def split4(y):
    """Contiguous channel quarters of ``y``."""
    check_feature_map(y, 'y')
    channels = y.shape[1]
    if channels % BRANCHES:
        raise ShapeError(f'Channel count must be divisible by {BRANCHES}, got {channels}')
    return BranchSet(*torch.split(y, channels // BRANCHES, dim=1))


class Preprocess(nn.Module):
    """Guidance-gated residual: ``Conv3x3(rf * sigmoid(Up2(O_next)) + rf)``."""

    def __init__(self, width=WIDTH):
        super().__init__()
        self.conv = ConvBlock(width, width, 3)

    def gated(self, rf, o_next):
        check_feature_map(o_next, 'O_next')
        if o_next.shape[1] != 1:
            raise ShapeError(f'O_next must have 1 channel, got {o_next.shape[1]}')
        gate = torch.sigmoid(resample(o_next, scale=2))
        if gate.shape[-2:] != rf.shape[-2:]:
            raise ShapeError(
                f'O_next {tuple(o_next.shape[-2:])} is not half of RF {tuple(rf.shape[-2:])}'
            )
        return rf * gate + rf

    def forward(self, rf, o_next):
        return self.conv(self.gated(rf, o_next))


def context_block(index, channels=WIDTH // BRANCHES):
    """``CB_index``: conv blocks then a plain atrous 3x3 convolution.

    CB1: 1x1, d1 | CB2: 1x1, 3x1, d3 | CB3: 1x1, 1x3, d3 | CB4: 1x1, 3x1, 1x3, d5
    """
    layouts = {
        1: ((), 1),
        2: (((3, 1),), 3),
        3: (((1, 3),), 3),
        4: (((3, 1), (1, 3)), 5),
    }
    if index not in layouts:
        raise ValueError(f'Context block index must be 1..4, got {index}')
    kernels, dilation = layouts[index]
    layers = [ConvBlock(channels, channels, 1)]
    layers += [ConvBlock(channels, channels, kernel) for kernel in kernels]
    layers.append(PlainConv(channels, channels, 3, dilation=dilation))
    return nn.Sequential(*layers)


class BranchInteraction(nn.Module):
    """Couple each branch with its neighbours.

    ``z1 = CB1(y1 + y2)``, ``z2 = CB2(z1 + y2 + y3)``, ``z3 = CB3(z2 + y3 + y4)``,
    ``z4 = CB4(z3 + y4)``.
    """

    def __init__(self, channels=WIDTH // BRANCHES):
        super().__init__()
        self.blocks = nn.ModuleList([context_block(index, channels) for index in range(1, 5)])

    def forward(self, parts):
        y1, y2, y3, y4 = parts
        cb1, cb2, cb3, cb4 = self.blocks
        z1 = cb1(y1 + y2)
        z2 = cb2(z1 + y2 + y3)
        z3 = cb3(z2 + y3 + y4)
        z4 = cb4(z3 + y4)
        return z1, z2, z3, z4


def residual_merge(z, parts, config):
    """``Z = [y1 + lam*z1; ...; y4 + lam*z4]``."""
    return torch.cat([y + config.lam * zj for y, zj in zip(parts, z)], dim=1)


class DecoderHead(nn.Module):
    """``O = Conv1x1(ReLU(Conv1x1(Z)) + Conv1x1(residual))``, 1-channel logits."""

    def __init__(self, width=WIDTH):
        super().__init__()
        self.linear = PlainConv(width, width, 1)
        self.shortcut = PlainConv(width, width, 1)
        self.out = PlainConv(width, 1, 1)

    def forward(self, merged, residual):
        if merged.shape != residual.shape:
            raise ShapeError(f'Head inputs disagree: {tuple(merged.shape)} vs {tuple(residual.shape)}')
        return self.out(F.relu(self.linear(merged)) + self.shortcut(residual))


class DecoderLevel(nn.Module):
    """One CFDM level; the coarsest level has no preprocessing."""

    def __init__(self, config, top=False, width=WIDTH):
        super().__init__()
        self.config = config
        self.preprocess = None if top else Preprocess(width)
        self.interaction = BranchInteraction(width // BRANCHES)
        self.head = DecoderHead(width)

    def forward(self, rf, o_next=None):
        if self.preprocess is None:
            y = rf
        else:
            y = self.preprocess(rf, o_next)
        parts = split4(y)
        merged = residual_merge(self.interaction(parts), parts, self.config)
        residual = y if self.config.head_residual == 'y' else merged
        return self.head(merged, residual)


class ContextDecoder(nn.Module):
    """CFDM: ``(RF1, RF2, RF3) -> (O1, O2, O3)`` top-down."""

    def __init__(self, config=None):
        super().__init__()
        self.config = config or DecoderConfig()
        self.level3 = DecoderLevel(self.config, top=True)
        self.level2 = DecoderLevel(self.config)
        self.level1 = DecoderLevel(self.config)

    def forward(self, rf1, rf2, rf3):
        o3 = self.level3(rf3)
        o2 = self.level2(rf2, o3)
        o1 = self.level1(rf1, o2)
        return o1, o2, o3


class LinearDecoder(nn.Module):
    """Stand-in when CFDM is disabled: ``O_i = Conv1x1(RF_i)``."""

    def __init__(self, width=WIDTH):
        super().__init__()
        self.heads = nn.ModuleList([PlainConv(width, 1, 1) for _ in range(3)])

    def forward(self, rf1, rf2, rf3):
        return tuple(head(rf) for head, rf in zip(self.heads, (rf1, rf2, rf3)))
