"""
Adaptive feature fusion: deep-layer attention over f2..f4, spatial-channel
attention with f1, producing the coarse output O4 and the global guidance map.
"""
import torch
import torch.nn as nn

from .blocks import CBAM, ConvBlock, PlainConv, check_feature_map, resample
from .exceptions import ShapeError

WIDTH = 256
LOW_WIDTH = 128


class HighLevelProjection(nn.Module):
    """Project f2, f3, f4 to 256 channels and bring them all to f2's size (stride 8)."""

    def __init__(self, channels, width=WIDTH):
        super().__init__()
        self.convs = nn.ModuleList([ConvBlock(c, width, 1) for c in channels])

    def forward(self, f2, f3, f4):
        target = f2.shape[-2:]
        projected = []
        for conv, feature in zip(self.convs, (f2, f3, f4)):
            projected.append(resample(conv(feature), size=target))
        return tuple(projected)


class DeepLayerAttention(nn.Module):
    """Layer-to-layer attention over three same-shaped maps.

    ``w[i, j] = softmax_i(<phi(x_i), phi(x_j)>)`` with ``phi`` flattening a whole
    layer; ``x_j <- beta * sum_i w[i, j] x_i + x_j``; output is ``[x1; x2; x3]``.
    ``beta`` starts at exactly 0, so at initialization the module is a plain
    concatenation.
    """

    def __init__(self):
        super().__init__()
        self.beta = nn.Parameter(torch.zeros(1))

    @staticmethod
    def _stack(x1, x2, x3):
        for name, x in (('x1', x1), ('x2', x2), ('x3', x3)):
            check_feature_map(x, name)
        if not (x1.shape == x2.shape == x3.shape):
            raise ShapeError(
                f'DLA inputs must share a shape, got {tuple(x1.shape)}, {tuple(x2.shape)}, {tuple(x3.shape)}'
            )
        return torch.stack([x1, x2, x3], dim=1)

    def attention(self, x1, x2, x3):
        """The ``(B, 3, 3)`` weights; column ``j`` is a distribution over source ``i``."""
        flat = self._stack(x1, x2, x3).flatten(2)
        energy = torch.bmm(flat, flat.transpose(1, 2))
        return torch.softmax(energy, dim=1)

    def forward(self, x1, x2, x3):
        stacked = self._stack(x1, x2, x3)
        batch, layers, channels, height, width = stacked.shape
        flat = stacked.flatten(2)
        weights = torch.softmax(torch.bmm(flat, flat.transpose(1, 2)), dim=1)
        mixed = torch.einsum('bij,bin->bjn', weights, flat)
        updated = self.beta * mixed + flat
        return updated.view(batch, layers * channels, height, width)


class SpatialChannelAttention(nn.Module):
    """``Conv1x1 -> CBAM -> Conv3x3 -> Conv1x1`` over ``[x_l; x_h]``, giving 1-channel logits."""

    def __init__(self, in_channels=LOW_WIDTH + 3 * WIDTH, width=WIDTH):
        super().__init__()
        self.reduce = ConvBlock(in_channels, width, 1)
        self.cbam = CBAM(width)
        self.conv = ConvBlock(width, width, 3)
        self.out = PlainConv(width, 1, 1)

    def forward(self, x_l, x_h):
        if x_l.shape[0] != x_h.shape[0] or x_l.shape[-2:] != x_h.shape[-2:]:
            raise ShapeError(f'SCA inputs disagree: x_l {tuple(x_l.shape)} vs x_h {tuple(x_h.shape)}')
        x = torch.cat([x_l, x_h], dim=1)
        return self.out(self.conv(self.cbam(self.reduce(x))))


def make_ggi(o4):
    """Global guidance: ``sigmoid(O4)`` kept strictly inside (0, 1)."""
    check_feature_map(o4, 'O4', channels=1)
    eps = torch.finfo(o4.dtype).eps
    return torch.sigmoid(o4).clamp(eps, 1 - eps)


class AdaptiveFeatureFusion(nn.Module):
    """AFFM: pyramid -> (O4 logits, GGI), both at stride 8."""

    def __init__(self, channels):
        super().__init__()
        c1, c2, c3, c4 = channels
        self.high = HighLevelProjection((c2, c3, c4))
        self.dla = DeepLayerAttention()
        self.low = ConvBlock(c1, LOW_WIDTH, 1)
        self.sca = SpatialChannelAttention()

    def project_high(self, f2, f3, f4):
        return self.high(f2, f3, f4)

    def project_low(self, f1):
        """``x_l``: 1x1 conv block on f1, then bilinear downsampling to stride 8."""
        return resample(self.low(f1), scale=0.5)

    def forward(self, pyramid):
        f1, f2, f3, f4 = pyramid
        x_h = self.dla(*self.project_high(f2, f3, f4))
        x_l = self.project_low(f1)
        o4 = self.sca(x_l, x_h)
        return o4, make_ggi(o4)
