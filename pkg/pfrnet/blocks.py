"""
Shared building blocks for AFFM, FRM and CFDM.

Feature maps are ``(batch, channels, height, width)`` float tensors.
"""
import math
from fractions import Fraction

import torch
import torch.nn as nn
import torch.nn.functional as F

from .exceptions import ShapeError


def _pair(value):
    if isinstance(value, int):
        return value, value
    return tuple(value)


def same_padding(kernel_size, dilation=1):
    """Padding that keeps the spatial size for stride 1: ``d * (k - 1) / 2`` per axis."""
    kernel_h, kernel_w = _pair(kernel_size)
    if kernel_h % 2 == 0 or kernel_w % 2 == 0:
        raise ValueError(f'Kernel must be odd, got {kernel_size}')
    return dilation * (kernel_h - 1) // 2, dilation * (kernel_w - 1) // 2


def check_feature_map(x, name='x', channels=None):
    """Validate a ``(B, C, H, W)`` tensor, optionally with a fixed channel count."""
    if x.dim() != 4 or min(x.shape) < 1:
        raise ShapeError(f'{name} must be a non-empty (B, C, H, W) tensor, got {tuple(x.shape)}')
    if channels is not None and x.shape[1] != channels:
        raise ShapeError(f'{name} must have {channels} channels, got {x.shape[1]}')
    return x


class ConvBlock(nn.Sequential):
    """Convolution -> batch normalization -> SiLU with same padding.

    The convolution is bias-free; the BN shift plays the role of the bias.
    """

    def __init__(self, in_channels, out_channels, kernel_size=3, dilation=1, stride=1):
        if out_channels <= 0:
            raise ValueError(f'out_channels must be positive, got {out_channels}')
        if dilation < 1:
            raise ValueError(f'dilation must be >= 1, got {dilation}')
        super().__init__(
            nn.Conv2d(
                in_channels, out_channels, kernel_size,
                stride=stride,
                padding=same_padding(kernel_size, dilation),
                dilation=dilation,
                bias=False,
            ),
            nn.BatchNorm2d(out_channels, eps=1e-5, momentum=0.1, affine=True),
            nn.SiLU(),
        )


class PlainConv(nn.Conv2d):
    """Same-padded convolution without normalization or activation.

    Accepts asymmetric kernels such as ``(1, 3)`` and dilation rates for the
    atrous terms of the context blocks.
    """

    def __init__(self, in_channels, out_channels, kernel_size=3, dilation=1, bias=True):
        if out_channels <= 0:
            raise ValueError(f'out_channels must be positive, got {out_channels}')
        if dilation < 1:
            raise ValueError(f'dilation must be >= 1, got {dilation}')
        super().__init__(
            in_channels, out_channels, kernel_size,
            padding=same_padding(kernel_size, dilation),
            dilation=dilation,
            bias=bias,
        )


class ChannelGate(nn.Module):
    """CBAM channel branch: shared bottleneck over avg- and max-pooled descriptors."""

    def __init__(self, channels, reduction=16):
        super().__init__()
        hidden = max(channels // reduction, 1)
        self.mlp = nn.Sequential(
            nn.Conv2d(channels, hidden, 1, bias=False),
            nn.ReLU(inplace=True),
            nn.Conv2d(hidden, channels, 1, bias=False),
        )

    def forward(self, x):
        avg = self.mlp(F.adaptive_avg_pool2d(x, 1))
        peak = self.mlp(F.adaptive_max_pool2d(x, 1))
        return torch.sigmoid(avg + peak)


class SpatialGate(nn.Module):
    """CBAM spatial branch: 7x7 convolution over channel-wise mean and max."""

    def __init__(self, kernel_size=7):
        super().__init__()
        self.conv = nn.Conv2d(2, 1, kernel_size, padding=same_padding(kernel_size), bias=False)

    def forward(self, x):
        avg = torch.mean(x, dim=1, keepdim=True)
        peak, _ = torch.max(x, dim=1, keepdim=True)
        return torch.sigmoid(self.conv(torch.cat([avg, peak], dim=1)))


class CBAM(nn.Module):
    """Convolutional block attention: channel gate, then spatial gate."""

    def __init__(self, channels, reduction=16, kernel_size=7):
        super().__init__()
        if channels < 2:
            raise ValueError(f'CBAM needs at least 2 channels, got {channels}')
        self.channel_gate = ChannelGate(channels, reduction)
        self.spatial_gate = SpatialGate(kernel_size)

    def forward(self, x):
        x = x * self.channel_gate(x)
        return x * self.spatial_gate(x)


class ChannelAttention(nn.Module):
    """Efficient channel attention.

    Global average pooling, a 1-D convolution across the channel axis and a
    sigmoid give one gate per channel.
    """

    def __init__(self, channels, kernel_size=3):
        super().__init__()
        if channels < 2:
            raise ValueError(f'Channel attention needs at least 2 channels, got {channels}')
        self.conv = nn.Conv1d(1, 1, kernel_size, padding=(kernel_size - 1) // 2, bias=False)

    def gate(self, x):
        """Per-channel gates in (0, 1), shaped ``(B, C, 1, 1)``."""
        pooled = F.adaptive_avg_pool2d(x, 1)
        mixed = self.conv(pooled.squeeze(-1).transpose(-1, -2))
        return torch.sigmoid(mixed.transpose(-1, -2).unsqueeze(-1))

    def forward(self, x):
        return x * self.gate(x)


def resample(x, scale=None, size=None):
    """Bilinearly resize ``x`` by a positive ``scale`` or to an explicit ``size``."""
    check_feature_map(x)
    height, width = x.shape[-2:]
    if size is None:
        if scale is None or scale <= 0:
            raise ValueError(f'scale must be positive, got {scale}')
        ratio = Fraction(scale).limit_denominator(1024)
        size = (round(height * ratio), round(width * ratio))
    size = tuple(int(extent) for extent in size)
    if min(size) < 1:
        raise ShapeError(f'Resampling {tuple(x.shape[-2:])} by {scale} gives an empty map {size}')
    if size == (height, width):
        return x
    return F.interpolate(x, size=size, mode='bilinear', align_corners=False)


def init_weights(module):
    """Fan-out scaled normal init for convolutions; BN scale 1, shift 0."""
    for layer in module.modules():
        if isinstance(layer, nn.Conv2d):
            nn.init.kaiming_normal_(layer.weight, mode='fan_out', nonlinearity='relu')
            if layer.bias is not None:
                nn.init.zeros_(layer.bias)
        elif isinstance(layer, nn.BatchNorm2d):
            nn.init.ones_(layer.weight)
            nn.init.zeros_(layer.bias)
        elif isinstance(layer, nn.Conv1d):
            fan_out = layer.out_channels * layer.kernel_size[0]
            nn.init.normal_(layer.weight, std=math.sqrt(2.0 / fan_out))
