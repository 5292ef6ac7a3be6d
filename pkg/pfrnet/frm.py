"""
Feature refinement: gate each of f1..f3 by the global guidance map.
"""
import torch.nn as nn

from .blocks import ChannelAttention, ConvBlock, check_feature_map, resample
from .exceptions import ShapeError

WIDTH = 256

# GGI lives at stride 8; levels 1/2/3 sit at strides 4/8/16
GUIDANCE_SCALE = {1: 2, 2: 1, 3: 0.5}


class FeatureRefinement(nn.Module):
    """One level: ``RF = Conv1x1(CA(Conv3x3(CA(f)) * resample(GGI)))``."""

    def __init__(self, in_channels, level, width=WIDTH):
        super().__init__()
        if level not in GUIDANCE_SCALE:
            raise ValueError(f'Refinement level must be 1, 2 or 3, got {level}')
        self.level = level
        self.ca_in = ChannelAttention(in_channels)
        self.coarse = ConvBlock(in_channels, width, 3)
        self.ca_out = ChannelAttention(width)
        self.out = ConvBlock(width, width, 1)

    def guidance(self, ggi):
        """GGI resampled to this level's stride."""
        check_feature_map(ggi, 'GGI')
        if ggi.shape[1] != 1:
            raise ShapeError(f'GGI must have 1 channel, got {ggi.shape[1]}')
        return resample(ggi, scale=GUIDANCE_SCALE[self.level])

    def gated(self, f, ggi=None):
        """``g_refine``; without guidance it is ``g_coarse`` itself."""
        g_coarse = self.coarse(self.ca_in(f))
        if ggi is None:
            return g_coarse
        g_ggi = self.guidance(ggi)
        if g_ggi.shape[-2:] != g_coarse.shape[-2:]:
            raise ShapeError(
                f'Level {self.level} feature is {tuple(f.shape[-2:])} but guidance resamples '
                f'to {tuple(g_ggi.shape[-2:])}'
            )
        return g_coarse * g_ggi

    def forward(self, f, ggi=None):
        return self.out(self.ca_out(self.gated(f, ggi)))


class FeatureRefinementModule(nn.Module):
    """FRM over the three shallow levels."""

    def __init__(self, channels):
        super().__init__()
        self.levels = nn.ModuleList([
            FeatureRefinement(c, level) for level, c in zip((1, 2, 3), channels[:3])
        ])

    def forward(self, pyramid, ggi):
        return tuple(refine(f, ggi) for refine, f in zip(self.levels, pyramid[:3]))


class PlainProjection(nn.Module):
    """Stand-in when FRM is disabled: ``RF_i = Conv3x3(f_i)`` to 256 channels."""

    def __init__(self, channels, width=WIDTH):
        super().__init__()
        self.levels = nn.ModuleList([ConvBlock(c, width, 3) for c in channels[:3]])

    def forward(self, pyramid, ggi=None):
        return tuple(conv(f) for conv, f in zip(self.levels, pyramid[:3]))
