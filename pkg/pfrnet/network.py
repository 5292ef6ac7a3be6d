"""
PFRNet assembly: backbone -> AFFM -> FRM -> CFDM, plus the ablation variants.
"""
import enum
from typing import NamedTuple

import torch
import torch.nn as nn

from .affm import WIDTH, AdaptiveFeatureFusion, HighLevelProjection
from .backbone import STUB, build_backbone
from .blocks import PlainConv, check_feature_map, init_weights, resample
from .cfdm import ContextDecoder, DecoderConfig, LinearDecoder
from .frm import FeatureRefinementModule, PlainProjection


class NetworkOutputs(NamedTuple):
    o1: torch.Tensor
    o2: torch.Tensor
    o3: torch.Tensor
    o4: torch.Tensor
    ggi: torch.Tensor


class AblationVariant(enum.Enum):
    BASE = 'base'
    BASE_CFDM = 'base+cfdm'
    BASE_AFFM_FRM = 'base+affm+frm'
    BASE_FRM_CFDM = 'base+frm+cfdm'
    FULL = 'full'

    @property
    def letter(self):
        return 'ABCDE'[list(AblationVariant).index(self)]

    @property
    def use_affm(self):
        return self in (AblationVariant.BASE_AFFM_FRM, AblationVariant.FULL)

    @property
    def use_frm(self):
        return self in (AblationVariant.BASE_AFFM_FRM, AblationVariant.BASE_FRM_CFDM, AblationVariant.FULL)

    @property
    def use_cfdm(self):
        return self in (AblationVariant.BASE_CFDM, AblationVariant.BASE_FRM_CFDM, AblationVariant.FULL)

    @classmethod
    def parse(cls, value):
        """Accept a variant value (``'base+cfdm'``), name (``'FULL'``) or letter (``'E'``)."""
        if isinstance(value, cls):
            return value
        text = str(value).strip()
        for variant in cls:
            if text.lower() == variant.value or text.upper() == variant.name or text.upper() == variant.letter:
                return variant
        raise ValueError(f'Unknown ablation variant {value!r}')


class PlainFusion(nn.Module):
    """Stand-in when AFFM is disabled: O4 from a 1x1 conv on ``x_h``, GGI fixed at 0.5."""

    def __init__(self, channels):
        super().__init__()
        self.high = HighLevelProjection(channels[1:])
        self.out = PlainConv(3 * WIDTH, 1, 1)

    def forward(self, pyramid):
        _, f2, f3, f4 = pyramid
        x_h = torch.cat(self.high(f2, f3, f4), dim=1)
        o4 = self.out(x_h)
        return o4, torch.full_like(o4, 0.5)


class PFRNet(nn.Module):
    def __init__(self, backbone_spec=STUB, variant=AblationVariant.FULL, decoder_config=None):
        super().__init__()
        self.backbone_spec = backbone_spec
        self.variant = AblationVariant.parse(variant)
        self.decoder_config = decoder_config or DecoderConfig()

        channels = backbone_spec.channels
        self.backbone = build_backbone(backbone_spec)
        self.fusion = AdaptiveFeatureFusion(channels) if self.variant.use_affm else PlainFusion(channels)
        self.refinement = FeatureRefinementModule(channels) if self.variant.use_frm else PlainProjection(channels)
        self.decoder = ContextDecoder(self.decoder_config) if self.variant.use_cfdm else LinearDecoder()

        # Pretrained backbone weights must survive initialization
        for part in (self.fusion, self.refinement, self.decoder):
            init_weights(part)

    def forward(self, image):
        pyramid = self.backbone(image)
        o4, ggi = self.fusion(pyramid)
        rf1, rf2, rf3 = self.refinement(pyramid, ggi)
        o1, o2, o3 = self.decoder(rf1, rf2, rf3)
        return NetworkOutputs(o1, o2, o3, o4, ggi)

    @torch.no_grad()
    def predict(self, image):
        """``sigmoid(O1)`` resized to the input resolution, values in [0, 1]."""
        check_feature_map(image, 'image', channels=3)
        return prediction_from_logits(self(image).o1, image.shape[-2:])


def prediction_from_logits(o1, size):
    return resample(torch.sigmoid(o1), size=size).clamp(0.0, 1.0)


def build_network(backbone_spec=STUB, variant=AblationVariant.FULL, lam=0.5, head_residual='y'):
    return PFRNet(backbone_spec, variant, DecoderConfig(lam=lam, head_residual=head_residual))
