"""
Backbones producing the four-level feature pyramid f1..f4 (strides 4/8/16/32).

Two implementations share one contract:

- ``StubBackbone``: four stages of (strided 3x3 conv block, residual 3x3 conv
  block); tiny, random-initialized, used for desk-scale runs and tests.
- ``Res2NetBackbone``: Res2Net-50 (26w x 4s) through ``timm``'s feature
  extractor. Pretrained weights are an optional ``torch.save``-d state dict
  (the standard ``.pth`` format) named by ``BackboneSpec.pretrained_weights_path``.
"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional

import timm
import torch
import torch.nn as nn
from torch.nn.modules.utils import consume_prefix_in_state_dict_if_present

from .blocks import ConvBlock, check_feature_map, init_weights
from .exceptions import CheckpointError, ShapeError

logger = logging.getLogger(__name__)

STRIDES = (4, 8, 16, 32)


class FeaturePyramid(NamedTuple):
    f1: torch.Tensor
    f2: torch.Tensor
    f3: torch.Tensor
    f4: torch.Tensor


@dataclass(frozen=True)
class BackboneSpec:
    name: str
    channels: tuple = (16, 32, 64, 128)
    pretrained_weights_path: Optional[str] = None

    def __post_init__(self):
        if len(self.channels) != 4 or any(int(c) <= 0 for c in self.channels):
            raise ValueError(f'Backbone needs four positive channel counts, got {self.channels}')
        object.__setattr__(self, 'channels', tuple(int(c) for c in self.channels))

    def to_dict(self):
        return {
            'name': self.name,
            'channels': list(self.channels),
            'pretrained_weights_path': self.pretrained_weights_path,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            name=data['name'],
            channels=tuple(data['channels']),
            pretrained_weights_path=data.get('pretrained_weights_path'),
        )


STUB = BackboneSpec('stub', (16, 32, 64, 128))
RES2NET50 = BackboneSpec('res2net50', (256, 512, 1024, 2048))
# Stub architecture with Res2Net-50 channel widths: full-size shapes at stub cost
RES2NET50_SHAPED_STUB = BackboneSpec('stub', (256, 512, 1024, 2048))

PRESETS = {
    'stub': STUB,
    'res2net50': RES2NET50,
    'res2net50-stub': RES2NET50_SHAPED_STUB,
}


class Backbone(nn.Module):
    """Common input validation for all backbones."""

    def __init__(self, spec):
        super().__init__()
        self.spec = spec

    def forward(self, image):
        check_feature_map(image, 'image', channels=3)
        height, width = image.shape[-2:]
        if height % 32 or width % 32:
            raise ShapeError(f'Image size must be divisible by 32, got {height}x{width}')
        return FeaturePyramid(*self.extract(image))

    def extract(self, image):
        raise NotImplementedError


class StubStage(nn.Module):
    """Strided 3x3 conv block followed by one residual 3x3 conv block."""

    def __init__(self, in_channels, out_channels, stride):
        super().__init__()
        self.down = ConvBlock(in_channels, out_channels, 3, stride=stride)
        self.residual = ConvBlock(out_channels, out_channels, 3)

    def forward(self, x):
        x = self.down(x)
        return x + self.residual(x)


class StubBackbone(Backbone):
    def __init__(self, spec):
        super().__init__(spec)
        c1, c2, c3, c4 = spec.channels
        self.stages = nn.ModuleList([
            StubStage(3, c1, stride=4),
            StubStage(c1, c2, stride=2),
            StubStage(c2, c3, stride=2),
            StubStage(c3, c4, stride=2),
        ])
        init_weights(self)

    def extract(self, image):
        features = []
        x = image
        for stage in self.stages:
            x = stage(x)
            features.append(x)
        return features


class Res2NetBackbone(Backbone):
    """Res2Net-50 stages 1-4; the stem level is excluded."""

    model_name = 'res2net50_26w_4s'

    def __init__(self, spec):
        super().__init__(spec)
        self.body = timm.create_model(
            self.model_name, features_only=True, out_indices=(1, 2, 3, 4), pretrained=False,
        )
        produced = tuple(self.body.feature_info.channels())
        if produced != spec.channels:
            raise ValueError(f'{self.model_name} produces channels {produced}, spec declares {spec.channels}')
        if spec.pretrained_weights_path:
            self.load_pretrained(spec.pretrained_weights_path)

    def load_pretrained(self, path):
        path = Path(path)
        if not path.is_file():
            raise CheckpointError(f'Backbone weights file not found: {path}')
        state = torch.load(path, map_location='cpu', weights_only=True)
        if isinstance(state, dict) and 'state_dict' in state:
            state = state['state_dict']
        if not isinstance(state, dict):
            raise CheckpointError(f'{path} does not hold a state dict')
        # DataParallel dumps prefix every key with 'module.'
        consume_prefix_in_state_dict_if_present(state, 'module.')
        try:
            # Unexpected keys are the classifier (fc.*), absent from the feature extractor
            result = self.body.load_state_dict(state, strict=False)
        except RuntimeError as exc:
            raise CheckpointError(f'{path} does not match {self.model_name}: {exc}') from exc
        missing = [key for key in result.missing_keys if not key.endswith('num_batches_tracked')]
        if missing:
            shown = ', '.join(missing[:5])
            raise CheckpointError(
                f'{path} does not match {self.model_name}: {len(missing)} backbone tensors missing ({shown}, ...)'
            )
        logger.info(
            'Loaded backbone weights from %s (%d unused keys)', path, len(result.unexpected_keys),
        )

    def extract(self, image):
        return self.body(image)


def build_backbone(spec):
    """Instantiate the backbone named by ``spec``."""
    if spec.name == 'stub':
        if spec.pretrained_weights_path:
            raise CheckpointError('The stub backbone has no pretrained weights')
        return StubBackbone(spec)
    if spec.name == 'res2net50':
        return Res2NetBackbone(spec)
    raise ValueError(f'Unknown backbone {spec.name!r}; expected one of stub, res2net50')


def extract_features(image, backbone):
    """Run ``backbone`` on ``image`` and return its ``FeaturePyramid``."""
    return backbone(image)
