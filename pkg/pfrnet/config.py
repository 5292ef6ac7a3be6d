"""
Training configuration.

A config file is flat ``key = value`` text mirroring ``TrainConfig`` fields.
``profile = desk|full`` picks the defaults the remaining keys override::

    # laptop smoke run
    profile = desk
    lam = 0.3
    eval_roots = data/CAMO-Test, data/COD10K-Test
"""
import hashlib
import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional

from .backbone import PRESETS
from .exceptions import ConfigError
from .network import AblationVariant

NULL_VALUES = ('', 'none', 'null')


@dataclass(frozen=True)
class TrainConfig:
    profile: str = 'desk'
    lr0: float = 1e-4
    lr_decay_every: int = 50
    lr_decay_factor: float = 10.0
    batch_size: int = 4
    epochs: int = 100
    # Hard stop on optimizer steps; None trains all epochs
    max_steps: Optional[int] = None
    lam: float = 0.5
    head_residual: str = 'y'
    variant: str = AblationVariant.FULL.value
    backbone: str = 'stub'
    pretrained_weights: Optional[str] = None
    resolution: int = 64
    seed: int = 0
    # 'synthetic' or an Imgs/GT dataset root
    train_root: str = 'synthetic'
    synthetic_samples: int = 8
    eval_roots: tuple = ()
    augment: bool = True
    log_every: int = 10

    def __post_init__(self):
        if self.lr0 <= 0:
            raise ConfigError(f'lr0 must be positive, got {self.lr0}')
        if self.batch_size < 1:
            raise ConfigError(f'batch_size must be at least 1, got {self.batch_size}')
        if self.resolution % 32:
            raise ConfigError(f'resolution must be divisible by 32, got {self.resolution}')
        if self.backbone not in PRESETS:
            raise ConfigError(f'Unknown backbone {self.backbone!r}; choose from {", ".join(PRESETS)}')
        try:
            variant = AblationVariant.parse(self.variant)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        object.__setattr__(self, 'variant', variant.value)
        object.__setattr__(self, 'eval_roots', tuple(str(root) for root in self.eval_roots))

    @property
    def ablation_variant(self):
        return AblationVariant.parse(self.variant)

    @property
    def backbone_spec(self):
        return replace(PRESETS[self.backbone], pretrained_weights_path=self.pretrained_weights)

    @property
    def is_synthetic(self):
        return self.train_root == 'synthetic'

    def to_dict(self):
        data = asdict(self)
        data['eval_roots'] = list(self.eval_roots)
        return data


PROFILES = {
    # Laptop CPU: 8 synthetic 64x64 samples, 200 steps, no decay inside the run
    'desk': TrainConfig(
        profile='desk',
        lr_decay_every=100,
        batch_size=4,
        epochs=100,
        max_steps=200,
        backbone='stub',
        resolution=64,
        train_root='synthetic',
        synthetic_samples=8,
        augment=False,
        log_every=10,
    ),
    # Presumed benchmark recipe: CAMO-train + COD10K-train, tested on CAMO, COD10K and NC4K
    'full': TrainConfig(
        profile='full',
        lr_decay_every=50,
        batch_size=36,
        epochs=100,
        backbone='res2net50',
        resolution=352,
        train_root='datasets/TrainDataset',
        eval_roots=(
            'datasets/TestDataset/CAMO',
            'datasets/TestDataset/COD10K',
            'datasets/TestDataset/NC4K',
        ),
        augment=True,
        log_every=50,
    ),
}

FIELD_NAMES = tuple(f.name for f in fields(TrainConfig))


def parse_assignment(text, origin='override'):
    if '=' not in text:
        raise ConfigError(f'{origin}: expected key=value, got {text!r}')
    key, value = (part.strip() for part in text.split('=', 1))
    if not key:
        raise ConfigError(f'{origin}: empty key in {text!r}')
    return key, None if value.lower() in NULL_VALUES else value


def read_config_file(path):
    """Raw ``{key: text}`` pairs from a config file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f'Config file not found: {path}')
    values = {}
    for number, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        key, value = parse_assignment(line, origin=f'{path}:{number}')
        values[key] = value
    return values


def parse_overrides(pairs):
    return dict(parse_assignment(pair) for pair in pairs or ())


def build_config(values):
    """Validate raw values on top of their profile's defaults."""
    from .serializers import TrainConfigSerializer

    values = dict(values)
    profile = values.pop('profile', None) or 'desk'
    if profile not in PROFILES:
        raise ConfigError(f'Unknown profile {profile!r}; choose from {", ".join(PROFILES)}')
    unknown = sorted(set(values) - set(FIELD_NAMES))
    if unknown:
        raise ConfigError(f'Unknown config keys: {", ".join(unknown)}')

    data = PROFILES[profile].to_dict()
    data.update(values)
    serializer = TrainConfigSerializer(data=data)
    if not serializer.is_valid():
        detail = '; '.join(f'{key}: {" ".join(map(str, errors))}' for key, errors in serializer.errors.items())
        raise ConfigError(f'Invalid config: {detail}')
    return serializer.save()


def load_config(path=None, overrides=()):
    values = read_config_file(path) if path else {}
    values.update(parse_overrides(overrides))
    return build_config(values)


def config_hash(config):
    canonical = json.dumps(config.to_dict(), sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode()).hexdigest()
