"""
Checkpoint format.

A checkpoint is a ``torch.save``-d dict::

    {
        'format': 'pfrnet-checkpoint/1',
        'model_state': ...,          # PFRNet.state_dict()
        'backbone': {...},           # BackboneSpec.to_dict()
        'variant': 'full',
        'decoder': {'lam': 0.5, 'head_residual': 'y'},
        'optimizer_state': ... | None,
        'epoch': int,                # epochs completed
        'batch': int,                # batches done in epoch 'epoch' (0 unless cut by max_steps)
        'step': int,                 # optimizer steps completed
        'train_config': {...} | None,
        'loss': float | None,
    }

Backbone weights are stored inside ``model_state``; the backbone spec's
``pretrained_weights_path`` is dropped so loading never needs that file.
"""
import logging
from dataclasses import asdict
from pathlib import Path

import torch

from .backbone import BackboneSpec
from .cfdm import DecoderConfig
from .exceptions import CheckpointError
from .network import PFRNet

logger = logging.getLogger(__name__)

FORMAT = 'pfrnet-checkpoint/1'


def save_checkpoint(path, model, optimizer=None, epoch=0, step=0, train_config=None, loss=None, batch=0):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    backbone = model.backbone_spec.to_dict()
    backbone['pretrained_weights_path'] = None
    payload = {
        'format': FORMAT,
        'model_state': model.state_dict(),
        'backbone': backbone,
        'variant': model.variant.value,
        'decoder': asdict(model.decoder_config),
        'optimizer_state': optimizer.state_dict() if optimizer is not None else None,
        'epoch': epoch,
        'batch': batch,
        'step': step,
        'train_config': train_config,
        'loss': loss,
    }
    # Atomic replace: readers never see a truncated checkpoint
    partial = path.with_suffix(path.suffix + '.partial')
    torch.save(payload, partial)
    partial.replace(path)
    logger.info('Saved checkpoint %s (epoch %d, step %d)', path, epoch, step)
    return path


def read_checkpoint(path):
    """Load and validate the raw checkpoint payload."""
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f'Checkpoint not found: {path}')
    try:
        payload = torch.load(path, map_location='cpu', weights_only=False)
    except Exception as exc:
        raise CheckpointError(f'Could not read checkpoint {path}: {exc}') from exc
    if not isinstance(payload, dict) or payload.get('format') != FORMAT:
        raise CheckpointError(f'{path} is not a {FORMAT} file')
    return payload


def load_checkpoint(path):
    """Rebuild the network stored at ``path``; returns ``(model, payload)``."""
    payload = read_checkpoint(path)
    model = PFRNet(
        BackboneSpec.from_dict(payload['backbone']),
        payload['variant'],
        DecoderConfig(**payload['decoder']),
    )
    model.load_state_dict(payload['model_state'])
    return model, payload
