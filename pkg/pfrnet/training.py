"""
Training loop: Adam with a staircase learning rate, seeded end to end.

Every artifact of a run lives in ``<RUN_ROOT>/<config-hash[:12]>-<timestamp>/``::

    config.json      the TrainConfig
    last.pt          checkpoint after the latest epoch
    best.pt          checkpoint of the lowest epoch-mean loss
    train_log.json   per-step losses, per-epoch learning rates, wall time
"""
import json
import logging
import math
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import NamedTuple

import numpy as np
import torch
from django.utils import timezone
from torch.utils.data import DataLoader

from .checkpoints import read_checkpoint, save_checkpoint
from .conf import pfrnet_settings
from .config import config_hash
from .data import CamoDataset, load_dataset, synth_generate
from .exceptions import DatasetError, TrainingDiverged
from .losses import loss_terms
from .network import build_network

logger = logging.getLogger(__name__)

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8
# May change between a checkpoint and its resumed run without a warning
RUN_LENGTH_FIELDS = ('epochs', 'max_steps', 'log_every')


def learning_rate(config, epoch):
    """``lr0 / factor ** (epoch // every)`` for a 0-based epoch, in exact decimal arithmetic."""
    if epoch < 0:
        raise ValueError(f'Epoch must be non-negative, got {epoch}')
    decays = epoch // config.lr_decay_every
    lr = Fraction(str(config.lr0)) / Fraction(str(config.lr_decay_factor)) ** decays
    return float(lr)


def seed_everything(seed):
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)
    torch.use_deterministic_algorithms(True, warn_only=True)


def make_run_dir(config, root=None):
    root = Path(root or pfrnet_settings.RUN_ROOT)
    stamp = timezone.now().strftime('%Y%m%dT%H%M%S%f')
    path = root / f'{config_hash(config)[:12]}-{stamp}'
    path.mkdir(parents=True, exist_ok=False)
    return path


def training_samples(config):
    if config.is_synthetic:
        return synth_generate(config.seed, config.synthetic_samples, config.resolution)
    return load_dataset(config.train_root)


@dataclass
class TrainLog:
    steps: list = field(default_factory=list)
    epochs: list = field(default_factory=list)
    wall_time: float = 0.0

    def record_step(self, step, epoch, terms):
        if self.steps and step <= self.steps[-1]['step']:
            raise ValueError(f'Step {step} does not follow {self.steps[-1]["step"]}')
        self.steps.append({'step': step, 'epoch': epoch, **terms})

    def record_epoch(self, epoch, lr, mean_loss):
        self.epochs.append({'epoch': epoch, 'lr': lr, 'mean_loss': mean_loss})

    @property
    def losses(self):
        return [entry['total'] for entry in self.steps]

    @property
    def learning_rates(self):
        return [entry['lr'] for entry in self.epochs]

    def to_dict(self):
        return {'steps': self.steps, 'epochs': self.epochs, 'wall_time': self.wall_time}

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path):
        data = json.loads(Path(path).read_text())
        return cls(steps=data['steps'], epochs=data['epochs'], wall_time=data['wall_time'])


class TrainResult(NamedTuple):
    checkpoint: Path
    best_checkpoint: Path
    log: TrainLog
    run_dir: Path
    model: torch.nn.Module


def _config_changes(stored, config):
    """Fields, other than run length, on which ``config`` differs from a checkpoint's config."""
    current = config.to_dict()
    return [
        f'{name} {stored.get(name)!r} -> {value!r}'
        for name, value in current.items()
        if name not in RUN_LENGTH_FIELDS and stored.get(name) != value
    ]


def train(config, samples=None, run_dir=None, resume=None):
    """
    Train ``config`` on ``samples`` (default: the config's training set).

    With ``resume`` the run continues inside the checkpoint's run directory
    from the first batch the checkpoint has not seen, which may lie inside an
    epoch cut short by ``max_steps``. Batch order and augmentation depend only
    on ``(seed, epoch, index)``, so a resumed run repeats the uninterrupted one.
    """
    seed_everything(config.seed)
    samples = training_samples(config) if samples is None else list(samples)
    if not samples:
        raise DatasetError('Cannot train on an empty dataset')
    dataset = CamoDataset(samples, config.resolution, seed=config.seed, augment=config.augment)

    model = build_network(config.backbone_spec, config.variant, config.lam, config.head_residual)
    optimizer = torch.optim.Adam(
        model.parameters(), lr=config.lr0, betas=ADAM_BETAS, eps=ADAM_EPS, weight_decay=0,
    )

    start_epoch, start_batch, step, best_loss = 0, 0, 0, math.inf
    log = TrainLog()
    if resume is not None:
        payload = read_checkpoint(resume)
        changes = _config_changes(payload.get('train_config') or {}, config)
        if payload.get('train_config') is not None and changes:
            logger.warning('Resuming %s with a changed config: %s', resume, '; '.join(changes))
        model.load_state_dict(payload['model_state'])
        optimizer.load_state_dict(payload['optimizer_state'])
        start_epoch, start_batch, step = payload['epoch'], payload.get('batch', 0), payload['step']
        run_dir = Path(resume).parent
        if (run_dir / 'train_log.json').is_file():
            log = TrainLog.load(run_dir / 'train_log.json')
            # Drop anything logged after the checkpoint was written
            log.steps = [entry for entry in log.steps if entry['step'] <= step]
            log.epochs = [entry for entry in log.epochs if entry['epoch'] < start_epoch]
        if (run_dir / 'best.pt').is_file():
            best_loss = read_checkpoint(run_dir / 'best.pt')['loss']
        logger.info('Resuming %s at epoch %d, batch %d, step %d', resume, start_epoch, start_batch, step)
    else:
        run_dir = Path(run_dir) if run_dir else make_run_dir(config)
        run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / 'config.json').write_text(json.dumps(config.to_dict(), indent=2))

    last_path, best_path = run_dir / 'last.pt', run_dir / 'best.pt'
    started = time.monotonic()
    current_lr = None
    for epoch in range(start_epoch, config.epochs):
        if config.max_steps and step >= config.max_steps:
            break
        lr = learning_rate(config, epoch)
        if lr != current_lr:
            logger.info('Epoch %d: learning rate %g', epoch, lr)
            for group in optimizer.param_groups:
                group['lr'] = lr
            current_lr = lr

        dataset.set_epoch(epoch)
        loader = DataLoader(
            dataset, batch_size=config.batch_size, shuffle=True,
            generator=torch.Generator().manual_seed(config.seed + epoch),
        )
        skip = start_batch if epoch == start_epoch else 0
        epoch_losses = [entry['total'] for entry in log.steps if entry['epoch'] == epoch] if skip else []
        done = skip
        model.train()
        for index, (images, masks) in enumerate(loader):
            if index < skip:
                continue
            outputs = model(images)
            terms = loss_terms(outputs, masks)
            values = terms.as_floats()
            if not torch.isfinite(terms.total):
                raise TrainingDiverged(step + 1, values)
            optimizer.zero_grad()
            terms.total.backward()
            optimizer.step()

            step += 1
            done = index + 1
            log.record_step(step, epoch, values)
            epoch_losses.append(values['total'])
            if step == 1 or step % config.log_every == 0:
                logger.info('Step %d (epoch %d): loss %.4f', step, epoch, values['total'])
            if config.max_steps and step >= config.max_steps:
                break

        payload = {'train_config': config.to_dict()}
        if done < len(loader):
            # Cut by max_steps: not a finished epoch, so no epoch record and no best.pt
            save_checkpoint(last_path, model, optimizer, epoch=epoch, batch=done, step=step, **payload)
            break
        mean_loss = float(np.mean(epoch_losses))
        log.record_epoch(epoch, lr, mean_loss)
        save_checkpoint(last_path, model, optimizer, epoch=epoch + 1, step=step, loss=mean_loss, **payload)
        if mean_loss < best_loss:
            best_loss = mean_loss
            save_checkpoint(best_path, model, optimizer, epoch=epoch + 1, step=step, loss=mean_loss, **payload)

    log.wall_time += time.monotonic() - started
    log.save(run_dir / 'train_log.json')
    if not last_path.is_file():
        save_checkpoint(
            last_path, model, optimizer, epoch=start_epoch, batch=start_batch, step=step,
            train_config=config.to_dict(),
        )
    if not best_path.is_file():
        best_path = last_path
    logger.info('Finished %d steps in %.1fs; run directory %s', step, log.wall_time, run_dir)
    return TrainResult(last_path, best_path, log, run_dir, model)
