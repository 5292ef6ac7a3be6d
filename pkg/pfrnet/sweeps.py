"""
Multi-run experiments: the lambda sensitivity sweep and the module ablation.

Each row trains one config and evaluates it on the config's ``eval_roots``;
a synthetic run without eval roots is scored on its own training set, saved
under the run directory. A failing row is recorded and the sweep continues.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import django

from .data import save_dataset
from .evaluation import evaluate_many
from .network import AblationVariant
from .training import train, training_samples

logger = logging.getLogger(__name__)

DEFAULT_LAMBDAS = (0.2, 0.3, 0.4, 0.5, 0.6)


def train_and_evaluate(config):
    """Train ``config`` and return its ``MetricReport`` dicts."""
    samples = training_samples(config)
    result = train(config, samples=samples)
    roots = list(config.eval_roots)
    if not roots:
        roots = [save_dataset(samples, result.run_dir / 'train_set')]
    reports = evaluate_many(result.best_checkpoint, roots, out_dir=result.run_dir / 'predictions')
    return [report.to_dict() for report in reports]


def _run_row(key, config):
    try:
        return key, train_and_evaluate(config), None
    except Exception as exc:
        logger.exception('Run %s failed', key)
        return key, [], f'{type(exc).__name__}: {exc}'


def _run_all(jobs, parallel=False, workers=None):
    if not parallel:
        return [_run_row(key, config) for key, config in jobs]
    # Children need configured settings whether they are forked or spawned
    with ProcessPoolExecutor(max_workers=workers, initializer=django.setup) as pool:
        futures = [pool.submit(_run_row, key, config) for key, config in jobs]
        return [future.result() for future in futures]


def _flatten(results, key_columns):
    rows = []
    for key, reports, error in results:
        keys = dict(zip(key_columns, key))
        if error is not None:
            rows.append({**keys, 'dataset': '-', 'error': error})
            continue
        for report in reports:
            rows.append({**keys, **report, 'error': None})
    return rows


def sweep_lambda(base, values=DEFAULT_LAMBDAS, parallel=False, workers=None):
    """One train+evaluate per lambda; rows ``(lambda, dataset, S, E, F, M)``."""
    values = list(values)
    if not values:
        raise ValueError('sweep_lambda needs at least one lambda value')
    jobs = [((lam,), replace(base, lam=lam)) for lam in values]
    logger.info('Sweeping lambda over %s', values)
    return _flatten(_run_all(jobs, parallel, workers), ('lambda',))


def run_ablation(base, variants=None, parallel=False, workers=None):
    """One train+evaluate per ablation variant; rows ``(letter, variant, dataset, S, E, F, M)``."""
    variants = [AblationVariant.parse(v) for v in (variants or list(AblationVariant))]
    jobs = [((variant.letter, variant.value), replace(base, variant=variant.value)) for variant in variants]
    logger.info('Ablating variants %s', ', '.join(v.letter for v in variants))
    return _flatten(_run_all(jobs, parallel, workers), ('letter', 'variant'))
