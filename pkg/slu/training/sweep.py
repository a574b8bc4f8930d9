"""Experiment grids: the λ sweep and the variant comparison."""

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import pandas as pd

from slu.data import EncodedSession, Vocab
from slu.models import SluVariant

from .config import ConfigError, TrainConfig
from .trainer import evaluate, fit

logger = logging.getLogger(__name__)

SWEEP_COLUMNS = ['lambda', 'seed', 'slot_f1', 'intent_acc']
COMPARE_COLUMNS = ['variant', 'dli', 'seed', 'slot_p', 'slot_r', 'slot_f1', 'intent_acc']
MEAN = 'mean'


def _run_job(job: Tuple[TrainConfig, Sequence[EncodedSession], Sequence[EncodedSession],
                        Optional[Sequence[EncodedSession]], Vocab]) -> Dict:
    """Train one configuration; score the best checkpoint on ``test`` (or dev)."""
    config, train, dev, test, vocab = job
    result = fit(config, train, dev, vocab)
    report = result.report
    if test is not None:
        report, _ = evaluate(result.checkpoint.build_model(), test, vocab, config.eval_workers)
    return {
        'slot_p': report.slot.precision * 100.0,
        'slot_r': report.slot.recall * 100.0,
        'slot_f1': report.slot.f1 * 100.0,
        'intent_acc': report.intent_acc,
        'best_epoch': result.best_epoch,
    }


def run_jobs(jobs: List[tuple], workers: int = 1) -> List[Dict]:
    """Run isolated training jobs, in parallel processes when ``workers`` > 1; results keep job order."""
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            return list(pool.map(_run_job, jobs))
    return [_run_job(job) for job in jobs]


def _with_means(runs: pd.DataFrame, keys: List[str], columns: List[str]) -> pd.DataFrame:
    """Interleave a ``seed == "mean"`` row after the runs of each configuration."""
    if runs.empty:
        return pd.DataFrame(columns=columns)
    metrics = [c for c in columns if c not in keys and c != 'seed']
    frames = []
    for key, group in runs.groupby(keys, sort=False):
        values = key if isinstance(key, tuple) else (key,)
        mean_row = {**dict(zip(keys, values)), 'seed': MEAN, **group[metrics].mean().to_dict()}
        frames.append(group)
        frames.append(pd.DataFrame([mean_row], columns=columns))
    return pd.concat(frames, ignore_index=True)[columns]


def lambda_sweep(
    base: TrainConfig,
    lambdas: Iterable[float],
    seeds: Iterable[int],
    train: Sequence[EncodedSession],
    dev: Sequence[EncodedSession],
    vocab: Vocab,
    workers: int = 1,
) -> pd.DataFrame:
    """
    Train one model per (λ, seed) and collect dev metrics.

    Returns:
        DataFrame with columns ``lambda, seed, slot_f1, intent_acc``: one row
        per run sorted by (λ, seed), each λ followed by its ``seed == "mean"``
        aggregate row; empty when ``lambdas`` is empty
    """
    lambdas = sorted(float(v) for v in lambdas)
    seeds = sorted(int(s) for s in seeds)
    for value in lambdas:
        if not 0.0 <= value <= 1.0:
            raise ConfigError(f"lambda values must be in [0, 1], got {value}", 'lambdas')
    grid = [(lam, seed) for lam in lambdas for seed in seeds]
    if not grid:
        return pd.DataFrame(columns=SWEEP_COLUMNS)

    jobs = [(base.replace(dli_lambda=lam, dli_enabled=True, seed=seed), train, dev, None, vocab)
            for lam, seed in grid]
    logger.info("Lambda sweep: %d runs on %d worker(s)", len(jobs), workers)
    results = run_jobs(jobs, workers)
    runs = pd.DataFrame([
        {'lambda': lam, 'seed': seed, 'slot_f1': r['slot_f1'], 'intent_acc': r['intent_acc']}
        for (lam, seed), r in zip(grid, results)
    ], columns=SWEEP_COLUMNS)
    return _with_means(runs, ['lambda'], SWEEP_COLUMNS)


def compare_variants(
    base: TrainConfig,
    seeds: Iterable[int],
    train: Sequence[EncodedSession],
    dev: Sequence[EncodedSession],
    vocab: Vocab,
    test: Optional[Sequence[EncodedSession]] = None,
    variants: Optional[Iterable] = None,
    workers: int = 1,
) -> pd.DataFrame:
    """
    Train every variant with and without DLI (NoMem only without).

    Returns:
        DataFrame with columns ``variant, dli, seed, slot_p, slot_r, slot_f1,
        intent_acc``, per-seed rows followed by a mean row per configuration
    """
    variants = [SluVariant.parse(v) for v in (variants or list(SluVariant))]
    seeds = sorted(int(s) for s in seeds)
    grid = [
        (variant, dli, seed)
        for variant in variants
        for dli in ((False, True) if variant.uses_memory else (False,))
        for seed in seeds
    ]
    if not grid:
        return pd.DataFrame(columns=COMPARE_COLUMNS)

    jobs = [(base.replace(variant=variant, dli_enabled=dli, seed=seed), train, dev, test, vocab)
            for variant, dli, seed in grid]
    logger.info("Variant comparison: %d runs on %d worker(s)", len(jobs), workers)
    results = run_jobs(jobs, workers)
    runs = pd.DataFrame([
        {'variant': variant.value, 'dli': dli, 'seed': seed,
         **{k: r[k] for k in ('slot_p', 'slot_r', 'slot_f1', 'intent_acc')}}
        for (variant, dli, seed), r in zip(grid, results)
    ], columns=COMPARE_COLUMNS)
    return _with_means(runs, ['variant', 'dli'], COMPARE_COLUMNS)
