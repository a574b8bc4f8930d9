"""Optimization, early stopping, checkpoints and experiment grids."""

from .batching import Batch, dli_attachment, make_batches
from .config import ALIASES, ConfigError, RunConfig, TrainConfig
from .optimizer import AdamHyper, AdamState, adam_step, clip_global_norm, global_norm
from .sweep import COMPARE_COLUMNS, MEAN, SWEEP_COLUMNS, compare_variants, lambda_sweep, run_jobs
from .trainer import (
    SELECTION,
    Checkpoint,
    EarlyStopping,
    EpochMetrics,
    FitResult,
    MetricsHistory,
    StepResult,
    Trainer,
    evaluate,
    fit,
    joint_loss,
    run_epochs,
)

__all__ = [
    'Batch',
    'dli_attachment',
    'make_batches',
    'ALIASES',
    'ConfigError',
    'RunConfig',
    'TrainConfig',
    'AdamHyper',
    'AdamState',
    'adam_step',
    'clip_global_norm',
    'global_norm',
    'COMPARE_COLUMNS',
    'MEAN',
    'SWEEP_COLUMNS',
    'compare_variants',
    'lambda_sweep',
    'run_jobs',
    'SELECTION',
    'Checkpoint',
    'EarlyStopping',
    'EpochMetrics',
    'FitResult',
    'MetricsHistory',
    'StepResult',
    'Trainer',
    'evaluate',
    'fit',
    'joint_loss',
    'run_epochs',
]
