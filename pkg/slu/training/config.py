"""Training hyperparameters and the JSON run configuration."""

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Union

import numpy as np

from slu.models import SluVariant

from .optimizer import AdamHyper


class ConfigError(ValueError):
    """Invalid configuration value or unknown configuration key."""

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key


DTYPES = ('float64', 'float32')


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one training run."""

    variant: SluVariant = SluVariant.SDEN_DAGGER
    dli_enabled: bool = True
    batch_size: int = 64
    max_epochs: int = 30
    early_stop_patience: Optional[int] = 5
    dli_lambda: float = 0.3
    dropout: float = 0.3
    embedding_dim: int = 100
    hidden_dim: int = 64
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: Optional[float] = 5.0
    seed: int = 0
    dtype: str = 'float64'
    eval_workers: int = 1

    def __post_init__(self):
        try:
            object.__setattr__(self, 'variant', SluVariant.parse(self.variant))
        except ValueError as e:
            raise ConfigError(str(e), 'variant') from e
        if not 0.0 <= self.dli_lambda <= 1.0:
            raise ConfigError(f"lambda must be in [0, 1], got {self.dli_lambda}", 'lambda')
        for key in ('batch_size', 'max_epochs', 'embedding_dim', 'hidden_dim', 'eval_workers'):
            if getattr(self, key) < 1:
                raise ConfigError(f"{key} must be positive, got {getattr(self, key)}", key)
        if self.early_stop_patience is not None and self.early_stop_patience < 1:
            raise ConfigError(f"early_stop_patience must be None or >= 1, got {self.early_stop_patience}",
                              'early_stop_patience')
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}", 'dropout')
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}", 'lr')
        if self.clip_norm is not None and self.clip_norm <= 0:
            raise ConfigError(f"clip_norm must be positive or null, got {self.clip_norm}", 'clip_norm')
        if self.dtype not in DTYPES:
            raise ConfigError(f"dtype must be one of {DTYPES}, got {self.dtype}", 'dtype')
        if self.dli_enabled and not self.variant.uses_memory:
            raise ConfigError("DLI needs a knowledge vector; the nomem variant cannot enable dli", 'dli')

    @property
    def effective_lambda(self) -> float:
        """λ used in the joint loss: 0 when DLI is disabled."""
        return self.dli_lambda if self.dli_enabled else 0.0

    @property
    def adam(self) -> AdamHyper:
        return AdamHyper(lr=self.lr, beta1=self.beta1, beta2=self.beta2, eps=self.eps)

    @property
    def np_dtype(self):
        return np.dtype(self.dtype)

    def replace(self, **changes) -> "TrainConfig":
        return replace(self, **changes)

    def to_dict(self) -> Dict:
        data = asdict(self)
        data['variant'] = self.variant.value
        return data


# JSON spellings that differ from the field names.
ALIASES = {'lambda': 'dli_lambda', 'dli': 'dli_enabled'}


@dataclass
class RunConfig:
    """
    A run configuration file: every TrainConfig field plus paths and
    experiment grids. Keys ``lambda`` and ``dli`` are accepted for
    ``dli_lambda`` and ``dli_enabled``.
    """

    train: TrainConfig = field(default_factory=TrainConfig)
    data_dir: Optional[str] = None
    output_dir: Optional[str] = None
    seeds: List[int] = field(default_factory=lambda: [0])
    lambdas: List[float] = field(default_factory=lambda: [0.1, 0.3, 0.5, 0.7, 0.9])
    jobs: int = 1

    @classmethod
    def from_dict(cls, data: Mapping, overrides: Optional[Mapping] = None) -> "RunConfig":
        """
        Build a run configuration; ``overrides`` win over ``data``.

        Raises:
            ConfigError: Unknown key or invalid value
        """
        train_keys = {f.name for f in fields(TrainConfig)}
        run_keys = {f.name for f in fields(cls)} - {'train'}
        merged = dict(data)
        merged.update({k: v for k, v in (overrides or {}).items() if v is not None})

        train_values, run_values = {}, {}
        for key, value in merged.items():
            name = ALIASES.get(key, key)
            if name in train_keys:
                train_values[name] = value
            elif name in run_keys:
                run_values[name] = value
            else:
                raise ConfigError(f"Unknown configuration key: {key}", key)

        try:
            train = TrainConfig(**train_values)
        except TypeError as e:
            raise ConfigError(f"Invalid configuration: {e}") from e
        config = cls(train=train, **run_values)
        if config.jobs < 1:
            raise ConfigError(f"jobs must be positive, got {config.jobs}", 'jobs')
        for value in config.lambdas:
            if not 0.0 <= float(value) <= 1.0:
                raise ConfigError(f"lambda values must be in [0, 1], got {value}", 'lambdas')
        return config

    @classmethod
    def load(cls, path: Optional[Union[str, Path]], overrides: Optional[Mapping] = None) -> "RunConfig":
        """Read a JSON run configuration (or defaults when ``path`` is None)."""
        data = {}
        if path is not None:
            try:
                with open(path, 'r', encoding='utf-8') as f:
                    data = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigError(f"{path}: malformed JSON at line {e.lineno}") from e
            if not isinstance(data, dict):
                raise ConfigError(f"{path}: expected a JSON object")
        return cls.from_dict(data, overrides)

    def to_dict(self) -> Dict:
        data = self.train.to_dict()
        data.update({
            'data_dir': self.data_dir,
            'output_dir': self.output_dir,
            'seeds': list(self.seeds),
            'lambdas': list(self.lambdas),
            'jobs': self.jobs,
        })
        return data
