"""Joint SLU + DLI training with Adam, early stopping and checkpointing."""

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from slu.data import EncodedSession, Vocab
from slu.engine import (
    CheckpointError,
    ComputationTape,
    Tensor,
    add,
    backward,
    constant,
    load_checkpoint,
    no_grad,
    save_checkpoint,
    scale,
)
from slu.evaluation import EvaluationReport, build_report
from slu.models import ContextualSLU, slu_loss

from .batching import Batch, make_batches
from .config import TrainConfig
from .optimizer import AdamState, adam_step, clip_global_norm

logger = logging.getLogger(__name__)

SELECTION = "best_val_loss"


def joint_loss(l_slu, l_dli, lam: float):
    """
    ``(1 - lam) * l_slu + lam * l_dli`` for floats or scalar tensors.

    Raises:
        ValueError: ``lam`` outside [0, 1]
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"joint_loss: lambda must be in [0, 1], got {lam}")
    if isinstance(l_slu, Tensor) or isinstance(l_dli, Tensor):
        l_slu = l_slu if isinstance(l_slu, Tensor) else constant(l_slu)
        l_dli = l_dli if isinstance(l_dli, Tensor) else constant(l_dli)
        return add(scale(l_slu, 1.0 - lam), scale(l_dli, lam))
    return (1.0 - lam) * l_slu + lam * l_dli


# ---------------------------------------------------------------------------
# Epoch bookkeeping
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EpochMetrics:
    epoch: int
    train_loss: float
    val_loss: float
    slot_p: float
    slot_r: float
    slot_f1: float
    intent_acc: float

    def to_dict(self) -> Dict:
        return asdict(self)


class MetricsHistory:
    """Per-epoch metrics, optionally mirrored to an append-only JSON lines file."""

    def __init__(self, path: Optional[Union[str, Path]] = None):
        self.records: List[EpochMetrics] = []
        self.path = Path(path) if path is not None else None
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text('', encoding='utf-8')

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[EpochMetrics]:
        return iter(self.records)

    @property
    def last(self) -> Optional[EpochMetrics]:
        return self.records[-1] if self.records else None

    def append(self, record: EpochMetrics):
        expected = len(self.records) + 1
        if record.epoch != expected:
            raise ValueError(f"MetricsHistory: expected epoch {expected}, got {record.epoch}")
        self.records.append(record)
        if self.path is not None:
            with open(self.path, 'a', encoding='utf-8', newline='\n') as f:
                f.write(json.dumps(record.to_dict(), sort_keys=True) + '\n')

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.to_dict() for r in self.records], columns=list(EpochMetrics.__dataclass_fields__))

    @staticmethod
    def read(path: Union[str, Path]) -> pd.DataFrame:
        """Load a metrics lines file into a DataFrame."""
        return pd.read_json(path, lines=True)


class EarlyStopping:
    """Stops after ``patience`` consecutive epochs without a new best validation loss."""

    def __init__(self, patience: Optional[int] = 5):
        self.patience = patience
        self.best_loss = math.inf
        self.best_epoch: Optional[int] = None
        self.bad_epochs = 0

    def update(self, epoch: int, val_loss: float) -> bool:
        """Record an epoch; returns True when it is the new best."""
        if val_loss < self.best_loss:
            self.best_loss = val_loss
            self.best_epoch = epoch
            self.bad_epochs = 0
            return True
        self.bad_epochs += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.patience is not None and self.bad_epochs >= self.patience


def run_epochs(
    max_epochs: int,
    patience: Optional[int],
    train_epoch: Callable[[int], float],
    validate: Callable[[int, float], EpochMetrics],
    on_improve: Optional[Callable[[EpochMetrics], None]] = None,
    history: Optional[MetricsHistory] = None,
) -> Tuple[Optional[int], MetricsHistory]:
    """
    Generic epoch loop with early stopping on validation loss.

    Args:
        max_epochs: Upper bound on epochs
        patience: Epochs without improvement before stopping (None disables)
        train_epoch: Runs one epoch (1-based) and returns its training loss
        validate: Builds the epoch's metrics from (epoch, training loss)
        on_improve: Called with the metrics of every new best epoch
        history: Where to record metrics

    Returns:
        (best epoch, history)
    """
    history = history if history is not None else MetricsHistory()
    stopper = EarlyStopping(patience)
    for epoch in range(1, max_epochs + 1):
        train_loss = train_epoch(epoch)
        metrics = validate(epoch, train_loss)
        history.append(metrics)
        if stopper.update(epoch, metrics.val_loss) and on_improve is not None:
            on_improve(metrics)
        if stopper.should_stop:
            logger.warning("Early stop after epoch %d (best epoch %d, val loss %.4f)",
                           epoch, stopper.best_epoch, stopper.best_loss)
            break
    return stopper.best_epoch, history


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

@dataclass
class Checkpoint:
    """Parameter values plus a header describing how to rebuild the model."""

    state: Dict[str, np.ndarray]
    header: Dict = field(default_factory=dict)

    @property
    def variant(self) -> str:
        return self.header['model']['variant']

    def save(self, path: Union[str, Path]) -> Path:
        return save_checkpoint(path, self.state, self.header)

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Checkpoint":
        state, header = load_checkpoint(path)
        if 'model' not in header:
            raise CheckpointError(f"{path}: header has no model configuration")
        return cls(state=state, header=header)

    def check_vocab(self, vocab: Vocab):
        expected = self.header.get('vocab_fingerprint')
        if expected != vocab.fingerprint():
            raise CheckpointError("Vocabulary does not match the one the checkpoint was trained with")

    def build_model(self) -> ContextualSLU:
        model = ContextualSLU.from_config(self.header['model'])
        model.store.load_state(self.state)
        return model

    def stored(self) -> "Checkpoint":
        """The checkpoint as it reads back from disk (32-bit payloads)."""
        return Checkpoint(
            state={name: np.asarray(value, dtype='<f4') for name, value in self.state.items()},
            header=dict(self.header),
        )


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _evaluate_sessions(model: ContextualSLU, sessions: Sequence[EncodedSession]):
    results = []
    with no_grad():
        for session in sessions:
            ctx = model.context()
            for example in session.examples:
                pred = model.forward(ctx, example)
                loss = slu_loss(pred, example.intent, list(example.tags)).item()
                results.append((pred.intent(), pred.slots(), loss))
    return results


def evaluate(
    model: ContextualSLU,
    sessions: Sequence[EncodedSession],
    vocab: Vocab,
    workers: int = 1,
) -> Tuple[EvaluationReport, float]:
    """
    Score every SLU example of ``sessions`` without dropout.

    Sessions are split into contiguous shards evaluated on worker threads;
    results are merged in example order.

    Returns:
        (evaluation report, mean per-example SLU loss)
    """
    examples = [ex for s in sessions for ex in s.examples]
    if not examples:
        raise ValueError("evaluate: no SLU examples")
    workers = max(1, min(workers, len(sessions)))
    if workers == 1:
        results = _evaluate_sessions(model, sessions)
    else:
        shards = [list(shard) for shard in np.array_split(np.arange(len(sessions)), workers)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(lambda idx: _evaluate_sessions(model, [sessions[i] for i in idx]), shards)
            results = [r for part in parts for r in part]

    report = build_report(
        pred_intents=[r[0] for r in results],
        gold_intents=[ex.intent for ex in examples],
        pred_tags=[vocab.decode_slots(r[1]) for r in results],
        gold_tags=[vocab.decode_slots(ex.tags) for ex in examples],
    )
    val_loss = float(np.mean([r[2] for r in results]))
    return report, val_loss


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StepResult:
    loss: float
    slu_loss: float
    dli_loss: float
    grad_norm: float


class Trainer:
    """Owns a model, its optimizer state and the training RNG streams."""

    def __init__(self, config: TrainConfig, vocab: Vocab):
        self.config = config
        self.vocab = vocab
        self.model = ContextualSLU(
            config.variant,
            vocab_size=len(vocab),
            n_intents=vocab.n_intents,
            n_slots=vocab.n_slots,
            embedding_dim=config.embedding_dim,
            hidden=config.hidden_dim,
            seed=config.seed,
            dtype=config.np_dtype,
        )
        batch_seed, dropout_seed = np.random.SeedSequence(config.seed).spawn(2)
        self.batch_rng = np.random.default_rng(batch_seed)
        self.dropout_rng = np.random.default_rng(dropout_seed)
        self.adam = AdamState.for_store(self.model.store)
        self.clipped = 0

    def step(self, batch: Batch) -> StepResult:
        """Forward, backward and one Adam update on ``batch``."""
        config = self.config
        store = self.model.store
        store.zero_grad()
        ctx = self.model.context(config.dropout, self.dropout_rng)
        with ComputationTape() as tape:
            l_slu = self.model.slu_batch_loss(ctx, batch.examples)
            if config.dli_enabled and batch.dli_groups:
                l_dli = self.model.dli_batch_loss(ctx, batch.dli_groups)
            else:
                l_dli = constant(0.0, store.dtype)
            loss = joint_loss(l_slu, l_dli, config.effective_lambda)
        grads = backward(tape, loss, store)

        norm = float('nan')
        if config.clip_norm is not None:
            grads, norm = clip_global_norm(grads, config.clip_norm)
            if norm > config.clip_norm:
                self.clipped += 1
        adam_step(store, grads, self.adam, config.adam)
        if not store.all_finite():
            raise FloatingPointError(f"Non-finite parameters after optimizer step {self.adam.step}")
        return StepResult(loss.item(), l_slu.item(), l_dli.item(), norm)

    def train_epoch(self, sessions: Sequence[EncodedSession], on_batch: Optional[Callable[[int, int], None]] = None) -> float:
        """One pass over shuffled batches; returns the example-weighted mean joint loss."""
        batches = make_batches(sessions, self.config.batch_size, self.batch_rng, with_dli=self.config.dli_enabled)
        self.clipped = 0
        total, count = 0.0, 0
        for i, batch in enumerate(batches, 1):
            result = self.step(batch)
            total += result.loss * len(batch)
            count += len(batch)
            if on_batch is not None:
                on_batch(i, len(batches))
        if self.clipped:
            logger.warning("Gradient norm clipped to %.1f in %d of %d batches",
                           self.config.clip_norm, self.clipped, len(batches))
        return total / count

    def validate(self, sessions: Sequence[EncodedSession], epoch: int, train_loss: float) -> EpochMetrics:
        report, val_loss = evaluate(self.model, sessions, self.vocab, self.config.eval_workers)
        return EpochMetrics(
            epoch=epoch,
            train_loss=train_loss,
            val_loss=val_loss,
            slot_p=report.slot.precision * 100.0,
            slot_r=report.slot.recall * 100.0,
            slot_f1=report.slot.f1 * 100.0,
            intent_acc=report.intent_acc,
        )

    def checkpoint(self, state: Dict[str, np.ndarray], metrics: Optional[EpochMetrics]) -> Checkpoint:
        return Checkpoint(state=dict(state), header={
            'model': self.model.config(),
            'train': self.config.to_dict(),
            'vocab_fingerprint': self.vocab.fingerprint(),
            'selection': SELECTION,
            'epoch': metrics.epoch if metrics else None,
            'metrics': metrics.to_dict() if metrics else None,
        })


@dataclass
class FitResult:
    checkpoint: Checkpoint
    history: MetricsHistory
    report: EvaluationReport

    @property
    def best_epoch(self) -> int:
        return self.checkpoint.header['epoch']


def fit(
    config: TrainConfig,
    train: Sequence[EncodedSession],
    dev: Sequence[EncodedSession],
    vocab: Vocab,
    metrics_path: Optional[Union[str, Path]] = None,
    checkpoint_path: Optional[Union[str, Path]] = None,
    on_epoch: Optional[Callable[[EpochMetrics], None]] = None,
    on_batch: Optional[Callable[[int, int], None]] = None,
) -> FitResult:
    """
    Train with the joint loss and keep the best-validation-loss parameters.

    After training, the selected parameters are rounded to the checkpoint's
    32-bit storage and evaluated once more on ``dev``; that report is stored
    in the header under ``eval`` so evaluating the saved file reproduces it.

    Args:
        config: Hyperparameters
        train: Encoded training sessions
        dev: Encoded validation sessions
        vocab: Vocabulary the sessions were encoded with
        metrics_path: Optional JSON lines file, one object per epoch
        checkpoint_path: Optional output ``.npz``
        on_epoch: Callback after each epoch
        on_batch: Callback after each batch with (batch, batches)

    Returns:
        FitResult with the best checkpoint, the history and its dev report
    """
    if not any(s.examples for s in train):
        raise ValueError("fit: training set has no SLU examples")
    if not any(s.examples for s in dev):
        raise ValueError("fit: validation set has no SLU examples")

    trainer = Trainer(config, vocab)
    logger.info("Training %s (dli=%s, lambda=%.2f): %d parameters",
                config.variant.value, config.dli_enabled, config.effective_lambda,
                trainer.model.store.num_parameters)
    best: Dict = {}

    def validate(epoch: int, train_loss: float) -> EpochMetrics:
        metrics = trainer.validate(dev, epoch, train_loss)
        logger.info("epoch %d: train %.4f val %.4f slot F1 %.2f intent %.4f",
                    epoch, train_loss, metrics.val_loss, metrics.slot_f1, metrics.intent_acc)
        if on_epoch is not None:
            on_epoch(metrics)
        return metrics

    def on_improve(metrics: EpochMetrics):
        best['state'] = trainer.model.store.snapshot()
        best['metrics'] = metrics

    _, history = run_epochs(
        config.max_epochs,
        config.early_stop_patience,
        lambda epoch: trainer.train_epoch(train, on_batch),
        validate,
        on_improve,
        MetricsHistory(metrics_path),
    )
    if 'state' not in best:
        raise FloatingPointError('fit: no epoch produced a finite validation loss')

    checkpoint = trainer.checkpoint(best['state'], best['metrics']).stored()
    trainer.model.store.load_state(checkpoint.state)
    report, val_loss = evaluate(trainer.model, dev, vocab, config.eval_workers)
    checkpoint.header['eval'] = {**report.to_dict(), 'val_loss': val_loss}
    if checkpoint_path is not None:
        checkpoint.save(checkpoint_path)
        logger.info("Saved best checkpoint (epoch %d) to %s", checkpoint.header['epoch'], checkpoint_path)
    return FitResult(checkpoint=checkpoint, history=history, report=report)
