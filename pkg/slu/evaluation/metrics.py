"""Slot-filling and intent metrics."""

from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

from slu.data import OUTSIDE, slot_type


@dataclass(frozen=True)
class Chunk:
    """A slot span ``[start, end)`` of one type."""

    type: str
    start: int
    end: int

    def __post_init__(self):
        if not 0 <= self.start < self.end:
            raise ValueError(f"Invalid chunk span [{self.start}, {self.end})")


def decode_chunks(tags: Sequence[str]) -> List[Chunk]:
    """
    Read chunks from an IOB sequence.

    ``B-X`` opens a chunk, ``I-X`` extends an open chunk of type X and
    otherwise opens a new one; ``O`` or a type switch closes the open chunk.

    Raises:
        ValueError: A tag that is neither ``O`` nor ``B-``/``I-`` prefixed
    """
    chunks = []
    open_type, open_start = None, 0
    for i, tag in enumerate(tags):
        kind = slot_type(tag)
        if kind is None:
            if open_type is not None:
                chunks.append(Chunk(open_type, open_start, i))
            open_type = None
        elif tag.startswith('I-') and open_type == kind:
            continue
        else:
            if open_type is not None:
                chunks.append(Chunk(open_type, open_start, i))
            open_type, open_start = kind, i
    if open_type is not None:
        chunks.append(Chunk(open_type, open_start, len(tags)))
    return chunks


def encode_chunks(chunks: Sequence[Chunk], length: int) -> List[str]:
    """Inverse of ``decode_chunks`` for non-overlapping chunks."""
    tags = [OUTSIDE] * length
    for chunk in sorted(chunks, key=lambda c: c.start):
        if chunk.end > length:
            raise ValueError(f"Chunk {chunk} exceeds sequence length {length}")
        if any(t != OUTSIDE for t in tags[chunk.start:chunk.end]):
            raise ValueError(f"Chunk {chunk} overlaps another chunk")
        tags[chunk.start] = f"B-{chunk.type}"
        for i in range(chunk.start + 1, chunk.end):
            tags[i] = f"I-{chunk.type}"
    return tags


def prf(correct: int, predicted: int, gold: int) -> Tuple[float, float, float]:
    """Precision, recall and F1 with 0 for every zero denominator."""
    p = correct / predicted if predicted else 0.0
    r = correct / gold if gold else 0.0
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f1


@dataclass
class SlotMetrics:
    """Micro-averaged P/R/F1 in [0, 1] plus counts, per-type scores and macro F1."""

    precision: float
    recall: float
    f1: float
    correct: int = 0
    predicted: int = 0
    gold: int = 0
    macro_f1: float = 0.0
    per_type: Dict[str, "SlotMetrics"] = field(default_factory=dict)

    @property
    def undefined(self) -> bool:
        """True when neither predictions nor gold contain a chunk."""
        return self.predicted == 0 and self.gold == 0

    @classmethod
    def from_counts(cls, correct: int, predicted: int, gold: int) -> "SlotMetrics":
        p, r, f1 = prf(correct, predicted, gold)
        return cls(precision=p, recall=r, f1=f1, correct=correct, predicted=predicted, gold=gold)

    def to_dict(self, percent: bool = True) -> Dict:
        factor = 100.0 if percent else 1.0
        return {
            'p': self.precision * factor,
            'r': self.recall * factor,
            'f1': self.f1 * factor,
            'macro_f1': self.macro_f1 * factor,
            'correct': self.correct,
            'predicted': self.predicted,
            'gold': self.gold,
            'undefined': self.undefined,
        }


def _check_lengths(preds: Sequence[Sequence[str]], golds: Sequence[Sequence[str]]):
    if len(preds) != len(golds):
        raise ValueError(f"{len(preds)} predicted sequences for {len(golds)} gold sequences")
    for i, (pred, gold) in enumerate(zip(preds, golds)):
        if len(pred) != len(gold):
            raise ValueError(f"Utterance {i}: {len(pred)} predicted tags for {len(gold)} gold tags")


def slot_prf(preds: Sequence[Sequence[str]], golds: Sequence[Sequence[str]]) -> SlotMetrics:
    """
    Exact-span chunk P/R/F1, micro-averaged over all utterances.

    Per-type scores cover the slot types present in gold; macro F1 is their
    unweighted mean.
    """
    _check_lengths(preds, golds)
    correct, predicted, gold = Counter(), Counter(), Counter()
    for pred_tags, gold_tags in zip(preds, golds):
        pred_chunks = set(decode_chunks(pred_tags))
        gold_chunks = set(decode_chunks(gold_tags))
        for chunk in pred_chunks:
            predicted[chunk.type] += 1
        for chunk in gold_chunks:
            gold[chunk.type] += 1
        for chunk in pred_chunks & gold_chunks:
            correct[chunk.type] += 1

    metrics = SlotMetrics.from_counts(sum(correct.values()), sum(predicted.values()), sum(gold.values()))
    metrics.per_type = {
        kind: SlotMetrics.from_counts(correct[kind], predicted[kind], gold[kind])
        for kind in sorted(gold)
    }
    if metrics.per_type:
        metrics.macro_f1 = sum(m.f1 for m in metrics.per_type.values()) / len(metrics.per_type)
    return metrics


def token_prf(preds: Sequence[Sequence[str]], golds: Sequence[Sequence[str]]) -> SlotMetrics:
    """Token-level P/R/F1: a non-O token is correct when its slot type matches gold."""
    _check_lengths(preds, golds)
    correct = predicted = gold = 0
    for pred_tags, gold_tags in zip(preds, golds):
        for p_tag, g_tag in zip(pred_tags, gold_tags):
            p_type, g_type = slot_type(p_tag), slot_type(g_tag)
            predicted += p_type is not None
            gold += g_type is not None
            correct += p_type is not None and p_type == g_type
    return SlotMetrics.from_counts(correct, predicted, gold)


def token_accuracy(preds: Sequence[Sequence], golds: Sequence[Sequence]) -> float:
    """Fraction of tokens whose predicted label equals the gold label."""
    _check_lengths(preds, golds)
    total = sum(len(g) for g in golds)
    if total == 0:
        raise ValueError("token_accuracy: no tokens")
    hits = sum(p == g for pred, gold in zip(preds, golds) for p, g in zip(pred, gold))
    return hits / total


def intent_accuracy(preds: Sequence, golds: Sequence) -> float:
    """Exact-match fraction of intent predictions."""
    if len(preds) != len(golds):
        raise ValueError(f"{len(preds)} intent predictions for {len(golds)} gold intents")
    if not golds:
        raise ValueError("intent_accuracy: empty input")
    return sum(p == g for p, g in zip(preds, golds)) / len(golds)
