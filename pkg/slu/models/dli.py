"""Dialogue logistic inference: is a candidate the next utterance of a context?"""

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from slu.engine import ParameterStore, Tensor, add_n, constant, cross_entropy, matmul, no_grad, softmax

from .memory import KnowledgeVector, MemoryBank

# Class order of the 2-way softmax.
IS_NEXT = 0
NOT_NEXT = 1


@dataclass(frozen=True)
class DliExample:
    """
    One candidate of a (session, k) group; turn indices are 0-based.

    ``context`` is the unshuffled prefix x_1 .. x_k, ``candidate`` the index
    of x_j with j > k, and ``label`` is 1 exactly when the candidate is the
    utterance that follows the context.
    """

    session_id: str
    context: Tuple[int, ...]
    candidate: int
    label: int

    @property
    def k(self) -> int:
        return len(self.context)


def make_candidates(session, k: int) -> List[DliExample]:
    """
    Build the candidate group for context length ``k``.

    Args:
        session: DialogueSession (anything with ``id`` and ``turns``)
        k: Number of context utterances, 1 <= k < number of turns

    Returns:
        n - k examples, the first one positive
    """
    n = len(session.turns)
    if k < 1 or k >= n:
        raise ValueError(f"make_candidates: context length {k} outside [1, {n - 1}] for session {session.id}")
    context = tuple(range(k))
    return [DliExample(session.id, context, j, 1 if j == k else 0) for j in range(k, n)]


@dataclass
class DliHead:
    W_d: Tensor

    @classmethod
    def create(cls, store: ParameterStore, prefix: str, knowledge_dim: int) -> "DliHead":
        return cls(W_d=store.uniform(f"{prefix}.W_d", (2, knowledge_dim), fan_in=knowledge_dim))


@dataclass
class DliScore:
    """Logits over (is-next, is-not-next)."""

    logits: Tensor
    knowledge: Optional[KnowledgeVector] = None

    @property
    def probs(self) -> np.ndarray:
        with no_grad():
            return softmax(self.logits).data


Retrieval = Callable[[Tensor, MemoryBank], KnowledgeVector]


def dli_score(c_j: Tensor, bank: MemoryBank, retrieval: Optional[Retrieval], W_d: Tensor) -> DliScore:
    """
    Score a candidate against the context memory: ``softmax(W_d h)``.

    Args:
        c_j: Candidate encoding from the current-utterance encoder
        bank: Memory of the context utterances
        retrieval: The variant's retrieval function; None for NoMem
        W_d: DLI output matrix (2 × dim(h))
    """
    if retrieval is None:
        raise ValueError("dli_score: the variant has no memory retrieval, DLI is unavailable")
    knowledge = retrieval(c_j, bank)
    return DliScore(logits=matmul(W_d, knowledge.h), knowledge=knowledge)


def target_class(label: int) -> int:
    return IS_NEXT if label == 1 else NOT_NEXT


def dli_loss(scored: Sequence[Tuple[DliScore, int]]) -> Tensor:
    """Sum over candidates of the NLL of each candidate's binary label."""
    if not scored:
        return constant(0.0)
    return add_n([cross_entropy(score.logits, [target_class(label)]) for score, label in scored])
