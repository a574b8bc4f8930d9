"""Token embedding lookup with train-time dropout."""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from slu.engine import Tensor, dropout, embedding


@dataclass
class Dropout:
    """Inverted dropout bound to a rate and an RNG; rate 0 is the identity."""

    rate: float = 0.0
    rng: Optional[np.random.Generator] = None

    def __post_init__(self):
        if not 0.0 <= self.rate < 1.0:
            raise ValueError(f"Dropout rate must be in [0, 1), got {self.rate}")

    @property
    def keep_prob(self) -> float:
        return 1.0 - self.rate

    def __call__(self, x: Tensor) -> Tensor:
        if self.rate == 0.0:
            return x
        return dropout(x, self.keep_prob, self.rng)


NO_DROPOUT = Dropout(0.0)


class Embedder:
    """Maps token ids to rows of the embedding table."""

    def __init__(self, table: Tensor, drop: Dropout = NO_DROPOUT):
        """
        Args:
            table: Embedding matrix (vocab_size × embedding_dim)
            drop: Dropout applied to the looked-up vectors
        """
        self.table = table
        self.drop = drop

    @property
    def dim(self) -> int:
        return self.table.shape[1]

    def __call__(self, ids: Sequence[int]) -> Tensor:
        return self.drop(embedding(self.table, ids))
