"""Batch composition: SLU examples plus the DLI groups co-located with them."""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from slu.data import EncodedExample, EncodedSession


@dataclass(frozen=True)
class Batch:
    examples: Tuple[EncodedExample, ...]
    dli_groups: Tuple[Tuple[EncodedSession, int], ...] = ()

    def __len__(self) -> int:
        return len(self.examples)


def dli_attachment(session: EncodedSession) -> Dict[int, List[int]]:
    """
    Assign every context length k in 1 .. n-1 to one SLU example.

    Group k goes to the example whose current utterance is turn k (0-based)
    when that turn is a driver turn, otherwise to the closest earlier driver
    example, otherwise to the session's first driver example.

    Returns:
        Example position in ``session.examples`` → list of k
    """
    positions = [ex.turn_index for ex in session.examples]
    if not positions:
        return {}
    attachment: Dict[int, List[int]] = {}
    for k in range(1, len(session)):
        owner = 0
        for pos, turn in enumerate(positions):
            if turn <= k:
                owner = pos
            else:
                break
        attachment.setdefault(owner, []).append(k)
    return attachment


def make_batches(
    sessions: Sequence[EncodedSession],
    batch_size: int,
    rng: Optional[np.random.Generator] = None,
    with_dli: bool = True,
) -> List[Batch]:
    """
    Shuffle all SLU examples and cut them into batches.

    Args:
        sessions: Encoded training sessions
        batch_size: Examples per batch (the last batch may be smaller)
        rng: Shuffling RNG; None keeps corpus order
        with_dli: Attach DLI groups to their examples

    Returns:
        Batches covering every example exactly once
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be positive, got {batch_size}")
    units = []
    for session in sessions:
        attachment = dli_attachment(session) if with_dli else {}
        for pos, example in enumerate(session.examples):
            groups = tuple((session, k) for k in attachment.get(pos, []))
            units.append((example, groups))

    order = rng.permutation(len(units)) if rng is not None else np.arange(len(units))
    batches = []
    for start in range(0, len(order), batch_size):
        chunk = [units[i] for i in order[start:start + batch_size]]
        batches.append(Batch(
            examples=tuple(example for example, _ in chunk),
            dli_groups=tuple(group for _, groups in chunk for group in groups),
        ))
    return batches
