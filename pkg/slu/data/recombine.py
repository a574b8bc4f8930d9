"""KVRET*: multi-domain sessions built by joining two single-domain sessions."""

import logging
from typing import Dict, List, Sequence, Union

import numpy as np

from .kvret import SPLITS
from .session import DialogueSession, Turn

logger = logging.getLogger(__name__)

SeedLike = Union[int, Sequence[int]]


def merge_sessions(first: DialogueSession, second: DialogueSession) -> DialogueSession:
    """Concatenate two sessions: every turn of ``first``, then every turn of ``second``."""
    domains = list(first.domains) + [d for d in second.domains if d not in first.domains]
    turns = [
        Turn(speaker=t.speaker, tokens=list(t.tokens),
             tags=list(t.tags) if t.tags is not None else None, intent=t.intent)
        for t in list(first.turns) + list(second.turns)
    ]
    return DialogueSession(id=f"{first.id}+{second.id}", domains=domains, turns=turns)


def build_kvret_star(
    sessions: Sequence[DialogueSession],
    recombine_prob: float = 0.5,
    seed: SeedLike = 0,
) -> List[DialogueSession]:
    """
    Recombine sessions into multi-domain conversations.

    Every session is selected for recombination with probability
    ``recombine_prob``. Selected sessions are scanned in shuffled order and
    each one still free is joined with a random free selected session whose
    domains are disjoint from its own. Selected sessions left without a
    partner stay single. Output keeps the order of the input, a merged
    session taking the position of its first half.

    Args:
        sessions: Sessions carrying domain labels
        recombine_prob: Selection probability in [0, 1]
        seed: Seed (or seed sequence) for the recombination RNG

    Returns:
        New list of sessions; turn total equals the input's
    """
    if not 0.0 <= recombine_prob <= 1.0:
        raise ValueError(f"recombine_prob must be in [0, 1], got {recombine_prob}")
    n = len(sessions)
    if n == 0 or recombine_prob == 0.0:
        return list(sessions)

    rng = np.random.default_rng(seed)
    selected = rng.random(n) < recombine_prob
    order = rng.permutation(n)

    keys = [frozenset(s.domains) for s in sessions]
    unique = sorted(set(keys), key=lambda k: sorted(k))
    key_index = np.array([unique.index(k) for k in keys])
    compatible = np.array([[a.isdisjoint(b) for b in unique] for a in unique], dtype=bool)

    free = selected.copy()
    partner: Dict[int, int] = {}
    for a in order:
        if not free[a]:
            continue
        free[a] = False
        candidates = np.flatnonzero(free & compatible[key_index[a]][key_index])
        if candidates.size == 0:
            continue
        b = int(candidates[rng.integers(candidates.size)])
        free[b] = False
        partner[int(a)] = b

    consumed = set(partner.values())
    result = []
    for i, session in enumerate(sessions):
        if i in partner:
            result.append(merge_sessions(session, sessions[partner[i]]))
        elif i not in consumed:
            result.append(session)

    logger.debug("Recombined %d of %d sessions into %d pairs", 2 * len(partner), n, len(partner))
    return result


def split_seed(seed: int, split: str) -> List[int]:
    """Independent seed sequence per split so each split is recombined on its own stream."""
    return [int(seed), SPLITS.index(split)]
