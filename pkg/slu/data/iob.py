"""Derive IOB slot tags from annotated slot values."""

from typing import Iterable, List, Mapping, Optional

from .text import tokenize

OUTSIDE = 'O'


def _values(raw) -> Iterable[str]:
    if isinstance(raw, str):
        yield raw
    elif isinstance(raw, (list, tuple)):
        for item in raw:
            if isinstance(item, str):
                yield item


def derive_iob(
    tokens: List[str],
    slot_values: Mapping[str, object],
    unmatched: Optional[List[str]] = None,
) -> List[str]:
    """
    Tag the spans of an utterance that spell out the given slot values.

    Each value is tokenized like the utterance and searched for as a
    contiguous, case-insensitive token run; the leftmost occurrence is a
    candidate span. Overlapping candidates are resolved longest first, then
    leftmost, then by slot name.

    Args:
        tokens: Utterance tokens
        slot_values: Slot name → value string (or list of strings)
        unmatched: Receives the names of slots whose value was not found or
            whose span lost an overlap to another slot

    Returns:
        One IOB tag per token
    """
    if not tokens:
        raise ValueError("derive_iob: empty utterance")

    lowered = [t.lower() for t in tokens]
    candidates = []
    for slot in sorted(slot_values):
        for value in _values(slot_values[slot]):
            value_tokens = tokenize(value)
            if not value_tokens:
                continue
            width = len(value_tokens)
            start = next(
                (s for s in range(len(lowered) - width + 1) if lowered[s:s + width] == value_tokens),
                None,
            )
            if start is None:
                if unmatched is not None:
                    unmatched.append(slot)
                continue
            candidates.append((-width, start, slot))

    tags = [OUTSIDE] * len(tokens)
    taken = [False] * len(tokens)
    placed = set()
    for neg_width, start, slot in sorted(candidates):
        end = start - neg_width
        if (start, end, slot) in placed:
            continue
        if any(taken[start:end]):
            if unmatched is not None:
                unmatched.append(slot)
            continue
        placed.add((start, end, slot))
        tags[start] = f'B-{slot}'
        for i in range(start + 1, end):
            tags[i] = f'I-{slot}'
        for i in range(start, end):
            taken[i] = True
    return tags
