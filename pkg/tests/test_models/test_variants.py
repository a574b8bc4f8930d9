"""Tests for variant names and properties."""

import pytest

from slu.models import ATTENTION, SEQUENTIAL, SluVariant


@pytest.mark.parametrize('name, expected', [
    ('nomem', SluVariant.NOMEM),
    ('MemNet', SluVariant.MEMNET),
    ('SDEN', SluVariant.SDEN),
    ('sden_dagger', SluVariant.SDEN_DAGGER),
    ('SdenDagger', SluVariant.SDEN_DAGGER),
    ('sden-dagger', SluVariant.SDEN_DAGGER),
    (SluVariant.SDEN, SluVariant.SDEN),
])
def test_parse(name, expected):
    assert SluVariant.parse(name) is expected


def test_parse_unknown():
    with pytest.raises(ValueError, match='Unknown variant'):
        SluVariant.parse('transformer')


def test_retrieval_paths():
    assert SluVariant.NOMEM.retrieval is None
    assert SluVariant.MEMNET.retrieval == ATTENTION
    assert SluVariant.SDEN.retrieval == SEQUENTIAL
    assert SluVariant.SDEN_DAGGER.retrieval == SEQUENTIAL


def test_knowledge_injection():
    """Exactly one injection mode per memory variant."""
    for variant in SluVariant:
        modes = [variant.concatenates_knowledge, variant.initializes_from_knowledge]
        assert sum(modes) == (1 if variant.uses_memory else 0)
    assert SluVariant.SDEN.initializes_from_knowledge
    assert SluVariant.MEMNET.concatenates_knowledge
