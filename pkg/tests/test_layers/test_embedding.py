"""Tests for the embedder and its dropout."""

import numpy as np
import pytest

from slu.engine import ComputationTape, Tensor, backward, deterministic, NonDeterministicError, sum_all
from slu.layers import NO_DROPOUT, Dropout, Embedder


def test_lookup_returns_rows():
    table = Tensor(np.arange(8.0).reshape(4, 2))
    embed = Embedder(table)
    np.testing.assert_array_equal(embed([3, 1]).data, [[6.0, 7.0], [2.0, 3.0]])
    assert embed.dim == 2


def test_rate_zero_is_identity():
    x = Tensor([1.0, 2.0])
    assert NO_DROPOUT(x) is x


def test_rate_bounds():
    with pytest.raises(ValueError):
        Dropout(1.0)
    with pytest.raises(ValueError):
        Dropout(-0.1)


def test_dropout_same_seed_same_mask():
    table = Tensor(np.ones((3, 50)))
    first = Embedder(table, Dropout(0.3, np.random.default_rng(9)))([0, 1])
    second = Embedder(table, Dropout(0.3, np.random.default_rng(9)))([0, 1])
    np.testing.assert_array_equal(first.data, second.data)
    assert np.any(first.data == 0.0)


def test_dropout_refused_when_deterministic():
    embed = Embedder(Tensor(np.ones((2, 2))), Dropout(0.5, np.random.default_rng(0)))
    with deterministic():
        with pytest.raises(NonDeterministicError):
            embed([0])


def test_gradient_reaches_table():
    table = Tensor(np.zeros((3, 2)), requires_grad=True)
    with ComputationTape() as tape:
        loss = sum_all(Embedder(table)([2, 2]))
    backward(tape, loss)
    np.testing.assert_array_equal(table.grad, [[0.0, 0.0], [0.0, 0.0], [2.0, 2.0]])
