"""Tests for tensor primitives and reverse-mode differentiation."""

import math
import threading

import numpy as np
import pytest

from slu.engine import (
    ComputationTape,
    NonDeterministicError,
    ParameterStore,
    ShapeError,
    Tensor,
    add,
    backward,
    concat,
    constant,
    cross_entropy,
    deterministic,
    dropout,
    embedding,
    log_softmax,
    matmul,
    mul,
    nll,
    no_grad,
    sigmoid,
    softmax,
    stack,
    sum_all,
    take,
    tanh,
)


def test_integer_data_becomes_float64():
    """Integer inputs are stored as float64."""
    t = Tensor([1, 2, 3])
    assert t.dtype == np.float64
    assert t.shape == (3,)


def test_float32_is_kept():
    t = Tensor(np.ones(2, dtype=np.float32))
    assert t.dtype == np.float32


def test_item_requires_single_value():
    assert constant(2.5).item() == 2.5
    with pytest.raises(ShapeError):
        constant([1.0, 2.0]).item()


def test_matmul_shape_error_names_both_shapes():
    """A mismatched product reports both operand shapes."""
    with pytest.raises(ShapeError) as exc:
        matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))
    assert str(exc.value).count('(2, 3)') == 2


def test_matmul_vector_conventions():
    W = Tensor(np.arange(6.0).reshape(2, 3))
    x = Tensor([1.0, 2.0])
    np.testing.assert_allclose(matmul(x, W).data, [6.0, 9.0, 12.0])
    np.testing.assert_allclose(matmul(W, Tensor([1.0, 0.0, 1.0])).data, [2.0, 8.0])


def test_add_broadcast_error():
    with pytest.raises(ShapeError):
        add(Tensor(np.ones(3)), Tensor(np.ones(4)))


def test_no_recording_outside_tape():
    """Without an active tape ops only compute values."""
    a = Tensor([1.0, 2.0], requires_grad=True)
    out = add(a, a)
    assert not out.requires_grad
    np.testing.assert_allclose(out.data, [2.0, 4.0])


def test_tape_records_only_differentiable_ops():
    a = Tensor([1.0, 2.0], requires_grad=True)
    c = constant([3.0, 4.0])
    with ComputationTape() as tape:
        add(c, c)
        mul(a, c)
    assert len(tape) == 1


def test_no_grad_suspends_tape():
    a = Tensor([1.0], requires_grad=True)
    with ComputationTape() as tape:
        with no_grad():
            add(a, a)
        add(a, a)
    assert len(tape) == 1


def test_tape_is_thread_local():
    """Ops run on another thread are not recorded on this thread's tape."""
    a = Tensor([1.0], requires_grad=True)
    with ComputationTape() as tape:
        worker = threading.Thread(target=lambda: add(a, a))
        worker.start()
        worker.join()
    assert len(tape) == 0


def test_backward_product():
    a = Tensor([1.0, 2.0], requires_grad=True)
    b = Tensor([3.0, 4.0], requires_grad=True)
    with ComputationTape() as tape:
        loss = sum_all(mul(a, b))
    backward(tape, loss)
    np.testing.assert_allclose(a.grad, [3.0, 4.0])
    np.testing.assert_allclose(b.grad, [1.0, 2.0])


def test_backward_accumulates_reused_inputs():
    """d/da sum(a * a) = 2a."""
    a = Tensor([1.5, -2.0], requires_grad=True)
    with ComputationTape() as tape:
        loss = sum_all(mul(a, a))
    backward(tape, loss)
    np.testing.assert_allclose(a.grad, [3.0, -4.0])


def test_backward_rejects_non_scalar_loss():
    a = Tensor([1.0, 2.0], requires_grad=True)
    with ComputationTape() as tape:
        out = add(a, a)
    with pytest.raises(ShapeError):
        backward(tape, out)


def test_backward_zero_fills_unreached_parameters():
    store = ParameterStore(seed=0)
    used = store.uniform('used', (2,))
    store.uniform('unused', (3,))
    with ComputationTape() as tape:
        loss = sum_all(mul(used, used))
    grads = backward(tape, loss, store)
    assert set(grads) == {'used', 'unused'}
    np.testing.assert_array_equal(grads['unused'], np.zeros(3))
    np.testing.assert_allclose(grads['used'], 2 * used.data)


def test_concat_stack_take_gradients():
    a = Tensor([1.0, 2.0], requires_grad=True)
    b = Tensor([3.0], requires_grad=True)
    with ComputationTape() as tape:
        joined = concat([a, b])
        rows = stack([joined, joined])
        loss = sum_all(mul(take(rows, 1), constant([1.0, 10.0, 100.0])))
    backward(tape, loss)
    np.testing.assert_allclose(a.grad, [1.0, 10.0])
    np.testing.assert_allclose(b.grad, [100.0])


def test_take_out_of_range():
    with pytest.raises(ShapeError):
        take(Tensor(np.ones((2, 3))), 2)


def test_sigmoid_and_tanh_values():
    np.testing.assert_allclose(sigmoid(constant([0.0])).data, [0.5])
    assert np.all(np.isfinite(sigmoid(constant([-1000.0, 1000.0])).data))
    np.testing.assert_allclose(tanh(constant([0.0, 1.0])).data, [0.0, math.tanh(1.0)])


def test_softmax_is_stable_for_large_logits():
    np.testing.assert_allclose(softmax(constant([1000.0, 1000.0])).data, [0.5, 0.5])


def test_softmax_rejects_empty_input():
    with pytest.raises(ShapeError):
        softmax(Tensor(np.zeros(0)))


def test_softmax_sums_to_one_property():
    """1000 random logit vectors: non-negative, summing to 1 within 1e-6."""
    rng = np.random.default_rng(0)
    for _ in range(1000):
        x = rng.normal(scale=50.0, size=int(rng.integers(1, 12)))
        p = softmax(Tensor(x)).data
        assert np.all(p >= 0.0)
        assert abs(p.sum() - 1.0) < 1e-6


def test_log_softmax_matches_log_of_softmax():
    x = constant([0.3, -1.2, 2.0])
    np.testing.assert_allclose(log_softmax(x).data, np.log(softmax(x).data))


def test_cross_entropy_uniform_two_classes():
    assert cross_entropy(constant([0.0, 0.0]), [0]).item() == pytest.approx(math.log(2.0))


def test_cross_entropy_equals_nll_of_log_softmax():
    logits = constant([[0.1, 0.5, -0.3], [2.0, 0.0, 1.0]])
    assert cross_entropy(logits, [2, 0]).item() == pytest.approx(nll(log_softmax(logits), [2, 0]).item())


def test_cross_entropy_target_errors():
    with pytest.raises(ValueError):
        cross_entropy(constant([0.0, 0.0]), [2])
    with pytest.raises(ShapeError):
        cross_entropy(Tensor(np.zeros((2, 3))), [0])


def test_cross_entropy_gradient():
    """d CE / d logits = softmax - onehot."""
    logits = Tensor([0.2, -0.4, 1.0], requires_grad=True)
    with ComputationTape() as tape:
        loss = cross_entropy(logits, [1])
    backward(tape, loss)
    expected = softmax(constant([0.2, -0.4, 1.0])).data - np.array([0.0, 1.0, 0.0])
    np.testing.assert_allclose(logits.grad, expected)


def test_embedding_scatter_adds_repeated_ids():
    table = Tensor(np.arange(6.0).reshape(3, 2), requires_grad=True)
    with ComputationTape() as tape:
        loss = sum_all(embedding(table, [0, 0, 2]))
    backward(tape, loss)
    np.testing.assert_allclose(table.grad, [[2.0, 2.0], [0.0, 0.0], [1.0, 1.0]])


def test_embedding_rejects_unknown_id():
    with pytest.raises(ShapeError):
        embedding(Tensor(np.ones((3, 2))), [3])


def test_dropout_identity_when_keeping_everything():
    x = Tensor([1.0, 2.0])
    assert dropout(x, 1.0, None) is x


def test_dropout_requires_rng():
    with pytest.raises(ValueError):
        dropout(Tensor([1.0]), 0.5, None)


def test_dropout_is_inverted():
    """Surviving entries are scaled by 1 / keep_prob, so the mean is preserved."""
    x = Tensor(np.ones(20000))
    out = dropout(x, 0.5, np.random.default_rng(0)).data
    assert set(np.unique(out)) <= {0.0, 2.0}
    assert abs(out.mean() - 1.0) < 0.05


def test_dropout_forbidden_in_deterministic_section():
    with deterministic():
        with pytest.raises(NonDeterministicError):
            dropout(Tensor([1.0]), 0.5, np.random.default_rng(0))


def test_scalar_multiplication_operator():
    a = Tensor([1.0, -2.0], requires_grad=True)
    with ComputationTape() as tape:
        loss = sum_all(a * 3.0)
    backward(tape, loss)
    np.testing.assert_allclose(a.grad, [3.0, 3.0])


def test_softmax_reference_values():
    np.testing.assert_allclose(softmax(constant([1.0, 0.0])).data, [0.73106, 0.26894], atol=1e-5)
    np.testing.assert_allclose(softmax(constant([-7.5])).data, [1.0])
