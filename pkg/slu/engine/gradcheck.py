"""Finite-difference verification of analytic gradients."""

import logging
from typing import Callable, Optional

import numpy as np

from .params import ParameterStore
from .tensor import ComputationTape, Tensor, backward, deterministic, no_grad

logger = logging.getLogger(__name__)


def grad_check(
    function: Callable[[], Tensor],
    params: ParameterStore,
    step: float = 1e-5,
    floor: float = 1e-8,
    max_entries: Optional[int] = None,
    seed: int = 0,
) -> float:
    """
    Compare backpropagated gradients with central differences.

    The function runs inside a deterministic section, so any dropout with a
    keep probability below one raises ``NonDeterministicError``.

    Args:
        function: Zero-argument callable returning a scalar loss computed
            from the current values in ``params``
        params: Parameters to perturb
        step: Central-difference step, must be positive
        floor: Lower bound of the relative-error denominator
        max_entries: Check only this many randomly chosen entries per
            parameter (all entries when None)
        seed: Seed for entry sampling

    Returns:
        Maximum relative error ``|a - n| / max(|a|, |n|, floor)``
    """
    if step <= 0:
        raise ValueError(f"grad_check: step must be positive, got {step}")
    if params.dtype != np.float64:
        logger.warning("Gradient check running in %s; finite differences are unreliable", params.dtype)

    rng = np.random.default_rng(seed)
    worst = 0.0

    with deterministic():
        params.zero_grad()
        with ComputationTape() as tape:
            loss = function()
        analytic = {name: g.copy() for name, g in backward(tape, loss, params).items()}

        with no_grad():
            for name, tensor in params.items():
                flat = tensor.data.reshape(-1)
                entries = np.arange(flat.size)
                if max_entries is not None and flat.size > max_entries:
                    entries = rng.choice(flat.size, size=max_entries, replace=False)
                grad = analytic[name].reshape(-1)
                for i in entries:
                    saved = flat[i]
                    flat[i] = saved + step
                    plus = function().item()
                    flat[i] = saved - step
                    minus = function().item()
                    flat[i] = saved
                    numeric = (plus - minus) / (2.0 * step)
                    a = grad[i]
                    err = abs(a - numeric) / max(abs(a), abs(numeric), floor)
                    if err > worst:
                        worst = err
                        logger.debug("grad_check %s[%d]: analytic=%g numeric=%g", name, i, a, numeric)
    return float(worst)
