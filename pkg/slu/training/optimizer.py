"""Adam and global-norm gradient clipping over a ParameterStore."""

from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple

import numpy as np

from slu.engine import ParameterStore, ShapeError


@dataclass(frozen=True)
class AdamHyper:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class AdamState:
    """First and second moment estimates per parameter, and the step count."""

    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0

    @classmethod
    def for_store(cls, store: ParameterStore) -> "AdamState":
        return cls(
            m={name: np.zeros_like(t.data) for name, t in store.items()},
            v={name: np.zeros_like(t.data) for name, t in store.items()},
        )


def adam_step(
    store: ParameterStore,
    grads: Mapping[str, np.ndarray],
    state: AdamState,
    hyper: AdamHyper = AdamHyper(),
) -> AdamState:
    """
    Apply one bias-corrected Adam update in place.

    Args:
        store: Parameters to update
        grads: Gradient per parameter name (missing names count as zero)
        state: Moment estimates, updated in place
        hyper: Learning rate, betas and epsilon

    Returns:
        The updated state
    """
    state.step += 1
    t = state.step
    correction1 = 1.0 - hyper.beta1 ** t
    correction2 = 1.0 - hyper.beta2 ** t
    for name, param in store.items():
        grad = grads.get(name)
        if grad is None:
            grad = np.zeros_like(param.data)
        if grad.shape != param.shape:
            raise ShapeError(f"adam_step: gradient shape {grad.shape} for parameter {name} of shape {param.shape}")
        m = state.m.setdefault(name, np.zeros_like(param.data))
        v = state.v.setdefault(name, np.zeros_like(param.data))
        m *= hyper.beta1
        m += (1.0 - hyper.beta1) * grad
        v *= hyper.beta2
        v += (1.0 - hyper.beta2) * grad * grad
        m_hat = m / correction1
        v_hat = v / correction2
        param.data -= (hyper.lr * m_hat / (np.sqrt(v_hat) + hyper.eps)).astype(param.data.dtype)
    return state


def global_norm(grads: Mapping[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(np.square(g, dtype=np.float64))) for g in grads.values())))


def clip_global_norm(grads: Dict[str, np.ndarray], max_norm: float) -> Tuple[Dict[str, np.ndarray], float]:
    """
    Rescale all gradients so their joint L2 norm is at most ``max_norm``.

    Returns:
        (gradients, norm before clipping)
    """
    norm = global_norm(grads)
    if norm > max_norm and norm > 0.0:
        factor = max_norm / norm
        grads = {name: g * factor for name, g in grads.items()}
    return grads, norm
