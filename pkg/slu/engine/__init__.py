"""Tensor engine: dense arrays, reverse-mode differentiation, parameters."""

from .tensor import (
    ComputationTape,
    NonDeterministicError,
    ShapeError,
    Tensor,
    add,
    add_n,
    backward,
    concat,
    constant,
    cross_entropy,
    current_tape,
    deterministic,
    dropout,
    embedding,
    log_softmax,
    matmul,
    mul,
    nll,
    no_grad,
    one_minus,
    scale,
    sigmoid,
    softmax,
    softmax_array,
    stack,
    sub,
    sum_all,
    take,
    tanh,
    transpose,
    zeros,
)
from .params import CheckpointError, ParameterStore, load_checkpoint, save_checkpoint
from .gradcheck import grad_check

__all__ = [
    'ComputationTape',
    'NonDeterministicError',
    'ShapeError',
    'Tensor',
    'add',
    'add_n',
    'backward',
    'concat',
    'constant',
    'cross_entropy',
    'current_tape',
    'deterministic',
    'dropout',
    'embedding',
    'log_softmax',
    'matmul',
    'mul',
    'nll',
    'no_grad',
    'one_minus',
    'scale',
    'sigmoid',
    'softmax',
    'softmax_array',
    'stack',
    'sub',
    'sum_all',
    'take',
    'tanh',
    'transpose',
    'zeros',
    'CheckpointError',
    'ParameterStore',
    'load_checkpoint',
    'save_checkpoint',
    'grad_check',
]
