"""GRU and LSTM cells and bidirectional sequence encoders.

Vectors are rows: a step computes ``x W + h U + b`` with ``W`` of shape
(input_dim × hidden) and ``U`` of shape (hidden × hidden).

GRU convention: ``h_t = (1 - z) * h_prev + z * n`` with the reset gate applied
to the recurrent term inside the candidate's tanh.
"""

from dataclasses import dataclass, fields
from typing import List, Optional, Sequence, Tuple, Union

from slu.engine import (
    ParameterStore,
    ShapeError,
    Tensor,
    add,
    concat,
    matmul,
    mul,
    one_minus,
    sigmoid,
    stack,
    take,
    tanh,
    zeros,
)

GRU = "gru"
LSTM = "lstm"


@dataclass
class GruParams:
    W_z: Tensor
    W_r: Tensor
    W_n: Tensor
    U_z: Tensor
    U_r: Tensor
    U_n: Tensor
    b_z: Tensor
    b_r: Tensor
    b_n: Tensor

    def __post_init__(self):
        _check_gate_shapes(self, "zrn")

    @classmethod
    def create(cls, store: ParameterStore, prefix: str, input_dim: int, hidden: int) -> "GruParams":
        """Register a fresh set of GRU parameters under ``prefix``."""
        return cls(**_create_gates(store, prefix, input_dim, hidden, "zrn"))

    @property
    def input_dim(self) -> int:
        return self.W_z.shape[0]

    @property
    def hidden(self) -> int:
        return self.U_z.shape[0]


@dataclass
class LstmParams:
    W_i: Tensor
    W_f: Tensor
    W_o: Tensor
    W_g: Tensor
    U_i: Tensor
    U_f: Tensor
    U_o: Tensor
    U_g: Tensor
    b_i: Tensor
    b_f: Tensor
    b_o: Tensor
    b_g: Tensor

    def __post_init__(self):
        _check_gate_shapes(self, "ifog")

    @classmethod
    def create(cls, store: ParameterStore, prefix: str, input_dim: int, hidden: int) -> "LstmParams":
        """Register a fresh set of LSTM parameters under ``prefix``."""
        return cls(**_create_gates(store, prefix, input_dim, hidden, "ifog"))

    @property
    def input_dim(self) -> int:
        return self.W_i.shape[0]

    @property
    def hidden(self) -> int:
        return self.U_i.shape[0]


CellParams = Union[GruParams, LstmParams]


def _create_gates(store: ParameterStore, prefix: str, input_dim: int, hidden: int, gates: str) -> dict:
    tensors = {}
    for g in gates:
        tensors[f"W_{g}"] = store.uniform(f"{prefix}.W_{g}", (input_dim, hidden), fan_in=input_dim)
    for g in gates:
        tensors[f"U_{g}"] = store.uniform(f"{prefix}.U_{g}", (hidden, hidden), fan_in=hidden)
    for g in gates:
        tensors[f"b_{g}"] = store.zeros(f"{prefix}.b_{g}", (hidden,))
    return tensors


def _check_gate_shapes(params, gates: str):
    first = gates[0]
    input_dim, hidden = getattr(params, f"W_{first}").shape
    for g in gates:
        expected = {
            f"W_{g}": (input_dim, hidden),
            f"U_{g}": (hidden, hidden),
            f"b_{g}": (hidden,),
        }
        for name, shape in expected.items():
            actual = getattr(params, name).shape
            if actual != shape:
                raise ShapeError(f"{type(params).__name__}.{name}: shape {actual}, expected {shape}")


def cell_parameters(params: CellParams) -> List[Tensor]:
    return [getattr(params, f.name) for f in fields(params)]


@dataclass
class BiEncoderOutput:
    """Per-step outputs ``[forward_t ; backward_t]`` and the final state."""

    steps: List[Tensor]
    final: Tensor

    def __len__(self) -> int:
        return len(self.steps)

    def matrix(self) -> Tensor:
        """Per-step outputs stacked into a (length × 2·hidden) matrix."""
        return stack(self.steps)


def _check_vector(name: str, x: Tensor, size: int):
    if x.shape != (size,):
        raise ShapeError(f"{name}: shape {x.shape} does not match expected {(size,)}")


# ---------------------------------------------------------------------------
# Cells
# ---------------------------------------------------------------------------

def _gru_cell(xz: Tensor, xr: Tensor, xn: Tensor, h_prev: Tensor, p: GruParams) -> Tensor:
    z = sigmoid(add(xz, matmul(h_prev, p.U_z)))
    r = sigmoid(add(xr, matmul(h_prev, p.U_r)))
    n = tanh(add(xn, mul(r, matmul(h_prev, p.U_n))))
    return add(mul(one_minus(z), h_prev), mul(z, n))


def gru_step(x_t: Tensor, h_prev: Tensor, params: GruParams) -> Tensor:
    """
    One GRU update.

    Args:
        x_t: Input vector (input_dim)
        h_prev: Previous hidden state (hidden)
        params: Cell parameters

    Returns:
        New hidden state
    """
    _check_vector("gru_step input", x_t, params.input_dim)
    _check_vector("gru_step state", h_prev, params.hidden)
    xz = add(matmul(x_t, params.W_z), params.b_z)
    xr = add(matmul(x_t, params.W_r), params.b_r)
    xn = add(matmul(x_t, params.W_n), params.b_n)
    return _gru_cell(xz, xr, xn, h_prev, params)


def _lstm_cell(xi, xf, xo, xg, state: Tuple[Tensor, Tensor], p: LstmParams) -> Tuple[Tensor, Tensor]:
    h_prev, c_prev = state
    i = sigmoid(add(xi, matmul(h_prev, p.U_i)))
    f = sigmoid(add(xf, matmul(h_prev, p.U_f)))
    o = sigmoid(add(xo, matmul(h_prev, p.U_o)))
    g = tanh(add(xg, matmul(h_prev, p.U_g)))
    c = add(mul(f, c_prev), mul(i, g))
    h = mul(o, tanh(c))
    return h, c


def lstm_step(x_t: Tensor, state: Tuple[Tensor, Tensor], params: LstmParams) -> Tuple[Tensor, Tensor]:
    """
    One LSTM update.

    Args:
        x_t: Input vector (input_dim)
        state: (h_prev, c_prev)
        params: Cell parameters

    Returns:
        (h_t, c_t)
    """
    h_prev, c_prev = state
    _check_vector("lstm_step input", x_t, params.input_dim)
    _check_vector("lstm_step hidden state", h_prev, params.hidden)
    _check_vector("lstm_step cell state", c_prev, params.hidden)
    proj = [add(matmul(x_t, getattr(params, f"W_{g}")), getattr(params, f"b_{g}")) for g in "ifog"]
    return _lstm_cell(*proj, state, params)


# ---------------------------------------------------------------------------
# Bidirectional encoder
# ---------------------------------------------------------------------------

def _project(x: Tensor, params: CellParams, gates: str) -> List[Tensor]:
    return [add(matmul(x, getattr(params, f"W_{g}")), getattr(params, f"b_{g}")) for g in gates]


def _run(cell: str, x: Tensor, params: CellParams, init, order: Sequence[int]) -> List[Tensor]:
    """Unroll one direction over ``order``; returns hidden states indexed by position."""
    outputs: List[Optional[Tensor]] = [None] * x.shape[0]
    if cell == GRU:
        proj = _project(x, params, "zrn")
        h = init
        for t in order:
            h = _gru_cell(take(proj[0], t), take(proj[1], t), take(proj[2], t), h, params)
            outputs[t] = h
    else:
        proj = _project(x, params, "ifog")
        state = init
        for t in order:
            state = _lstm_cell(*(take(p, t) for p in proj), state, params)
            outputs[t] = state[0]
    return outputs


def _default_init(cell: str, hidden: int, dtype):
    if cell == GRU:
        return zeros((hidden,), dtype)
    return zeros((hidden,), dtype), zeros((hidden,), dtype)


def _check_init(cell: str, init, hidden: int):
    parts = [init] if cell == GRU else list(init)
    for part in parts:
        _check_vector(f"{cell} initial state", part, hidden)


def bi_encode(
    seq: Union[Tensor, Sequence[Tensor]],
    cell: str,
    params_fwd: CellParams,
    params_bwd: CellParams,
    init=None,
    allow_empty: bool = False,
) -> BiEncoderOutput:
    """
    Run a bidirectional recurrent encoder.

    Args:
        seq: Input matrix (length × input_dim) or list of input vectors
        cell: ``"gru"`` or ``"lstm"``
        params_fwd: Left-to-right cell parameters
        params_bwd: Right-to-left cell parameters
        init: Optional (forward, backward) initial states; each is a hidden
            vector for GRU and a (hidden, cell) pair for LSTM
        allow_empty: Accept an empty sequence (empty steps, zero final state)

    Returns:
        BiEncoderOutput with per-step concatenated outputs and the final state
        ``[forward_last ; backward_last]``
    """
    expected = GruParams if cell == GRU else LstmParams if cell == LSTM else None
    if expected is None:
        raise ValueError(f"Unknown cell type: {cell}")
    if not isinstance(params_fwd, expected) or not isinstance(params_bwd, expected):
        raise TypeError(f"bi_encode: {cell} cell needs {expected.__name__} for both directions")
    if params_fwd.input_dim != params_bwd.input_dim:
        raise ShapeError(
            f"bi_encode: forward input dim {params_fwd.input_dim} and backward input dim {params_bwd.input_dim} differ"
        )

    hidden_f, hidden_b = params_fwd.hidden, params_bwd.hidden
    dtype = params_fwd.W_z.dtype if cell == GRU else params_fwd.W_i.dtype

    if isinstance(seq, Tensor):
        x = seq
    elif len(seq) == 0:
        x = None
    else:
        x = stack(list(seq))

    if x is None or x.shape[0] == 0:
        if not allow_empty:
            raise ValueError("bi_encode: empty input sequence")
        return BiEncoderOutput(steps=[], final=zeros((hidden_f + hidden_b,), dtype))
    if x.ndim != 2 or x.shape[1] != params_fwd.input_dim:
        raise ShapeError(
            f"bi_encode: input shape {x.shape} does not match input dim {params_fwd.input_dim}"
        )

    if init is None:
        init_f, init_b = _default_init(cell, hidden_f, dtype), _default_init(cell, hidden_b, dtype)
    else:
        init_f, init_b = init
        _check_init(cell, init_f, hidden_f)
        _check_init(cell, init_b, hidden_b)

    length = x.shape[0]
    forward = _run(cell, x, params_fwd, init_f, range(length))
    backward = _run(cell, x, params_bwd, init_b, range(length - 1, -1, -1))
    steps = [concat([forward[t], backward[t]]) for t in range(length)]
    final = concat([forward[-1], backward[0]])
    return BiEncoderOutput(steps=steps, final=final)


@dataclass
class BiRecurrent:
    """A named pair of forward/backward cells."""

    cell: str
    fwd: CellParams
    bwd: CellParams

    @classmethod
    def create(cls, store: ParameterStore, prefix: str, cell: str, input_dim: int, hidden: int) -> "BiRecurrent":
        factory = GruParams if cell == GRU else LstmParams
        return cls(
            cell=cell,
            fwd=factory.create(store, f"{prefix}.fwd", input_dim, hidden),
            bwd=factory.create(store, f"{prefix}.bwd", input_dim, hidden),
        )

    @property
    def output_dim(self) -> int:
        return self.fwd.hidden + self.bwd.hidden

    def __call__(self, seq, init=None, allow_empty: bool = False) -> BiEncoderOutput:
        return bi_encode(seq, self.cell, self.fwd, self.bwd, init=init, allow_empty=allow_empty)
