"""Dialogue memory: history encoding and knowledge retrieval.

Two retrieval paths produce the knowledge vector ``h``:

- attention: ``p = softmax(<c, m_i>)``, ``m_ws = sum_i p_i m_i``,
  ``h = W_o (c + m_ws)``
- sequential: ``g_i = sigmoid(FF([c ; m_i]))``, ``h`` is the final state of a
  bidirectional GRU over ``g_1 .. g_k``

With an empty history the attention path uses ``m_ws = 0`` (so ``h = W_o c``)
and the sequential path returns ``h = 0``.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

from slu.engine import (
    ParameterStore,
    ShapeError,
    Tensor,
    add,
    concat,
    matmul,
    sigmoid,
    softmax,
    stack,
    zeros,
)
from slu.layers import GRU, BiRecurrent, Embedder


@dataclass
class MemoryBank:
    """One encoded vector per history utterance, oldest first."""

    slots: List[Tensor]

    def __len__(self) -> int:
        return len(self.slots)

    @property
    def dim(self) -> Optional[int]:
        return self.slots[0].shape[0] if self.slots else None

    def matrix(self) -> Tensor:
        return stack(self.slots)


@dataclass
class KnowledgeVector:
    """Retrieved context ``h`` plus the intermediates that produced it."""

    h: Tensor
    weights: Optional[Tensor] = None
    m_ws: Optional[Tensor] = None
    gates: Optional[Tensor] = None


@dataclass
class AttentionParams:
    W_o: Tensor

    @classmethod
    def create(cls, store: ParameterStore, prefix: str, memory_dim: int) -> "AttentionParams":
        return cls(W_o=store.uniform(f"{prefix}.W_o", (memory_dim, memory_dim), fan_in=memory_dim))


@dataclass
class SequentialParams:
    ff_W: Tensor
    ff_b: Tensor
    gru_g: BiRecurrent

    @classmethod
    def create(
        cls, store: ParameterStore, prefix: str, memory_dim: int, gate_dim: int, hidden: int
    ) -> "SequentialParams":
        return cls(
            ff_W=store.uniform(f"{prefix}.ff.W", (2 * memory_dim, gate_dim), fan_in=2 * memory_dim),
            ff_b=store.zeros(f"{prefix}.ff.b", (gate_dim,)),
            gru_g=BiRecurrent.create(store, f"{prefix}.gru_g", GRU, gate_dim, hidden),
        )

    @property
    def output_dim(self) -> int:
        return self.gru_g.output_dim


RetrievalParams = Union[AttentionParams, SequentialParams]


def encode_history(history: Sequence[Sequence[int]], embed: Embedder, encoder: BiRecurrent) -> MemoryBank:
    """
    Encode every history utterance with the memory encoder.

    Args:
        history: Token-id sequences x_1 .. x_k, oldest first
        embed: Token embedder
        encoder: Bidirectional GRU (BiGRU_m)

    Returns:
        MemoryBank whose i-th slot is the encoder's final state over x_i
    """
    slots = []
    for i, utterance in enumerate(history):
        if len(utterance) == 0:
            raise ValueError(f"encode_history: utterance {i} is empty")
        slots.append(encoder(embed(utterance)).final)
    return MemoryBank(slots=slots)


def _check_memory(op: str, c: Tensor, bank: MemoryBank):
    if len(bank) == 0:
        raise ValueError(f"{op}: memory bank is empty")
    if c.shape != bank.slots[0].shape:
        raise ShapeError(f"{op}: current encoding shape {c.shape} and memory shape {bank.slots[0].shape}")


def attend(c: Tensor, bank: MemoryBank) -> Tuple[Tensor, Tensor]:
    """
    Attention of the current encoding over the memory.

    Returns:
        (attention weights p of shape (k,), weighted sum m_ws)
    """
    _check_memory("attend", c, bank)
    memory = bank.matrix()
    weights = softmax(matmul(memory, c))
    return weights, matmul(weights, memory)


def memnet_knowledge(c: Tensor, m_ws: Tensor, W_o: Tensor) -> KnowledgeVector:
    """``h = W_o (c + m_ws)``."""
    if c.shape != m_ws.shape:
        raise ShapeError(f"memnet_knowledge: shapes {c.shape} and {m_ws.shape}")
    if W_o.shape != (c.shape[0], c.shape[0]):
        raise ShapeError(f"memnet_knowledge: W_o shape {W_o.shape} and encoding shape {c.shape}")
    return KnowledgeVector(h=matmul(W_o, add(c, m_ws)), m_ws=m_ws)


def sden_knowledge(c: Tensor, bank: MemoryBank, params: SequentialParams) -> KnowledgeVector:
    """Sequential-encoder retrieval over the memory, oldest slot first."""
    _check_memory("sden_knowledge", c, bank)
    if params.ff_W.shape[0] != 2 * c.shape[0]:
        raise ShapeError(f"sden_knowledge: FF weight shape {params.ff_W.shape} and encoding shape {c.shape}")
    pairs = stack([concat([c, m]) for m in bank.slots])
    gates = sigmoid(add(matmul(pairs, params.ff_W), params.ff_b))
    h = params.gru_g(gates).final
    return KnowledgeVector(h=h, gates=gates)


def retrieve(c: Tensor, bank: MemoryBank, params: RetrievalParams) -> KnowledgeVector:
    """
    Compute the knowledge vector for ``c``, applying the empty-history rule.

    Args:
        c: Current (or candidate) utterance encoding
        bank: Encoded history, possibly empty
        params: Attention or sequential retrieval parameters

    Returns:
        KnowledgeVector
    """
    if isinstance(params, AttentionParams):
        if len(bank) == 0:
            return memnet_knowledge(c, zeros(c.shape, c.dtype), params.W_o)
        weights, m_ws = attend(c, bank)
        knowledge = memnet_knowledge(c, m_ws, params.W_o)
        knowledge.weights = weights
        return knowledge
    if isinstance(params, SequentialParams):
        if len(bank) == 0:
            return KnowledgeVector(h=zeros((params.output_dim,), c.dtype))
        return sden_knowledge(c, bank, params)
    raise TypeError(f"Unknown retrieval parameters: {type(params).__name__}")
