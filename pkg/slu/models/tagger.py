"""Stacked BiGRU → BiLSTM tagger producing intent and slot distributions."""

from dataclasses import dataclass
from typing import Dict, Optional, Sequence

import numpy as np

from slu.engine import (
    ParameterStore,
    ShapeError,
    Tensor,
    add,
    concat,
    cross_entropy,
    matmul,
    no_grad,
    softmax,
    stack,
    transpose,
)
from slu.layers import GRU, LSTM, NO_DROPOUT, BiRecurrent, Dropout, Embedder

from .variants import SluVariant

INIT_PROJECTIONS = ("h_fwd", "c_fwd", "h_bwd", "c_bwd")


@dataclass
class TaggerParams:
    """
    Parameters of the tagger.

    ``init`` holds the four affine projections from ``h`` to the LSTM's
    initial (hidden, cell) states per direction; only SDEN has them.
    """

    gru_1: BiRecurrent
    lstm_2: BiRecurrent
    U: Tensor
    V: Tensor
    init: Optional[Dict[str, tuple]] = None

    @classmethod
    def create(
        cls,
        store: ParameterStore,
        prefix: str,
        variant: SluVariant,
        embedding_dim: int,
        hidden: int,
        n_intents: int,
        n_slots: int,
        knowledge_dim: int = 0,
    ) -> "TaggerParams":
        """
        Register tagger parameters for ``variant``.

        Args:
            store: Parameter store
            prefix: Name prefix
            variant: Model variant
            embedding_dim: Token embedding size
            hidden: Hidden size per direction
            n_intents: Intent inventory size
            n_slots: Slot label inventory size
            knowledge_dim: Size of ``h`` (ignored for NOMEM)
        """
        gru_1 = BiRecurrent.create(store, f"{prefix}.gru_1", GRU, embedding_dim, hidden)
        layer2_in = gru_1.output_dim + (knowledge_dim if variant.concatenates_knowledge else 0)
        lstm_2 = BiRecurrent.create(store, f"{prefix}.lstm_2", LSTM, layer2_in, hidden)
        init = None
        if variant.initializes_from_knowledge:
            init = {
                key: (
                    store.uniform(f"{prefix}.init.{key}.W", (hidden, knowledge_dim), fan_in=knowledge_dim),
                    store.zeros(f"{prefix}.init.{key}.b", (hidden,)),
                )
                for key in INIT_PROJECTIONS
            }
        return cls(
            gru_1=gru_1,
            lstm_2=lstm_2,
            U=store.uniform(f"{prefix}.U", (n_intents, lstm_2.output_dim), fan_in=lstm_2.output_dim),
            V=store.uniform(f"{prefix}.V", (n_slots, lstm_2.output_dim), fan_in=lstm_2.output_dim),
            init=init,
        )


@dataclass
class SluPrediction:
    """Intent logits (n_intents) and per-token slot logits (tokens × n_slots)."""

    intent_logits: Tensor
    slot_logits: Tensor

    def __len__(self) -> int:
        return self.slot_logits.shape[0]

    @property
    def intent_probs(self) -> np.ndarray:
        with no_grad():
            return softmax(self.intent_logits).data

    @property
    def slot_probs(self) -> np.ndarray:
        with no_grad():
            return softmax(self.slot_logits).data

    def intent(self) -> int:
        return int(np.argmax(self.intent_logits.data))

    def slots(self) -> np.ndarray:
        return np.argmax(self.slot_logits.data, axis=-1)


def forward_slu(
    tokens: Sequence[int],
    h: Optional[Tensor],
    variant: SluVariant,
    params: TaggerParams,
    embed: Embedder,
    drop: Dropout = NO_DROPOUT,
) -> SluPrediction:
    """
    Tag the current utterance.

    Args:
        tokens: Token ids of x_{k+1}
        h: Knowledge vector, required iff the variant uses memory
        variant: Model variant
        params: Tagger parameters
        embed: Token embedder (applies embedding dropout)
        drop: Dropout on the first layer's outputs

    Returns:
        SluPrediction
    """
    if len(tokens) == 0:
        raise ValueError("forward_slu: empty token sequence")
    if variant.uses_memory and h is None:
        raise ValueError(f"forward_slu: variant {variant.value} needs a knowledge vector")
    if not variant.uses_memory and h is not None:
        raise ValueError("forward_slu: NoMem takes no knowledge vector")

    o_1 = drop(params.gru_1(embed(tokens)).matrix())

    init = None
    if variant.concatenates_knowledge:
        layer2_in = concat([o_1, stack([h] * len(tokens))], axis=1)
    else:
        layer2_in = o_1
    if variant.initializes_from_knowledge:
        if params.init is None:
            raise ShapeError("forward_slu: SDEN tagger is missing its initial-state projections")
        proj = {key: add(matmul(W, h), b) for key, (W, b) in params.init.items()}
        init = ((proj["h_fwd"], proj["c_fwd"]), (proj["h_bwd"], proj["c_bwd"]))

    layer2 = params.lstm_2(layer2_in, init=init)
    intent_logits = matmul(params.U, layer2.final)
    slot_logits = matmul(layer2.matrix(), transpose(params.V))
    return SluPrediction(intent_logits=intent_logits, slot_logits=slot_logits)


def slu_loss(pred: SluPrediction, intent_target: int, slot_targets: Sequence[int]) -> Tensor:
    """
    Negative joint log-likelihood: ``NLL(intent) + sum_t NLL(slot_t)``.

    Raises:
        ValueError: Target index out of range or slot count mismatch
    """
    if len(slot_targets) != len(pred):
        raise ValueError(f"slu_loss: {len(slot_targets)} slot targets for {len(pred)} tokens")
    return add(
        cross_entropy(pred.intent_logits, [intent_target]),
        cross_entropy(pred.slot_logits, list(slot_targets)),
    )
