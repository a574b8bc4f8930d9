"""The full contextual SLU network for one variant."""

import logging
from typing import Callable, Dict, Hashable, Optional, Sequence, Tuple

import numpy as np

from slu.engine import ParameterStore, Tensor, add_n, constant, no_grad, scale
from slu.layers import GRU, NO_DROPOUT, BiRecurrent, Dropout, Embedder

from .dli import DliHead, dli_loss, dli_score, make_candidates
from .memory import (
    AttentionParams,
    KnowledgeVector,
    MemoryBank,
    RetrievalParams,
    SequentialParams,
    retrieve,
)
from .tagger import SluPrediction, TaggerParams, forward_slu, slu_loss
from .variants import ATTENTION, SluVariant

logger = logging.getLogger(__name__)


class ForwardContext:
    """
    State shared by all forward passes of one batch.

    Holds the embedder (with or without dropout) and a cache so that each
    utterance is run through each encoder at most once per batch. A fresh
    context must be created per batch: cached tensors belong to the tape
    that was active when they were computed.
    """

    def __init__(self, model: "ContextualSLU", dropout_rate: float = 0.0, rng: Optional[np.random.Generator] = None):
        self.drop = Dropout(dropout_rate, rng) if dropout_rate > 0.0 else NO_DROPOUT
        self.embed = Embedder(model.embedding, self.drop)
        self._cache: Dict[Hashable, Tensor] = {}
        self.hits = 0

    @property
    def training(self) -> bool:
        return self.drop.rate > 0.0

    def encode(self, encoder_name: str, encoder: BiRecurrent, tokens: Sequence[int], key: Optional[Hashable] = None) -> Tensor:
        """Final state of ``encoder`` over ``tokens``; cached when ``key`` is given."""
        if key is not None:
            cache_key = (encoder_name, key, tuple(tokens))
            cached = self._cache.get(cache_key)
            if cached is not None:
                self.hits += 1
                return cached
        if len(tokens) == 0:
            raise ValueError(f"{encoder_name}: empty utterance")
        result = encoder(self.embed(list(tokens))).final
        if key is not None:
            self._cache[cache_key] = result
        return result


class ContextualSLU:
    """
    Memory-based SLU tagger with an optional dialogue-logistic-inference head.

    Parameter names: ``embedding``, ``memory.gru_m.*``, ``memory.gru_c.*``,
    ``memory.attention.W_o`` or ``memory.sequential.*``, ``tagger.*`` and
    ``dli.W_d``. NoMem has neither memory nor DLI parameters.
    """

    def __init__(
        self,
        variant,
        vocab_size: int,
        n_intents: int,
        n_slots: int,
        embedding_dim: int = 100,
        hidden: int = 64,
        seed: int = 0,
        dtype=np.float64,
    ):
        """
        Build and initialize all parameters.

        Args:
            variant: SluVariant or its name
            vocab_size: Number of token ids
            n_intents: Intent inventory size
            n_slots: Slot label inventory size
            embedding_dim: Token embedding size
            hidden: Hidden size per direction of every recurrent layer
            seed: Initialization seed
            dtype: Parameter dtype (float64 or float32)
        """
        for name, value in (('vocab_size', vocab_size), ('n_intents', n_intents), ('n_slots', n_slots),
                            ('embedding_dim', embedding_dim), ('hidden', hidden)):
            if value < 1:
                raise ValueError(f"{name} must be positive, got {value}")
        self.variant = SluVariant.parse(variant)
        self.vocab_size = vocab_size
        self.n_intents = n_intents
        self.n_slots = n_slots
        self.embedding_dim = embedding_dim
        self.hidden = hidden
        self.seed = seed

        self.store = ParameterStore(seed=seed, dtype=dtype)
        self.embedding = self.store.uniform('embedding', (vocab_size, embedding_dim), fan_in=embedding_dim)

        self.gru_m: Optional[BiRecurrent] = None
        self.gru_c: Optional[BiRecurrent] = None
        self.retrieval_params: Optional[RetrievalParams] = None
        self.dli_head: Optional[DliHead] = None
        knowledge_dim = 0
        if self.variant.uses_memory:
            self.gru_m = BiRecurrent.create(self.store, 'memory.gru_m', GRU, embedding_dim, hidden)
            self.gru_c = BiRecurrent.create(self.store, 'memory.gru_c', GRU, embedding_dim, hidden)
            memory_dim = self.gru_m.output_dim
            if self.variant.retrieval == ATTENTION:
                self.retrieval_params = AttentionParams.create(self.store, 'memory.attention', memory_dim)
                knowledge_dim = memory_dim
            else:
                sequential = SequentialParams.create(self.store, 'memory.sequential', memory_dim, hidden, hidden)
                self.retrieval_params = sequential
                knowledge_dim = sequential.output_dim
            self.dli_head = DliHead.create(self.store, 'dli', knowledge_dim)
        self.knowledge_dim = knowledge_dim

        self.tagger = TaggerParams.create(
            self.store, 'tagger', self.variant, embedding_dim, hidden, n_intents, n_slots, knowledge_dim
        )
        logger.debug("%s: %d parameters", self.variant.value, self.store.num_parameters)

    # ------------------------------------------------------------------
    # Configuration
    # ------------------------------------------------------------------

    @property
    def dtype(self):
        return self.store.dtype

    def config(self) -> Dict:
        """Constructor arguments, stored in checkpoint headers."""
        return {
            'variant': self.variant.value,
            'vocab_size': self.vocab_size,
            'n_intents': self.n_intents,
            'n_slots': self.n_slots,
            'embedding_dim': self.embedding_dim,
            'hidden': self.hidden,
            'seed': self.seed,
            'dtype': str(self.dtype),
        }

    @classmethod
    def from_config(cls, config: Dict) -> "ContextualSLU":
        return cls(
            variant=config['variant'],
            vocab_size=int(config['vocab_size']),
            n_intents=int(config['n_intents']),
            n_slots=int(config['n_slots']),
            embedding_dim=int(config['embedding_dim']),
            hidden=int(config['hidden']),
            seed=int(config.get('seed', 0)),
            dtype=np.dtype(config.get('dtype', 'float64')),
        )

    def context(self, dropout_rate: float = 0.0, rng: Optional[np.random.Generator] = None) -> ForwardContext:
        return ForwardContext(self, dropout_rate, rng)

    # ------------------------------------------------------------------
    # Memory
    # ------------------------------------------------------------------

    @property
    def retrieval(self) -> Optional[Callable[[Tensor, MemoryBank], KnowledgeVector]]:
        """The variant's retrieval function, None for NoMem."""
        if self.retrieval_params is None:
            return None
        return self.knowledge

    def _require_memory(self, op: str):
        if not self.variant.uses_memory:
            raise ValueError(f"{op}: variant {self.variant.value} has no memory")

    def memory_bank(
        self, ctx: ForwardContext, history: Sequence[Sequence[int]], session_id: Optional[str] = None
    ) -> MemoryBank:
        """Encode history utterances with BiGRU_m; cached per (session, turn) when an id is given."""
        self._require_memory('memory_bank')
        return MemoryBank(slots=[
            ctx.encode('gru_m', self.gru_m, tokens, (session_id, i) if session_id is not None else None)
            for i, tokens in enumerate(history)
        ])

    def current_encoding(
        self, ctx: ForwardContext, tokens: Sequence[int], session_id: Optional[str] = None,
        turn_index: Optional[int] = None,
    ) -> Tensor:
        """Encode an utterance with BiGRU_c (the current utterance or a DLI candidate)."""
        self._require_memory('current_encoding')
        key = (session_id, turn_index) if session_id is not None and turn_index is not None else None
        return ctx.encode('gru_c', self.gru_c, tokens, key)

    def knowledge(self, c: Tensor, bank: MemoryBank) -> KnowledgeVector:
        self._require_memory('knowledge')
        return retrieve(c, bank, self.retrieval_params)

    # ------------------------------------------------------------------
    # SLU
    # ------------------------------------------------------------------

    def forward(self, ctx: ForwardContext, example) -> SluPrediction:
        """
        Tag the current utterance of an encoded example.

        Args:
            ctx: Batch context
            example: Object with ``session_id``, ``turn_index``, ``history``
                and ``tokens`` (an ``EncodedExample``)
        """
        h = None
        if self.variant.uses_memory:
            bank = self.memory_bank(ctx, example.history, example.session_id)
            c = self.current_encoding(ctx, example.tokens, example.session_id, example.turn_index)
            h = self.knowledge(c, bank).h
        return forward_slu(list(example.tokens), h, self.variant, self.tagger, ctx.embed, ctx.drop)

    def example_loss(self, ctx: ForwardContext, example) -> Tensor:
        return slu_loss(self.forward(ctx, example), example.intent, list(example.tags))

    def slu_batch_loss(self, ctx: ForwardContext, examples: Sequence) -> Tensor:
        """Mean SLU loss over ``examples``."""
        if not examples:
            raise ValueError("slu_batch_loss: empty batch")
        return scale(add_n([self.example_loss(ctx, ex) for ex in examples]), 1.0 / len(examples))

    def predict(self, example) -> Tuple[int, np.ndarray]:
        """Inference without dropout or tape: (intent id, slot label ids)."""
        with no_grad():
            pred = self.forward(self.context(), example)
            return pred.intent(), pred.slots()

    # ------------------------------------------------------------------
    # DLI
    # ------------------------------------------------------------------

    def dli_group_loss(self, ctx: ForwardContext, session, k: int) -> Tensor:
        """
        Sum of candidate NLLs for context length ``k`` of ``session``.

        The context memory is built with BiGRU_m and candidates are encoded
        with BiGRU_c, both shared with SLU.
        """
        if self.dli_head is None:
            raise ValueError(f"dli_group_loss: variant {self.variant.value} has no DLI head")
        bank = self.memory_bank(ctx, session.turns[:k], session.id)
        scored = []
        for example in make_candidates(session, k):
            c_j = self.current_encoding(ctx, session.turns[example.candidate], session.id, example.candidate)
            scored.append((dli_score(c_j, bank, self.retrieval, self.dli_head.W_d), example.label))
        return dli_loss(scored)

    def dli_batch_loss(self, ctx: ForwardContext, groups: Sequence[Tuple[object, int]]) -> Tensor:
        """Mean group loss over ``(session, k)`` pairs; zero when there are none."""
        if not groups:
            return constant(0.0, self.dtype)
        return scale(add_n([self.dli_group_loss(ctx, session, k) for session, k in groups]), 1.0 / len(groups))
