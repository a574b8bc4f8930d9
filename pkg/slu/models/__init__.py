"""Memory retrieval, tagger, DLI head and the full network."""

from .dli import DliExample, DliHead, DliScore, IS_NEXT, NOT_NEXT, dli_loss, dli_score, make_candidates, target_class
from .memory import (
    AttentionParams,
    KnowledgeVector,
    MemoryBank,
    SequentialParams,
    attend,
    encode_history,
    memnet_knowledge,
    retrieve,
    sden_knowledge,
)
from .network import ContextualSLU, ForwardContext
from .tagger import INIT_PROJECTIONS, SluPrediction, TaggerParams, forward_slu, slu_loss
from .variants import ATTENTION, SEQUENTIAL, SluVariant

__all__ = [
    'DliExample',
    'DliHead',
    'DliScore',
    'IS_NEXT',
    'NOT_NEXT',
    'dli_loss',
    'dli_score',
    'make_candidates',
    'target_class',
    'AttentionParams',
    'KnowledgeVector',
    'MemoryBank',
    'SequentialParams',
    'attend',
    'encode_history',
    'memnet_knowledge',
    'retrieve',
    'sden_knowledge',
    'ContextualSLU',
    'ForwardContext',
    'INIT_PROJECTIONS',
    'SluPrediction',
    'TaggerParams',
    'forward_slu',
    'slu_loss',
    'ATTENTION',
    'SEQUENTIAL',
    'SluVariant',
]
