"""Corpus loading, KVRET* recombination, vocabularies and statistics."""

from .iob import OUTSIDE, derive_iob
from .kvret import SPLIT_FILES, SPLITS, DatasetError, SkipReport, load_kvret, load_kvret_split, parse_record
from .recombine import build_kvret_star, merge_sessions, split_seed
from .session import (
    ASSISTANT,
    DRIVER,
    SPEAKERS,
    DialogueSession,
    SluExample,
    Turn,
    make_examples,
    read_jsonl,
    write_jsonl,
)
from .stats import DatasetStats, SplitStats, compute_stats, split_stats
from .text import normalize_text, tokenize
from .vocab import (
    PAD,
    PAD_ID,
    UNK,
    UNK_ID,
    EncodedExample,
    EncodedSession,
    Vocab,
    build_vocab,
    encode_corpus,
    encode_session,
    slot_type,
)

__all__ = [
    'OUTSIDE',
    'derive_iob',
    'SPLIT_FILES',
    'SPLITS',
    'DatasetError',
    'SkipReport',
    'load_kvret',
    'load_kvret_split',
    'parse_record',
    'build_kvret_star',
    'merge_sessions',
    'split_seed',
    'ASSISTANT',
    'DRIVER',
    'SPEAKERS',
    'DialogueSession',
    'SluExample',
    'Turn',
    'make_examples',
    'read_jsonl',
    'write_jsonl',
    'DatasetStats',
    'SplitStats',
    'compute_stats',
    'split_stats',
    'normalize_text',
    'tokenize',
    'PAD',
    'PAD_ID',
    'UNK',
    'UNK_ID',
    'EncodedExample',
    'EncodedSession',
    'Vocab',
    'build_vocab',
    'encode_corpus',
    'encode_session',
    'slot_type',
]
