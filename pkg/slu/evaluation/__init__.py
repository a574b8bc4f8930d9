"""Slot and intent metrics and evaluation reports."""

from .metrics import (
    Chunk,
    SlotMetrics,
    decode_chunks,
    encode_chunks,
    intent_accuracy,
    prf,
    slot_prf,
    token_accuracy,
    token_prf,
)
from .report import EvaluationReport, build_report, write_csv

__all__ = [
    'Chunk',
    'SlotMetrics',
    'decode_chunks',
    'encode_chunks',
    'intent_accuracy',
    'prf',
    'slot_prf',
    'token_accuracy',
    'token_prf',
    'EvaluationReport',
    'build_report',
    'write_csv',
]
