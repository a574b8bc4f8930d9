"""Recurrent layers and embeddings."""

from .embedding import NO_DROPOUT, Dropout, Embedder
from .recurrent import (
    GRU,
    LSTM,
    BiEncoderOutput,
    BiRecurrent,
    GruParams,
    LstmParams,
    bi_encode,
    cell_parameters,
    gru_step,
    lstm_step,
)

__all__ = [
    'NO_DROPOUT',
    'Dropout',
    'Embedder',
    'GRU',
    'LSTM',
    'BiEncoderOutput',
    'BiRecurrent',
    'GruParams',
    'LstmParams',
    'bi_encode',
    'cell_parameters',
    'gru_step',
    'lstm_step',
]
