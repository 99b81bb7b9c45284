"""Offline embedding extractor for the distribution-wise evaluation pipeline."""

from .encode import (
    PairRecord,
    encode_pairs,
    encode_tokens,
    load_encoder,
    read_pair_corpus,
    read_sentences,
)
from .formats import write_matrix, write_token_archive

__version__ = "0.1.0"

__all__ = [
    "PairRecord",
    "encode_pairs",
    "encode_tokens",
    "load_encoder",
    "read_pair_corpus",
    "read_sentences",
    "write_matrix",
    "write_token_archive",
]
