"""Corpus preparation, tokenization, and batching."""

from .batch import (
    MEL_PAD_VALUE,
    Batch,
    Example,
    load_example,
    make_batch,
    padded_length,
    sample_batch_indices,
)
from .manifest import (
    MANIFEST_VERSION,
    PipelineConfig,
    SpeakerTable,
    UtteranceRecord,
    build_manifest,
    load_manifest,
    save_manifest,
    scan_corpus,
)
from .tokenizer import (
    DEFAULT_CHARSET,
    PAD_ID,
    UNK_ID,
    Tokenizer,
    TokenizerConfig,
    tokenize,
)
from .toy import generate_toy_corpus

__all__ = [
    "MEL_PAD_VALUE",
    "Batch",
    "Example",
    "load_example",
    "make_batch",
    "padded_length",
    "sample_batch_indices",
    "MANIFEST_VERSION",
    "PipelineConfig",
    "SpeakerTable",
    "UtteranceRecord",
    "build_manifest",
    "load_manifest",
    "save_manifest",
    "scan_corpus",
    "DEFAULT_CHARSET",
    "PAD_ID",
    "UNK_ID",
    "Tokenizer",
    "TokenizerConfig",
    "tokenize",
    "generate_toy_corpus",
]
