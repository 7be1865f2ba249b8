"""Text tokenization for transcripts.

Grapheme-level by default. A symbol mode splits on whitespace instead so a
phoneme inventory can be plugged in without code changes. Id 0 is reserved
for padding and id 1 for unknown symbols; real symbols start at 2.
"""

import dataclasses

import numpy as np

PAD_ID = 0
UNK_ID = 1
N_RESERVED = 2

DEFAULT_CHARSET = " abcdefghijklmnopqrstuvwxyz0123456789'.,;:?!-"


@dataclasses.dataclass(frozen=True)
class TokenizerConfig:
    mode: str = "grapheme"          # "grapheme" or "symbol"
    symbols: tuple = tuple(DEFAULT_CHARSET)
    lowercase: bool = True

    def __post_init__(self):
        if self.mode not in ("grapheme", "symbol"):
            raise ValueError("unknown tokenizer mode %r" % self.mode)
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("tokenizer symbols contain duplicates")


class Tokenizer:
    def __init__(self, config=None):
        self.config = config or TokenizerConfig()
        self._table = {
            s: i + N_RESERVED for i, s in enumerate(self.config.symbols)
        }

    @property
    def vocab_size(self):
        return N_RESERVED + len(self.config.symbols)

    def encode(self, text):
        if self.config.mode == "grapheme":
            # symbol inventories (e.g. ARPABET) are case-sensitive, so
            # lowercasing only applies to graphemes
            if self.config.lowercase:
                text = text.lower()
            parts = list(text)
        else:
            parts = text.split()
        ids = [self._table.get(p, UNK_ID) for p in parts]
        return np.asarray(ids, dtype=np.int64)

    def to_dict(self):
        return {
            "mode": self.config.mode,
            "symbols": list(self.config.symbols),
            "lowercase": self.config.lowercase,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(TokenizerConfig(mode=d["mode"], symbols=tuple(d["symbols"]),
                                   lowercase=d["lowercase"]))


def tokenize(text, config=None):
    """Deterministic token ids for a transcript. Empty text gives an empty
    sequence; characters outside the inventory map to UNK."""
    return Tokenizer(config).encode(text)
