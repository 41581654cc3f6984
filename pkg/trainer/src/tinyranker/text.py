"""Shared text conventions of the shard ecosystem.

The shard files carry pre-tokenized text, but evaluation scores raw
corpus text, so the trainer re-implements the wire tokenization rule:
lowercase, words are maximal alphanumeric runs, every other non-space
character is its own token. The vocabulary file is one token per line,
line number = id, with the five special tokens first.
"""

from __future__ import annotations

import re
from pathlib import Path

TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)

PAD, CLS, SEP, MASK, UNK = "[PAD]", "[CLS]", "[SEP]", "[MASK]", "[UNK]"
SPECIAL_TOKENS = (PAD, CLS, SEP, MASK, UNK)


def tokenize_text(text: str) -> list[str]:
    return [match.group().lower() for match in TOKEN_RE.finditer(text)]


class Vocab:
    def __init__(self, tokens: list[str]):
        if tokens[: len(SPECIAL_TOKENS)] != list(SPECIAL_TOKENS):
            raise ValueError(f"vocabulary must start with {SPECIAL_TOKENS}")
        self.tokens = tokens
        self.index = {token: i for i, token in enumerate(tokens)}
        self.pad_id = self.index[PAD]
        self.cls_id = self.index[CLS]
        self.sep_id = self.index[SEP]
        self.mask_id = self.index[MASK]
        self.unk_id = self.index[UNK]

    def __len__(self) -> int:
        return len(self.tokens)

    def id_of(self, token: str) -> int:
        return self.index.get(token, self.unk_id)

    def encode(self, tokens: list[str]) -> list[int]:
        return [self.id_of(token) for token in tokens]

    @classmethod
    def load(cls, path: str | Path) -> "Vocab":
        with open(path, "r", encoding="utf-8") as handle:
            return cls([line.rstrip("\n") for line in handle if line.rstrip("\n")])
