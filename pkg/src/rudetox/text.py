"""Tokenization and normalization shared by every other module.

A token is a whitespace unit with leading/trailing punctuation peeled off
into separate tokens. Internal punctuation ("дура.а") stays attached.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable


def is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _strip_punct(s: str) -> str:
    start, end = 0, len(s)
    while start < end and is_punct(s[start]):
        start += 1
    while end > start and is_punct(s[end - 1]):
        end -= 1
    return s[start:end]


def normalize_text(surface: str) -> str:
    """Case-fold and strip surrounding punctuation.

    Full case folding (``str.casefold``) is used rather than ``lower`` so that
    ``normalize_text(s) == normalize_text(s.upper())`` holds for characters
    like "ß" whose uppercase form expands.
    """
    folded = _strip_punct(surface).casefold()
    # folding can expose punctuation at the edges (rare, but keeps idempotence)
    return _strip_punct(folded)


@dataclass(frozen=True)
class Token:
    surface: str
    norm: str

    @classmethod
    def from_surface(cls, surface: str) -> Token:
        return cls(surface, normalize_text(surface))

    @property
    def key(self) -> str:
        """Form used by the language models: the norm, or the surface for pure punctuation."""
        return self.norm or self.surface


def normalize(token: Token | str) -> str:
    if isinstance(token, Token):
        return token.norm
    return normalize_text(token)


@dataclass(frozen=True)
class Sentence:
    raw: str
    tokens: tuple[Token, ...] = field(default=())

    @classmethod
    def from_words(cls, words: Iterable[str]) -> Sentence:
        """Build a sentence whose raw text is the words joined by single spaces."""
        return tokenize(" ".join(words))

    @property
    def text(self) -> str:
        """Tokenized view: surfaces joined by single spaces."""
        return " ".join(t.surface for t in self.tokens)

    @property
    def norms(self) -> list[str]:
        return [t.norm for t in self.tokens if t.norm]

    @property
    def keys(self) -> list[str]:
        return [t.key for t in self.tokens]

    def __len__(self) -> int:
        return len(self.tokens)


def _split_unit(unit: str) -> list[str]:
    start, end = 0, len(unit)
    while start < end and is_punct(unit[start]):
        start += 1
    if start == end:
        # pure punctuation unit stays whole
        return [unit]
    while is_punct(unit[end - 1]):
        end -= 1
    parts = []
    if start:
        parts.append(unit[:start])
    parts.append(unit[start:end])
    if end < len(unit):
        parts.append(unit[end:])
    return parts


def tokenize(raw: str) -> Sentence:
    surfaces: list[str] = []
    for unit in raw.split():
        surfaces.extend(_split_unit(unit))
    return Sentence(raw, tuple(Token.from_surface(s) for s in surfaces))


class LemmaTable:
    """Optional word -> lemma mapping; keys and values are stored normalized."""

    def __init__(self, mapping: dict[str, str] | None = None):
        self._map = {normalize_text(k): normalize_text(v) for k, v in (mapping or {}).items()}

    def __len__(self) -> int:
        return len(self._map)

    def __contains__(self, word: str) -> bool:
        return word in self._map

    def lemma(self, norm: str) -> str:
        return self._map.get(norm, norm)


def load_lemma_table(path: str | Path) -> LemmaTable:
    from .errors import DataError

    mapping = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != 2 or not cols[0].strip() or not cols[1].strip():
                raise DataError(f"{path}: row {lineno}: expected 'surface<TAB>lemma'")
            mapping[cols[0]] = cols[1]
    return LemmaTable(mapping)
