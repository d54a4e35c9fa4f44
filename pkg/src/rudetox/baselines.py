"""Duplicate, Delete and Retrieve reference detoxifiers."""

from __future__ import annotations

from typing import Protocol

from .embeddings import EmbeddingTable, RetrieveIndex, nearest_neighbor
from .text import LemmaTable, Sentence, tokenize
from .toxicity import ToxicityLexicon


class Detoxifier(Protocol):
    name: str

    def transform(self, x: Sentence) -> Sentence: ...


def duplicate(x: Sentence) -> Sentence:
    return x


def is_lexicon_token(norm: str, lexicon: ToxicityLexicon, lemmas: LemmaTable | None = None) -> bool:
    if not norm:
        return False
    if norm in lexicon:
        return True
    return lemmas is not None and lemmas.lemma(norm) in lexicon


def delete(x: Sentence, lexicon: ToxicityLexicon, lemmas: LemmaTable | None = None) -> Sentence:
    """Drop every token whose normalized form (or lemma) is in the lexicon.

    The result may be empty when every token is toxic.
    """
    kept = [t.surface for t in x.tokens if not is_lexicon_token(t.norm, lexicon, lemmas)]
    return tokenize(" ".join(kept))


def retrieve(x: Sentence, index: RetrieveIndex, table: EmbeddingTable) -> Sentence:
    return tokenize(nearest_neighbor(x, index, table))


class Duplicate:
    name = "Duplicate"

    def transform(self, x: Sentence) -> Sentence:
        return duplicate(x)


class Delete:
    name = "Delete"

    def __init__(self, lexicon: ToxicityLexicon, lemmas: LemmaTable | None = None):
        self.lexicon = lexicon
        self.lemmas = lemmas

    def transform(self, x: Sentence) -> Sentence:
        return delete(x, self.lexicon, self.lemmas)


class Retrieve:
    name = "Retrieve"

    def __init__(self, index: RetrieveIndex, table: EmbeddingTable):
        self.index = index
        self.table = table

    def transform(self, x: Sentence) -> Sentence:
        return retrieve(x, self.index, self.table)
