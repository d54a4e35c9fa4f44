"""Word-vector tables, mean-pooled sentence vectors, cosine similarity and
the exhaustive nearest-neighbour index behind Retrieve."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataError
from .text import Sentence, tokenize

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EmbeddingTable:
    vectors: dict[str, np.ndarray]
    dim: int

    def __post_init__(self):
        for w, v in self.vectors.items():
            if v.shape != (self.dim,):
                raise DataError(f"vector for {w!r} has shape {v.shape}, expected ({self.dim},)")
            if not np.all(np.isfinite(v)):
                raise DataError(f"vector for {w!r} has non-finite entries")

    def __len__(self) -> int:
        return len(self.vectors)

    def __contains__(self, word: str) -> bool:
        return word in self.vectors

    def scaled(self, alpha: float) -> EmbeddingTable:
        return EmbeddingTable({w: alpha * v for w, v in self.vectors.items()}, self.dim)


def load_embeddings(path: str | Path) -> EmbeddingTable:
    """Read the plain-text format: ``vocab_size dim`` header, then ``word v1 ... vdim`` rows.

    A duplicated word keeps its last vector and logs a warning.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"embeddings not found: {path}")
    vectors: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 2 or not all(h.isdigit() for h in header):
            raise DataError(f"{path}: missing 'vocab_size dim' header")
        dim = int(header[1])
        for lineno, line in enumerate(f, 2):
            cols = line.rstrip("\n").rstrip().split(" ")
            if cols == [""]:
                continue
            if len(cols) != dim + 1:
                raise DataError(f"{path}: row {lineno}: expected {dim + 1} fields, got {len(cols)}")
            try:
                vec = np.array([float(c) for c in cols[1:]], dtype=np.float64)
            except ValueError:
                raise DataError(f"{path}: row {lineno}: non-numeric component") from None
            if not np.all(np.isfinite(vec)):
                raise DataError(f"{path}: row {lineno}: non-finite component")
            if cols[0] in vectors:
                log.warning("%s: row %d: duplicate word %r, last occurrence wins", path, lineno, cols[0])
            vectors[cols[0]] = vec
    return EmbeddingTable(vectors, dim)


def save_embeddings(table: EmbeddingTable, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"{len(table)} {table.dim}\n")
        for w, v in table.vectors.items():
            f.write(w + " " + " ".join(repr(float(x)) for x in v) + "\n")


def sentence_vector(sentence: Sentence | str, table: EmbeddingTable) -> np.ndarray | None:
    """Mean of the in-vocabulary token vectors, looked up by normalized form; None if none hit."""
    if not isinstance(sentence, Sentence):
        sentence = tokenize(sentence)
    hits = [table.vectors[w] for w in sentence.norms if w in table.vectors]
    if not hits:
        return None
    return np.mean(hits, axis=0)


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DataError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


class RetrieveIndex:
    """Neutral candidate sentences with precomputed sentence vectors.

    Candidates without any in-vocabulary token get a zero row and can only
    win through the tie-break (lowest index).
    """

    def __init__(self, sentences: Sequence[str], vectors: np.ndarray):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(sentences):
            raise DataError("index needs one vector row per candidate")
        self.sentences = list(sentences)
        self.vectors = vectors
        norms = np.linalg.norm(vectors, axis=1)
        self._unit = np.divide(vectors, norms[:, None], out=np.zeros_like(vectors), where=norms[:, None] > 0)

    @classmethod
    def build(cls, sentences: Sequence[str], table: EmbeddingTable) -> RetrieveIndex:
        rows = []
        for s in sentences:
            v = sentence_vector(s, table)
            rows.append(np.zeros(table.dim) if v is None else v)
        return cls(sentences, np.array(rows).reshape(len(sentences), table.dim))

    def __len__(self) -> int:
        return len(self.sentences)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def nearest_index(query_vec: np.ndarray | None, index: RetrieveIndex) -> int:
    if len(index) == 0:
        raise DataError("retrieve index is empty")
    if query_vec is None:
        return 0
    qn = np.linalg.norm(query_vec)
    if qn == 0.0:
        return 0
    scores = index._unit @ (query_vec / qn)
    # argmax returns the first maximum: ties go to the lowest candidate index
    return int(np.argmax(scores))


def nearest_neighbor(query: Sentence | str, index: RetrieveIndex, table: EmbeddingTable) -> str:
    """Candidate with maximal cosine to the query; first candidate if the query has no vector."""
    return index.sentences[nearest_index(sentence_vector(query, table), index)]


def save_index(index: RetrieveIndex, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for s, v in zip(index.sentences, index.vectors):
            f.write(s + "\t" + ",".join(repr(float(x)) for x in v) + "\n")


def load_index(path: str | Path) -> RetrieveIndex:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"index not found: {path}")
    sentences, rows = [], []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise DataError(f"{path}: row {lineno}: expected 'sentence<TAB>vector'")
            try:
                rows.append([float(x) for x in cols[1].split(",")])
            except ValueError:
                raise DataError(f"{path}: row {lineno}: non-numeric component") from None
            sentences.append(cols[0])
    if rows and len({len(r) for r in rows}) != 1:
        raise DataError(f"{path}: inconsistent vector dimensions")
    return RetrieveIndex(sentences, np.array(rows).reshape(len(rows), len(rows[0]) if rows else 0))
