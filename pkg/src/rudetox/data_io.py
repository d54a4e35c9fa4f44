"""Loading, validating, splitting and saving the labeled and parallel corpora.

Files are UTF-8. The labeled corpus carries a header row naming a ``text``
and a ``label`` column; the parallel corpus is header-less ``source<TAB>target``.
Seeded sampling uses numpy's ``default_rng`` (PCG64 seeded through
SeedSequence), so a given seed yields the same split on every platform.
"""

from __future__ import annotations

import csv
import enum
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import DataError


class StyleLabel(str, enum.Enum):
    TOXIC = "toxic"
    NEUTRAL = "neutral"

    def __str__(self) -> str:
        return self.value


# numeric aliases used by the Kaggle toxic-comment dumps
_LABEL_ALIASES = {
    "toxic": StyleLabel.TOXIC,
    "neutral": StyleLabel.NEUTRAL,
    "1": StyleLabel.TOXIC,
    "1.0": StyleLabel.TOXIC,
    "0": StyleLabel.NEUTRAL,
    "0.0": StyleLabel.NEUTRAL,
}


def parse_label(value: str) -> StyleLabel:
    try:
        return _LABEL_ALIASES[value.strip().lower()]
    except KeyError:
        raise DataError(f"unknown label {value!r}") from None


def _check_text(text: str, where: str) -> str:
    if not text.strip():
        raise DataError(f"{where}: empty text")
    if "\t" in text or "\n" in text or "\r" in text:
        raise DataError(f"{where}: TAB or newline inside text")
    return text


@dataclass(frozen=True)
class LabeledCorpus:
    entries: tuple[tuple[str, StyleLabel], ...]

    def __post_init__(self):
        for i, (text, label) in enumerate(self.entries):
            _check_text(text, f"entry {i}")
            if not isinstance(label, StyleLabel):
                raise DataError(f"entry {i}: label must be a StyleLabel, got {label!r}")

    @classmethod
    def from_pairs(cls, pairs) -> LabeledCorpus:
        return cls(tuple((t, StyleLabel(l)) for t, l in pairs))

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[tuple[str, StyleLabel]]:
        return iter(self.entries)

    @property
    def texts(self) -> list[str]:
        return [t for t, _ in self.entries]

    @property
    def labels(self) -> list[StyleLabel]:
        return [l for _, l in self.entries]

    def counts(self) -> Counter:
        return Counter(self.labels)

    def with_label(self, label: StyleLabel) -> LabeledCorpus:
        return LabeledCorpus(tuple(e for e in self.entries if e[1] == label))


@dataclass(frozen=True)
class ParallelCorpus:
    pairs: tuple[tuple[str, str], ...]

    def __post_init__(self):
        for i, (src, tgt) in enumerate(self.pairs):
            _check_text(src, f"pair {i} source")
            _check_text(tgt, f"pair {i} target")

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)


@dataclass(frozen=True)
class SplitSpec:
    test_size: int
    seed: int = 0

    def __post_init__(self):
        if self.test_size < 0:
            raise DataError("test_size must be non-negative")
        if self.seed < 0:
            raise DataError("seed must be an unsigned integer")


def load_labeled_corpus(path: str | Path, format: str | None = None) -> LabeledCorpus:
    """Read a labeled corpus. ``format`` is "tsv" or "csv"; inferred from the suffix if omitted."""
    path = Path(path)
    if format is None:
        format = "csv" if path.suffix.lower() == ".csv" else "tsv"
    if format not in ("tsv", "csv"):
        raise DataError(f"unsupported format {format!r}")
    if not path.is_file():
        raise FileNotFoundError(f"corpus not found: {path}")

    with open(path, encoding="utf-8", newline="") as f:
        if format == "tsv":
            reader = csv.reader(f, delimiter="\t", quoting=csv.QUOTE_NONE)
        else:
            reader = csv.reader(f)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: missing header row")
        header = [h.strip().lower() for h in header]
        if "text" not in header or "label" not in header:
            raise DataError(f"{path}: header must declare 'text' and 'label' columns, got {header}")
        ti, li = header.index("text"), header.index("label")

        entries = []
        for row in reader:
            rowno = reader.line_num
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: row {rowno}: expected {len(header)} columns, got {len(row)}")
            text = _check_text(row[ti], f"{path}: row {rowno}")
            try:
                label = parse_label(row[li])
            except DataError as exc:
                raise DataError(f"{path}: row {rowno}: {exc}") from None
            entries.append((text, label))
    return LabeledCorpus(tuple(entries))


def save_labeled_corpus(corpus: LabeledCorpus, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("text\tlabel\n")
        for text, label in corpus:
            f.write(f"{text}\t{label.value}\n")


def load_parallel_corpus(path: str | Path) -> ParallelCorpus:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"parallel corpus not found: {path}")
    pairs = []
    with open(path, encoding="utf-8") as f:
        for rowno, line in enumerate(f, 1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise DataError(f"{path}: row {rowno}: expected 2 columns, got {len(cols)}")
            if not cols[0].strip() or not cols[1].strip():
                raise DataError(f"{path}: row {rowno}: empty side")
            pairs.append((cols[0], cols[1]))
    return ParallelCorpus(tuple(pairs))


def save_parallel_corpus(corpus: ParallelCorpus, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for src, tgt in corpus:
            f.write(f"{src}\t{tgt}\n")


def split_corpus(corpus: LabeledCorpus, spec: SplitSpec) -> tuple[LabeledCorpus, LabeledCorpus]:
    """Hold out ``spec.test_size`` toxic entries; neutral entries always stay in train.

    Both halves keep source order.
    """
    toxic_idx = [i for i, (_, label) in enumerate(corpus) if label == StyleLabel.TOXIC]
    if spec.test_size > len(toxic_idx):
        raise DataError(
            f"test_size {spec.test_size} exceeds the {len(toxic_idx)} toxic entries available"
        )
    rng = np.random.default_rng(spec.seed)
    picked = rng.choice(len(toxic_idx), size=spec.test_size, replace=False)
    test_set = {toxic_idx[j] for j in picked.tolist()}
    train = tuple(e for i, e in enumerate(corpus.entries) if i not in test_set)
    test = tuple(e for i, e in enumerate(corpus.entries) if i in test_set)
    return LabeledCorpus(train), LabeledCorpus(test)


def holdout_split(corpus: LabeledCorpus, fraction: float, seed: int = 0) -> tuple[LabeledCorpus, LabeledCorpus]:
    """Uniform held-out split over all labels, used for classifier F1."""
    if not 0.0 < fraction < 1.0:
        raise DataError("fraction must be in (0, 1)")
    n_test = max(1, int(round(len(corpus) * fraction)))
    rng = np.random.default_rng(seed)
    test_set = set(rng.choice(len(corpus), size=n_test, replace=False).tolist())
    train = tuple(e for i, e in enumerate(corpus.entries) if i not in test_set)
    test = tuple(e for i, e in enumerate(corpus.entries) if i in test_set)
    return LabeledCorpus(train), LabeledCorpus(test)


def read_lines(path: str | Path) -> list[str]:
    """One sentence per line; trailing newline characters stripped, blank lines kept."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"file not found: {path}")
    with open(path, encoding="utf-8") as f:
        return [line.rstrip("\r\n") for line in f]


def write_lines(lines, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for line in lines:
            f.write(line + "\n")


def load_word_list(path: str | Path) -> list[str]:
    """Manual toxic-word list: one word per line."""
    return [w.strip() for w in read_lines(path) if w.strip()]
