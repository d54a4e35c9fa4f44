"""Bag-of-words logistic regression toxicity classifier.

The trained weights double as per-word toxicity levels: toxic is the
positive class, so a large positive weight marks a word that pushes a
sentence towards toxic. Thresholding the weights yields the lexicon used
by Delete and condBERT.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy import sparse

from .data_io import LabeledCorpus, StyleLabel
from .errors import DataError, NumericError
from .text import Sentence, normalize_text, tokenize

MODEL_HEADER = "#rudetox-logreg\tv1"
BIAS_KEY = "__bias__"


@dataclass(frozen=True)
class Vocabulary:
    index: dict[str, int]
    min_count: int = 1

    @classmethod
    def build(cls, sentences: Iterable[Sentence], min_count: int = 1) -> Vocabulary:
        counts = Counter(w for s in sentences for w in s.norms)
        words = sorted(w for w, c in counts.items() if c >= min_count)
        return cls({w: i for i, w in enumerate(words)}, min_count)

    def __len__(self) -> int:
        return len(self.index)

    def __contains__(self, word: str) -> bool:
        return word in self.index

    @property
    def words(self) -> list[str]:
        return sorted(self.index, key=self.index.__getitem__)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 2.0
    epochs: int = 500
    l2: float = 1e-3
    seed: int = 0  # unused by full-batch GD from zero init; kept for config round-trips
    min_count: int = 1

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise DataError("learning_rate must be > 0")
        if self.epochs < 1:
            raise DataError("epochs must be >= 1")
        if self.l2 < 0:
            raise DataError("l2 must be >= 0")
        if self.min_count < 1:
            raise DataError("min_count must be >= 1")


@dataclass(frozen=True)
class ToxicityModel:
    weights: np.ndarray
    bias: float
    vocabulary: Vocabulary

    def __post_init__(self):
        if self.weights.shape != (len(self.vocabulary),):
            raise DataError("weights length must equal vocabulary size")
        if not (np.all(np.isfinite(self.weights)) and math.isfinite(self.bias)):
            raise NumericError("non-finite model parameters")

    def weight(self, word: str) -> float:
        i = self.vocabulary.index.get(word)
        return 0.0 if i is None else float(self.weights[i])

    def word_weights(self) -> dict[str, float]:
        return {w: float(self.weights[i]) for w, i in self.vocabulary.index.items()}


def _as_sentence(s: Sentence | str) -> Sentence:
    return s if isinstance(s, Sentence) else tokenize(s)


def featurize(sentence: Sentence | str, vocab: Vocabulary) -> dict[int, int]:
    """Sparse count vector {vocab index: count}; OOV tokens ignored."""
    counts: dict[int, int] = {}
    for w in _as_sentence(sentence).norms:
        i = vocab.index.get(w)
        if i is not None:
            counts[i] = counts.get(i, 0) + 1
    return counts


def design_matrix(sentences: Iterable[Sentence | str], vocab: Vocabulary) -> sparse.csr_matrix:
    rows, cols, vals = [], [], []
    n = 0
    for r, s in enumerate(sentences):
        for c, v in featurize(s, vocab).items():
            rows.append(r)
            cols.append(c)
            vals.append(v)
        n = r + 1
    return sparse.csr_matrix((vals, (rows, cols)), shape=(n, len(vocab)), dtype=np.float64)


def sigmoid(z):
    # split by sign to avoid overflow in exp
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def loss_and_grad(params: np.ndarray, X, y: np.ndarray, l2: float) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy plus ``l2/2 * ||w||^2`` (bias unpenalized).

    ``params`` is the weight vector with the bias appended. Returns the loss
    and its gradient with respect to ``params``.
    """
    w, b = params[:-1], params[-1]
    n = X.shape[0]
    z = X @ w + b
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * (w @ w))
    residual = sigmoid(z) - y
    grad = np.empty_like(params)
    grad[:-1] = X.T @ residual / n + l2 * w
    grad[-1] = residual.sum() / n
    return loss, grad


def train(corpus: LabeledCorpus, config: TrainConfig = TrainConfig()) -> ToxicityModel:
    """Full-batch gradient descent from zero initialization."""
    labels = corpus.labels
    if len(set(labels)) < 2:
        raise DataError("training corpus must contain both toxic and neutral entries")
    sentences = [tokenize(t) for t in corpus.texts]
    vocab = Vocabulary.build(sentences, config.min_count)
    X = design_matrix(sentences, vocab)
    y = np.array([1.0 if l == StyleLabel.TOXIC else 0.0 for l in labels])

    params = np.zeros(len(vocab) + 1)
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(config.epochs):
            loss, grad = loss_and_grad(params, X, y, config.l2)
            if not math.isfinite(loss) or not np.all(np.isfinite(grad)):
                raise NumericError(
                    f"non-finite loss at epoch {epoch}; learning rate {config.learning_rate} diverges"
                )
            params = params - config.learning_rate * grad
        if not np.all(np.isfinite(params)):
            raise NumericError(f"non-finite parameters; learning rate {config.learning_rate} diverges")
    return ToxicityModel(params[:-1].copy(), float(params[-1]), vocab)


def predict_proba(model: ToxicityModel, sentence: Sentence | str) -> float:
    z = model.bias + sum(model.weights[i] * c for i, c in featurize(sentence, model.vocabulary).items())
    return float(sigmoid(np.array([z]))[0])


def predict_proba_batch(model: ToxicityModel, sentences) -> np.ndarray:
    X = design_matrix(sentences, model.vocabulary)
    return sigmoid(X @ model.weights + model.bias)


def is_toxic(model: ToxicityModel, sentence: Sentence | str) -> bool:
    return predict_proba(model, sentence) >= 0.5


def f1(model: ToxicityModel, corpus: LabeledCorpus) -> float:
    """F1 of the toxic class at threshold 0.5; 0.0 when undefined."""
    pred = predict_proba_batch(model, corpus.texts) >= 0.5
    gold = np.array([l == StyleLabel.TOXIC for l in corpus.labels])
    tp = int(np.sum(pred & gold))
    fp = int(np.sum(pred & ~gold))
    fn = int(np.sum(~pred & gold))
    denom = 2 * tp + fp + fn
    return 0.0 if denom == 0 or tp == 0 else 2 * tp / denom


@dataclass(frozen=True)
class ToxicityLexicon:
    weights: dict[str, float] = field(default_factory=dict)
    threshold: float = math.inf

    def __contains__(self, word: str) -> bool:
        return word in self.weights

    def __len__(self) -> int:
        return len(self.weights)

    def __iter__(self):
        return iter(self.weights)

    def weight(self, word: str) -> float:
        return self.weights[word]

    @classmethod
    def from_words(cls, words: Iterable[str], weight: float = 1.0) -> ToxicityLexicon:
        """Lexicon from a plain word list (no model), every word at ``weight``."""
        return cls({normalize_text(w): weight for w in words if normalize_text(w)}, -math.inf)


def default_threshold(model: ToxicityModel, top_fraction: float = 0.01) -> float:
    """Threshold admitting roughly the top ``top_fraction`` of the vocabulary by weight."""
    if not 0.0 < top_fraction <= 1.0:
        raise DataError("top_fraction must be in (0, 1]")
    w = np.sort(model.weights)[::-1]
    k = max(1, math.ceil(top_fraction * len(w)))
    if k >= len(w):
        return -math.inf
    return float(w[k])


def extract_lexicon(
    model: ToxicityModel, threshold: float | None = None, manual: Iterable[str] | None = None
) -> ToxicityLexicon:
    """Words with weight > threshold, plus manual entries at the maximum model weight."""
    if threshold is None:
        threshold = default_threshold(model)
    words = {w: wt for w, wt in model.word_weights().items() if wt > threshold}
    if manual:
        top = float(model.weights.max()) if len(model.weights) else 1.0
        for w in manual:
            norm = normalize_text(w)
            if norm and norm not in words:
                words[norm] = top
    return ToxicityLexicon(words, threshold)


def save_model(model: ToxicityModel, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"{MODEL_HEADER}\tmin_count={model.vocabulary.min_count}\n")
        f.write(f"{BIAS_KEY}\t{model.bias!r}\n")
        for w in model.vocabulary.words:
            f.write(f"{w}\t{float(model.weights[model.vocabulary.index[w]])!r}\n")


def load_model(path: str | Path) -> ToxicityModel:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"model not found: {path}")
    with open(path, encoding="utf-8") as f:
        header = f.readline().rstrip("\n").split("\t")
        if header[:2] != MODEL_HEADER.split("\t"):
            raise DataError(f"{path}: not a toxicity model file")
        min_count = 1
        for opt in header[2:]:
            if opt.startswith("min_count="):
                min_count = int(opt.split("=", 1)[1])
        bias = None
        words, weights = [], []
        for lineno, line in enumerate(f, 2):
            cols = line.rstrip("\n").split("\t")
            if len(cols) != 2:
                raise DataError(f"{path}: row {lineno}: expected 'word<TAB>weight'")
            try:
                value = float(cols[1])
            except ValueError:
                raise DataError(f"{path}: row {lineno}: non-numeric weight") from None
            if cols[0] == BIAS_KEY:
                bias = value
            else:
                words.append(cols[0])
                weights.append(value)
    if bias is None:
        raise DataError(f"{path}: missing bias row")
    vocab = Vocabulary({w: i for i, w in enumerate(words)}, min_count)
    return ToxicityModel(np.array(weights, dtype=np.float64), bias, vocab)


def save_lexicon(lexicon: ToxicityLexicon, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for w, wt in sorted(lexicon.weights.items(), key=lambda kv: (-kv[1], kv[0])):
            f.write(f"{w}\t{wt!r}\n")


def load_lexicon(path: str | Path) -> ToxicityLexicon:
    """Read a ``word<TAB>weight`` lexicon; bare one-word-per-line lists get weight 1.0."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"lexicon not found: {path}")
    weights = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) == 1:
                wt = 1.0
            elif len(cols) == 2:
                try:
                    wt = float(cols[1])
                except ValueError:
                    raise DataError(f"{path}: row {lineno}: non-numeric weight") from None
            else:
                raise DataError(f"{path}: row {lineno}: expected 'word<TAB>weight'")
            norm = normalize_text(cols[0])
            if norm:
                weights[norm] = wt
    threshold = min(weights.values()) if weights else math.inf
    # lexicon invariant is weight > threshold; loaded lists keep every row
    return ToxicityLexicon(weights, math.nextafter(threshold, -math.inf) if weights else threshold)
