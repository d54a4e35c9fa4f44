"""Count-based n-gram language models with add-alpha smoothing.

One trained :class:`NgramLm` serves three roles:

* a style-conditioned masked LM (``masked_fill``) for condBERT,
* a scoring LM (``sentence_logprob`` / ``perplexity``) for PPL,
* a generative LM (``generate``) for the prompt-driven detoxifier.

Counts are kept per style ("toxic", "neutral") plus a pooled "any" table.
Every conditional distribution is over the vocabulary plus ``<unk>`` and
the end marker, so its outcome count is ``len(vocab) + 2``. Tokens are the
``Token.key`` forms produced by :mod:`rudetox.text`.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np

from .data_io import LabeledCorpus, StyleLabel
from .errors import DataError
from .text import Sentence, tokenize

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"
STYLES = ("toxic", "neutral", "any")
LM_HEADER = "#rudetox-ngram\tv1"


def _style_key(style) -> str:
    key = style.value if isinstance(style, StyleLabel) else str(style)
    if key not in STYLES:
        raise DataError(f"unknown style {style!r}; expected one of {STYLES}")
    return key


@dataclass(frozen=True)
class CandidateDistribution:
    """(word, probability) pairs sorted by descending probability, ties by word."""

    items: tuple[tuple[str, float], ...]

    @classmethod
    def from_mapping(cls, probs: dict[str, float], normalize: bool = False) -> CandidateDistribution:
        if normalize:
            total = math.fsum(probs.values())
            if total <= 0:
                raise DataError("distribution has no mass")
            probs = {w: p / total for w, p in probs.items()}
        items = sorted(((w, float(p)) for w, p in probs.items() if p > 0), key=lambda wp: (-wp[1], wp[0]))
        return cls(tuple(items))

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def as_dict(self) -> dict[str, float]:
        return dict(self.items)

    @property
    def words(self) -> list[str]:
        return [w for w, _ in self.items]

    @property
    def probs(self) -> np.ndarray:
        return np.array([p for _, p in self.items])

    def prob(self, word: str) -> float:
        return self.as_dict().get(word, 0.0)

    def argmax(self) -> str:
        return self.items[0][0]

    def top(self, k: int) -> list[tuple[str, float]]:
        return list(self.items[:k])


@dataclass(frozen=True)
class GenerationParams:
    top_k: int = 3
    top_p: float = 0.95
    temperature: float = 50.0
    max_tokens: int = 40
    seed: int = 0

    def __post_init__(self):
        if self.top_k < 1:
            raise DataError("top_k must be >= 1")
        if not 0.0 < self.top_p <= 1.0:
            raise DataError("top_p must be in (0, 1]")
        if not self.temperature > 0:
            raise DataError("temperature must be > 0")
        if self.max_tokens < 0:
            raise DataError("max_tokens must be >= 0")
        if self.seed < 0:
            raise DataError("seed must be an unsigned integer")


class MaskedLm(Protocol):
    def masked_fill(self, left: Sequence[str], right: Sequence[str], style) -> CandidateDistribution: ...


class ScoringLm(Protocol):
    def sentence_logprob(self, tokens: Sequence[str]) -> tuple[float, int]: ...


class GenerativeLm(Protocol):
    def continue_text(self, prompt: str, params: GenerationParams, style="any") -> str: ...


class NgramLm:
    def __init__(self, order: int, alpha: float, vocab: Iterable[str]):
        if order < 1:
            raise DataError("order must be >= 1")
        if not alpha > 0:
            raise DataError("alpha must be > 0")
        self.order = order
        self.alpha = float(alpha)
        self.vocab: tuple[str, ...] = tuple(sorted(set(vocab) - {BOS, EOS, UNK}))
        self._vocab_set = frozenset(self.vocab)
        # next-token counts per style: context tuple -> Counter(next token)
        self._next: dict[str, dict[tuple, Counter]] = {s: defaultdict(Counter) for s in STYLES}
        self._total: dict[str, Counter] = {s: Counter() for s in STYLES}

    # -- training -------------------------------------------------------

    def _add(self, style: str, ngram: tuple, count: int = 1) -> None:
        ctx, w = ngram[:-1], ngram[-1]
        self._next[style][ctx][w] += count
        self._total[style][ctx] += count

    def _padded(self, tokens: Sequence[str]) -> list[str]:
        return [BOS] * (self.order - 1) + [self._map(t) for t in tokens] + [EOS]

    def add_sentence(self, tokens: Sequence[str], style) -> None:
        style = _style_key(style)
        padded = self._padded(tokens)
        for i in range(self.order - 1, len(padded)):
            ngram = tuple(padded[i - self.order + 1 : i + 1])
            self._add(style, ngram)
            if style != "any":
                self._add("any", ngram)

    # -- probabilities ----------------------------------------------------

    @property
    def outcome_size(self) -> int:
        """Number of outcomes of each conditional: vocabulary + <unk> + end marker."""
        return len(self.vocab) + 2

    def _map(self, token: str) -> str:
        return token if token in self._vocab_set or token in (EOS, BOS) else UNK

    def context_of(self, history: Sequence[str]) -> tuple:
        if self.order == 1:
            return ()
        padded = [BOS] * (self.order - 1) + [self._map(t) for t in history]
        return tuple(padded[-(self.order - 1) :])

    def prob(self, word: str, history: Sequence[str], style="any") -> float:
        style = _style_key(style)
        ctx = self.context_of(history)
        w = self._map(word)
        c = self._next[style].get(ctx)
        num = (c[w] if c else 0) + self.alpha
        return num / (self._total[style][ctx] + self.alpha * self.outcome_size)

    def _probs_over(self, ctx: tuple, words: Sequence[str], style: str) -> np.ndarray:
        c = self._next[style].get(ctx)
        denom = self._total[style][ctx] + self.alpha * self.outcome_size
        if not c:
            return np.full(len(words), self.alpha / denom)
        return np.array([c[w] + self.alpha for w in words], dtype=np.float64) / denom

    def conditional(self, history: Sequence[str], style="any") -> dict[str, float]:
        """Full conditional over vocab, <unk> and end marker (sums to one)."""
        style = _style_key(style)
        outcomes = list(self.vocab) + [UNK, EOS]
        return dict(zip(outcomes, self._probs_over(self.context_of(history), outcomes, style).tolist()))

    def next_distribution(self, history: Sequence[str], style="any") -> CandidateDistribution:
        """Next-token distribution over real words and the end marker, <unk> excluded."""
        style = _style_key(style)
        outcomes = list(self.vocab) + [EOS]
        p = self._probs_over(self.context_of(history), outcomes, style)
        return CandidateDistribution.from_mapping(dict(zip(outcomes, (p / p.sum()).tolist())))

    def masked_fill(self, left: Sequence[str], right: Sequence[str], style="any") -> CandidateDistribution:
        """Distribution of the word in a gap between ``left`` and ``right``.

        Score is P(w | left context) * P(first right token | context ending in w),
        normalized over the real vocabulary.
        """
        style = _style_key(style)
        words = self.vocab
        if not words:
            raise DataError("language model has an empty vocabulary")
        left_ctx = self.context_of(left)
        scores = self._probs_over(left_ctx, words, style)
        if right and self.order > 1:
            r = self._map(right[0])
            table, totals = self._next[style], self._total[style]
            extra = self.alpha * self.outcome_size
            keep = left_ctx[1:] if self.order > 2 else ()
            rf = np.empty(len(words))
            for i, w in enumerate(words):
                ctx = keep + (w,)
                c = table.get(ctx)
                rf[i] = ((c[r] if c else 0) + self.alpha) / (totals[ctx] + extra)
            scores = scores * rf
        scores = scores / scores.sum()
        return CandidateDistribution.from_mapping(dict(zip(words, scores.tolist())))

    # -- scoring ------------------------------------------------------------

    def sentence_logprob(self, tokens: Sequence[str], style="any") -> tuple[float, int]:
        """Natural-log probability of ``tokens`` plus end marker, and the number of predictions."""
        tokens = list(tokens)
        total = 0.0
        for i, w in enumerate(tokens + [EOS]):
            total += math.log(self.prob(w, tokens[:i], style))
        return total, len(tokens) + 1

    # -- generative contract ------------------------------------------------

    def continue_text(self, prompt: str, params: GenerationParams, style="any") -> str:
        return " ".join(generate(self, tokenize(prompt).keys, params, style))


def train_lm(corpus: LabeledCorpus, order: int = 3, alpha: float = 0.1) -> NgramLm:
    """Per-style counts from label-filtered entries plus the pooled "any" table."""
    if len(corpus) == 0:
        raise DataError("cannot train a language model on an empty corpus")
    sents = [(tokenize(t).keys, label) for t, label in corpus]
    lm = NgramLm(order, alpha, (w for toks, _ in sents for w in toks))
    for toks, label in sents:
        lm.add_sentence(toks, label)
    return lm


def masked_fill(lm: MaskedLm, left: Sequence[str], right: Sequence[str], style="any") -> CandidateDistribution:
    return lm.masked_fill(left, right, style)


def perplexity(lm: NgramLm, sentence: Sentence | str, style="any") -> float:
    if not isinstance(sentence, Sentence):
        sentence = tokenize(sentence)
    if not sentence.tokens:
        raise DataError("perplexity of an empty sentence is undefined")
    lp, n = lm.sentence_logprob(sentence.keys, style)
    return math.exp(-lp / n)


# -- sampling ------------------------------------------------------------------


def apply_temperature(dist: CandidateDistribution, temperature: float) -> CandidateDistribution:
    """p_i <- p_i^(1/t), renormalized. Order of the items is unchanged."""
    if not temperature > 0:
        raise DataError("temperature must be > 0")
    logp = np.log(dist.probs)
    if math.isinf(temperature):
        scaled = np.zeros_like(logp)
    else:
        scaled = logp / temperature
    w = np.exp(scaled - scaled.max())
    w /= w.sum()
    return CandidateDistribution(tuple(zip(dist.words, w.tolist())))


def filter_distribution(dist: CandidateDistribution, params: GenerationParams) -> CandidateDistribution:
    """Temperature, then the intersection of the top-k and nucleus (top-p) prefixes, renormalized."""
    if len(dist) == 0:
        raise DataError("cannot sample from an empty distribution")
    tempered = apply_temperature(dist, params.temperature)
    cum = np.cumsum(tempered.probs)
    # smallest prefix whose mass reaches top_p; tolerance absorbs summation error at p = 1
    hit = np.nonzero(cum >= params.top_p - 1e-12)[0]
    nucleus = int(hit[0]) + 1 if len(hit) else len(tempered)
    keep = max(1, min(params.top_k, nucleus))
    kept = tempered.items[:keep]
    total = math.fsum(p for _, p in kept)
    return CandidateDistribution(tuple((w, p / total) for w, p in kept))


def filtered_sample(
    dist: CandidateDistribution, params: GenerationParams, rng: np.random.Generator | None = None
) -> str:
    """Draw one word after filtering. Without ``rng`` a generator is seeded from ``params.seed``."""
    if rng is None:
        rng = np.random.default_rng(params.seed)
    kept = filter_distribution(dist, params)
    if len(kept) == 1:
        return kept.items[0][0]
    cum = np.cumsum(kept.probs)
    i = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    return kept.items[min(i, len(kept) - 1)][0]


def generate(lm: NgramLm, prompt: Sequence[str], params: GenerationParams, style="any") -> list[str]:
    """Autoregressive continuation until the end marker or ``max_tokens``."""
    rng = np.random.default_rng(params.seed)
    history = list(prompt)
    out: list[str] = []
    for _ in range(params.max_tokens):
        w = filtered_sample(lm.next_distribution(history, style), params, rng)
        if w == EOS:
            break
        out.append(w)
        history.append(w)
    return out


# -- persistence -----------------------------------------------------------------


def save_lm(lm: NgramLm, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(LM_HEADER + "\n")
        f.write(f"#order\t{lm.order}\n#alpha\t{lm.alpha!r}\n")
        f.write("#vocab\t" + " ".join(lm.vocab) + "\n")
        for style in ("toxic", "neutral"):
            for ctx in sorted(lm._next[style]):
                counter = lm._next[style][ctx]
                for w in sorted(counter):
                    f.write(f"{style}\t{' '.join(ctx + (w,))}\t{counter[w]}\n")
        # entries added directly under "any" (not mirrored in a style table)
        for ctx in sorted(lm._next["any"]):
            for w in sorted(lm._next["any"][ctx]):
                extra = lm._next["any"][ctx][w] - lm._next["toxic"][ctx][w] - lm._next["neutral"][ctx][w]
                if extra:
                    f.write(f"any\t{' '.join(ctx + (w,))}\t{extra}\n")


def load_lm(path: str | Path) -> NgramLm:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"language model not found: {path}")
    with open(path, encoding="utf-8") as f:
        if f.readline().rstrip("\n") != LM_HEADER:
            raise DataError(f"{path}: not an n-gram model file")
        meta = {}
        for _ in range(3):
            key, _, value = f.readline().rstrip("\n").partition("\t")
            meta[key] = value
        try:
            lm = NgramLm(int(meta["#order"]), float(meta["#alpha"]), meta["#vocab"].split())
        except (KeyError, ValueError):
            raise DataError(f"{path}: malformed header") from None
        for lineno, line in enumerate(f, 5):
            cols = line.rstrip("\n").split("\t")
            if len(cols) != 3 or cols[0] not in STYLES:
                raise DataError(f"{path}: row {lineno}: expected 'style<TAB>ngram<TAB>count'")
            ngram = tuple(cols[1].split(" "))
            if len(ngram) != lm.order:
                raise DataError(f"{path}: row {lineno}: n-gram length {len(ngram)} != order {lm.order}")
            count = int(cols[2])
            lm._add(cols[0], ngram, count)
            if cols[0] != "any":
                lm._add("any", ngram, count)
    return lm
