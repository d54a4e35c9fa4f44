"""condBERT-style detoxification over a style-conditioned masked LM.

Toxic tokens are located with the lexicon and replaced, left to right, by
one to ``max_len`` words. Candidates come from the masked LM conditioned on
the target style, with lexicon words penalized by ``exp(-penalty * weight)``
(or banned outright). Multi-word replacements are grown by beam search and
ranked by the harmonic mean of their token probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from .data_io import StyleLabel
from .errors import DataError
from .ngram_lm import CandidateDistribution, MaskedLm
from .text import Sentence, tokenize
from .toxicity import ToxicityLexicon


@dataclass(frozen=True)
class CondBertConfig:
    penalty: float = 1.5
    beam_width: int = 5
    max_len: int = 3
    style: str = StyleLabel.NEUTRAL.value
    hard_ban: bool = True

    def __post_init__(self):
        if self.penalty < 0:
            raise DataError("penalty must be >= 0")
        if self.beam_width < 1:
            raise DataError("beam_width must be >= 1")
        if self.max_len < 1:
            raise DataError("max_len must be >= 1")


def harmonic_mean(probs: Sequence[float]) -> float:
    return len(probs) / math.fsum(1.0 / p for p in probs)


@dataclass(frozen=True)
class BeamHypothesis:
    tokens: tuple[str, ...] = ()
    probs: tuple[float, ...] = field(default=())

    @property
    def score(self) -> float:
        return harmonic_mean(self.probs) if self.probs else 0.0

    def extend(self, word: str, p: float) -> BeamHypothesis:
        return BeamHypothesis(self.tokens + (word,), self.probs + (p,))

    def rank_key(self):
        # higher score first, then shorter, then lexicographic
        return (-self.score, len(self.tokens), self.tokens)


def find_mask_positions(x: Sentence, lexicon: ToxicityLexicon) -> list[int]:
    return [i for i, t in enumerate(x.tokens) if t.norm and t.norm in lexicon]


def penalized_distribution(
    dist: CandidateDistribution, lexicon: ToxicityLexicon, penalty: float, hard_ban: bool
) -> CandidateDistribution:
    """Down-weight (or ban) lexicon words, then renormalize."""
    out = {}
    for w, p in dist:
        if w in lexicon:
            if hard_ban:
                continue
            p = p * math.exp(-penalty * lexicon.weight(w))
        out[w] = p
    total = math.fsum(out.values())
    if total <= 0.0:
        raise DataError("toxicity penalty removed all probability mass; lexicon covers the whole vocabulary")
    return CandidateDistribution.from_mapping({w: p / total for w, p in out.items()})


def beam_replace(
    left: Sequence[str],
    right: Sequence[str],
    lm: MaskedLm,
    config: CondBertConfig,
    lexicon: ToxicityLexicon,
) -> list[str]:
    """Best replacement of length 1..max_len for the gap between ``left`` and ``right``."""
    left = list(left)
    right = list(right)
    beam = [BeamHypothesis()]
    finished: list[BeamHypothesis] = []
    for _ in range(config.max_len):
        expanded = []
        for hyp in beam:
            dist = penalized_distribution(
                lm.masked_fill(left + list(hyp.tokens), right, config.style),
                lexicon,
                config.penalty,
                config.hard_ban,
            )
            expanded.extend(hyp.extend(w, p) for w, p in dist.top(config.beam_width))
        expanded.sort(key=BeamHypothesis.rank_key)
        beam = expanded[: config.beam_width]
        finished.extend(beam)
    best = min(finished, key=BeamHypothesis.rank_key)
    return list(best.tokens)


def detoxify_condbert(x: Sentence, lm: MaskedLm, lexicon: ToxicityLexicon, config: CondBertConfig = CondBertConfig()) -> Sentence:
    """Replace toxic tokens left to right; later masks see earlier replacements."""
    positions = find_mask_positions(x, lexicon)
    if not positions:
        return x
    # surfaces for the output text, keys for LM context
    surfaces = [t.surface for t in x.tokens]
    keys = [t.key for t in x.tokens]
    shift = 0
    for pos in positions:
        i = pos + shift
        replacement = beam_replace(keys[:i], keys[i + 1 :], lm, config, lexicon)
        surfaces[i : i + 1] = replacement
        keys[i : i + 1] = replacement
        shift += len(replacement) - 1
    return tokenize(" ".join(surfaces))


class CondBert:
    name = "condBERT"

    def __init__(self, lm: MaskedLm, lexicon: ToxicityLexicon, config: CondBertConfig = CondBertConfig()):
        self.lm = lm
        self.lexicon = lexicon
        self.config = config

    def transform(self, x: Sentence) -> Sentence:
        return detoxify_condbert(x, self.lm, self.lexicon, self.config)
