"""Automatic evaluation: STA, WO, BLEU, CS, PPL and their geometric mean GM.

Per-pair scores are aggregated into an :class:`EvalReport`; the GM standard
deviation comes from a seeded bootstrap over test pairs.
"""

from __future__ import annotations

import json
import math
import statistics
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from .data_io import LabeledCorpus
from .embeddings import EmbeddingTable, cosine, sentence_vector
from .errors import DataError
from .ngram_lm import ScoringLm
from .text import Sentence, tokenize
from .toxicity import ToxicityModel, predict_proba, predict_proba_batch

STA_THRESHOLD = 0.5


def _sent(s: Sentence | str) -> Sentence:
    return s if isinstance(s, Sentence) else tokenize(s)


def word_overlap(x: Sentence | str, y: Sentence | str, multiset: bool = False) -> float:
    """|x ∩ y| / |x ∪ y| over normalized tokens (punctuation ignored).

    Set semantics by default; ``multiset=True`` counts repeated tokens.
    """
    a, b = _sent(x).norms, _sent(y).norms
    if multiset:
        ca, cb = Counter(a), Counter(b)
        inter, union = sum((ca & cb).values()), sum((ca | cb).values())
    else:
        sa, sb = set(a), set(b)
        inter, union = len(sa & sb), len(sa | sb)
    if union == 0:
        return 1.0
    return inter / union


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(reference: Sentence | str, hypothesis: Sentence | str, max_n: int = 4) -> float:
    """Sentence BLEU with clipped precisions for n = 1..4.

    Zero match counts for n >= 2 get add-one smoothing ``1 / (total + 1)``;
    brevity penalty is ``min(1, exp(1 - |ref| / |hyp|))``.
    """
    ref, hyp = _sent(reference).keys, _sent(hypothesis).keys
    if hyp == ref:
        return 1.0
    if not hyp:
        return 0.0
    log_p = 0.0
    for n in range(1, max_n + 1):
        h, r = _ngrams(hyp, n), _ngrams(ref, n)
        total = sum(h.values())
        match = sum(min(c, r[g]) for g, c in h.items())
        if n == 1 and match == 0:
            return 0.0
        if match == 0:
            match, total = 1, total + 1
        log_p += math.log(match / total)
    bp = min(1.0, math.exp(1.0 - len(ref) / len(hyp)))
    return bp * math.exp(log_p / max_n)


def content_similarity(x: Sentence | str, y: Sentence | str, table: EmbeddingTable) -> float:
    u, v = sentence_vector(x, table), sentence_vector(y, table)
    if u is None or v is None:
        return 0.0
    return cosine(u, v)


def sta(outputs: Sequence[Sentence | str], classifier: ToxicityModel) -> float:
    """Fraction of outputs the classifier scores below 0.5 toxic probability."""
    if len(outputs) == 0:
        raise DataError("STA of an empty output list is undefined")
    probs = predict_proba_batch(classifier, [_sent(s) for s in outputs])
    return float(np.mean(probs < STA_THRESHOLD))


def corpus_ppl(outputs: Sequence[Sentence | str], lm: ScoringLm) -> float:
    """Token-pooled perplexity: exp(-sum of log-probs / sum of token counts)."""
    if len(outputs) == 0:
        raise DataError("corpus perplexity needs at least one sentence")
    lp, n = 0.0, 0
    for i, s in enumerate(outputs):
        s = _sent(s)
        if not s.tokens:
            raise DataError(f"output {i} is empty; perplexity is undefined")
        a, b = lm.sentence_logprob(s.keys)
        lp += a
        n += b
    return math.exp(-lp / n)


def gm(sta: float, cs: float, ppl: float) -> float:
    if not ppl > 0:
        raise DataError(f"perplexity must be positive, got {ppl}")
    return (max(sta, 0.0) * max(cs, 0.0) * max(1.0 / ppl, 0.0)) ** (1.0 / 3.0)


@dataclass(frozen=True)
class PairScores:
    sta_neutral: int
    wo: float
    bleu: float
    cs: float
    log_prob_sum: float
    token_count: int


def score_pair(
    x: Sentence, y: Sentence, classifier: ToxicityModel, table: EmbeddingTable, lm: ScoringLm
) -> PairScores:
    # an empty output still scores its end marker, so token_count >= 1
    lp, n = lm.sentence_logprob(y.keys)
    return PairScores(
        sta_neutral=int(predict_proba(classifier, y) < STA_THRESHOLD),
        wo=word_overlap(x, y),
        bleu=bleu(x, y),
        cs=content_similarity(x, y, table),
        log_prob_sum=lp,
        token_count=n,
    )


def aggregate(scores: Sequence[PairScores]) -> dict[str, float]:
    """Corpus-level STA, CS, WO, BLEU (means) and token-pooled PPL."""
    n = len(scores)
    if n == 0:
        raise DataError("nothing to aggregate")
    ppl = math.exp(-math.fsum(s.log_prob_sum for s in scores) / sum(s.token_count for s in scores))
    return {
        "sta": math.fsum(s.sta_neutral for s in scores) / n,
        "cs": math.fsum(s.cs for s in scores) / n,
        "wo": math.fsum(s.wo for s in scores) / n,
        "bleu": math.fsum(s.bleu for s in scores) / n,
        "ppl": ppl,
    }


def bootstrap_gm(per_pair: Sequence[PairScores], resamples: int = 1000, seed: int = 0) -> tuple[float, float]:
    """Mean and population std of GM over ``resamples`` with-replacement resamples.

    Resample ``r`` draws its indices from ``default_rng(SeedSequence(seed).spawn(resamples)[r])``
    as ``integers(0, n, size=n)``.
    """
    n = len(per_pair)
    if n == 0:
        raise DataError("bootstrap needs at least one pair")
    if resamples < 2:
        raise DataError("resamples must be >= 2")
    sta_v = np.array([p.sta_neutral for p in per_pair], dtype=np.float64)
    cs_v = np.array([p.cs for p in per_pair], dtype=np.float64)
    lp_v = np.array([p.log_prob_sum for p in per_pair], dtype=np.float64)
    tc_v = np.array([p.token_count for p in per_pair], dtype=np.float64)
    gms = []
    for child in np.random.SeedSequence(seed).spawn(resamples):
        idx = np.random.default_rng(child).integers(0, n, size=n)
        ppl = math.exp(-lp_v[idx].sum() / tc_v[idx].sum())
        gms.append(gm(sta_v[idx].mean(), cs_v[idx].mean(), ppl))
    # pstdev works in exact arithmetic, so a constant sample gives exactly 0
    return statistics.fmean(gms), statistics.pstdev(gms)


@dataclass(frozen=True)
class EvalReport:
    method: str
    sta: float
    cs: float
    wo: float
    bleu: float
    ppl: float
    gm: float
    gm_std: float
    n: int

    def to_record(self) -> str:
        return json.dumps(asdict(self), ensure_ascii=False, sort_keys=False)

    @classmethod
    def from_record(cls, line: str) -> EvalReport:
        return cls(**json.loads(line))


def make_report(method: str, scores: Sequence[PairScores], resamples: int = 1000, seed: int = 0) -> EvalReport:
    agg = aggregate(scores)
    _, std = bootstrap_gm(scores, resamples, seed)
    return EvalReport(
        method=method,
        sta=agg["sta"],
        cs=agg["cs"],
        wo=agg["wo"],
        bleu=agg["bleu"],
        ppl=agg["ppl"],
        gm=gm(agg["sta"], agg["cs"], agg["ppl"]),
        gm_std=std,
        n=len(scores),
    )


def _inputs(test) -> list[Sentence]:
    if isinstance(test, LabeledCorpus):
        test = test.texts
    return [_sent(s) for s in test]


def evaluate_pairs(
    method: str,
    inputs: Sequence[Sentence | str],
    outputs: Sequence[Sentence | str],
    classifier: ToxicityModel,
    table: EmbeddingTable,
    lm: ScoringLm,
    resamples: int = 1000,
    seed: int = 0,
) -> EvalReport:
    if len(inputs) != len(outputs):
        from .errors import AlignmentError

        raise AlignmentError(f"{len(inputs)} inputs vs {len(outputs)} outputs")
    scores = [score_pair(_sent(x), _sent(y), classifier, table, lm) for x, y in zip(inputs, outputs)]
    return make_report(method, scores, resamples, seed)


def evaluate_method(
    detoxifier,
    test: LabeledCorpus | Iterable[Sentence | str],
    classifier: ToxicityModel,
    table: EmbeddingTable,
    lm: ScoringLm,
    resamples: int = 1000,
    seed: int = 0,
) -> EvalReport:
    """Run ``detoxifier`` over every test sentence and score the outputs."""
    inputs = _inputs(test)
    outputs = [detoxifier.transform(x) for x in inputs]
    return evaluate_pairs(detoxifier.name, inputs, outputs, classifier, table, lm, resamples, seed)


COLUMNS = ("STA", "CS", "WO", "BLEU", "PPL", "GM")


def format_table(reports: Sequence[EvalReport]) -> str:
    """Aligned plain-text table: Method, STA, CS, WO, BLEU, PPL, GM ± bootstrap std."""
    width = max([len("Method")] + [len(r.method) for r in reports])
    header = f"{'Method':<{width}}  " + "  ".join(f"{c:>6}" for c in COLUMNS[:-1]) + "  GM"
    lines = [header, "-" * len(header + " ± 0.0000")]
    for r in reports:
        lines.append(
            f"{r.method:<{width}}  {r.sta:6.2f}  {r.cs:6.2f}  {r.wo:6.2f}  {r.bleu:6.2f}  "
            f"{r.ppl:6.2f}  {r.gm:.2f} ± {r.gm_std:.4f}"
        )
    return "\n".join(lines) + "\n"
