import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rudetox import ngram_lm as nl
from rudetox.errors import DataError
from rudetox.ngram_lm import EOS, CandidateDistribution, GenerationParams
from rudetox.text import tokenize

from conftest import corpus
from oracles import chain_rule_logprob

ALPHA = 0.1


def test_bigram_probability_hand_count():
    lm = nl.train_lm(corpus(("a b", "neutral")), order=2, alpha=ALPHA)
    # outcomes: a, b, <unk>, </s>; context "a" seen once, followed by "b"
    assert lm.outcome_size == 4
    assert lm.prob("b", ["a"], "neutral") == pytest.approx((1 + ALPHA) / (1 + ALPHA * 4), rel=1e-15)


def test_unseen_context_is_uniform():
    lm = nl.train_lm(corpus(("a b", "neutral")), order=2, alpha=ALPHA)
    cond = lm.conditional(["b", "b"], "neutral")
    # context "b" is followed only by </s>
    assert cond[EOS] > cond["a"]
    cond = lm.conditional(["zzz"], "neutral")
    assert len(set(cond.values())) == 1
    assert sum(cond.values()) == pytest.approx(1.0, abs=1e-12)


def test_unigram_is_context_free():
    lm = nl.train_lm(corpus(("a b a", "neutral")), order=1, alpha=ALPHA)
    assert lm.prob("a", []) == lm.prob("a", ["b", "b"]) == pytest.approx((2 + ALPHA) / (4 + ALPHA * 4))


def test_bad_hyperparameters():
    with pytest.raises(DataError):
        nl.train_lm(corpus(("a", "neutral")), order=0)
    with pytest.raises(DataError):
        nl.train_lm(corpus(("a", "neutral")), alpha=0.0)


words = st.sampled_from(list("abcdefghij"))
sentences = st.lists(words, min_size=1, max_size=6).map(" ".join)
labels = st.sampled_from(["toxic", "neutral"])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(sentences, labels), min_size=1, max_size=6), st.integers(1, 4),
       st.lists(words, max_size=5), st.sampled_from(["toxic", "neutral", "any"]))
def test_conditionals_sum_to_one(rows, order, history, style):
    lm = nl.train_lm(corpus(*rows), order, ALPHA)
    assert math.fsum(lm.conditional(history, style).values()) == pytest.approx(1.0, abs=1e-9)
    assert math.fsum(p for _, p in lm.next_distribution(history, style)) == pytest.approx(1.0, abs=1e-9)


def test_masked_fill_argmax():
    lm = nl.train_lm(corpus(("a b c", "neutral")), order=2, alpha=ALPHA)
    dist = lm.masked_fill(["a"], ["c"], "neutral")
    assert dist.argmax() == "b"
    assert set(dist.words) == {"a", "b", "c"}
    assert math.fsum(p for _, p in dist) == pytest.approx(1.0)


def test_masked_fill_empty_right_is_left_conditional():
    lm = nl.train_lm(corpus(("a b c", "neutral"), ("a c", "toxic")), order=2, alpha=ALPHA)
    dist = lm.masked_fill(["a"], [], "neutral").as_dict()
    left = {w: lm.prob(w, ["a"], "neutral") for w in lm.vocab}
    z = sum(left.values())
    for w in lm.vocab:
        assert dist[w] == pytest.approx(left[w] / z, rel=1e-12)


def test_masked_fill_style_without_data_is_uniform():
    lm = nl.train_lm(corpus(("a b c", "toxic")), order=2, alpha=ALPHA)
    dist = lm.masked_fill(["a"], ["c"], "neutral")
    assert np.allclose(dist.probs, 1 / 3)


def test_masked_fill_mirrored_corpus_symmetry():
    rng = np.random.default_rng(5)
    for _ in range(20):
        sents = [list(rng.choice(list("abcdef"), size=rng.integers(2, 7))) for _ in range(6)]
        rows = [(" ".join(s), "neutral") for s in sents] + [(" ".join(s[::-1]), "neutral") for s in sents]
        lm = nl.train_lm(corpus(*rows), order=2, alpha=ALPHA)
        x, y = rng.choice(list("abcdef"), size=2)
        lr = lm.masked_fill([x], [y], "neutral").as_dict()
        rl = lm.masked_fill([y], [x], "neutral").as_dict()
        for w in lm.vocab:
            assert lr[w] == pytest.approx(rl[w], rel=1e-12)


def test_perplexity_uniform_model():
    # no neutral data: the neutral conditional is uniform over all outcomes
    lm = nl.train_lm(corpus(("a b c", "toxic")), order=2, alpha=ALPHA)
    assert nl.perplexity(lm, tokenize("a c b a"), "neutral") == pytest.approx(lm.outcome_size, rel=1e-12)


def test_perplexity_empty_sentence():
    lm = nl.train_lm(corpus(("a b", "neutral")), order=2)
    with pytest.raises(DataError):
        nl.perplexity(lm, tokenize(""))


def test_perplexity_toy_held_out():
    train = [["a", "b", "c"], ["a", "c"]]
    lm = nl.train_lm(corpus(*((" ".join(s), "neutral") for s in train)), order=2, alpha=ALPHA)
    lp, n = chain_rule_logprob(train, ["a", "b", "b", "d"], 2, ALPHA)
    assert nl.perplexity(lm, tokenize("a b b d")) == pytest.approx(math.exp(-lp / n), rel=1e-9)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.lists(words, min_size=1, max_size=6), min_size=1, max_size=5), st.integers(1, 4),
       st.lists(st.sampled_from(list("abcdefghijk")), min_size=1, max_size=6))
def test_perplexity_matches_chain_rule(train, order, sent):
    lm = nl.train_lm(corpus(*((" ".join(s), "toxic") for s in train)), order=order, alpha=ALPHA)
    lp, n = chain_rule_logprob(train, sent, order, ALPHA)
    assert lm.sentence_logprob(sent) == (pytest.approx(lp, rel=1e-12, abs=1e-12), n)
    assert nl.perplexity(lm, tokenize(" ".join(sent))) == pytest.approx(math.exp(-lp / n), rel=1e-9)


def dist(**probs):
    return CandidateDistribution.from_mapping(probs)


def test_top_k_one_is_argmax():
    d = dist(a=0.2, b=0.5, c=0.3)
    for seed in range(50):
        assert nl.filtered_sample(d, GenerationParams(top_k=1, top_p=1.0, temperature=50.0, seed=seed)) == "b"


def test_no_filtering_leaves_distribution():
    d = dist(a=0.2, b=0.5, c=0.3)
    out = nl.filter_distribution(d, GenerationParams(top_k=3, top_p=1.0, temperature=1.0)).as_dict()
    assert out == pytest.approx(d.as_dict(), rel=1e-12)


def test_top_p_nucleus_prefix():
    d = dist(a=0.5, b=0.3, c=0.15, d=0.05)
    kept = nl.filter_distribution(d, GenerationParams(top_k=4, top_p=0.8, temperature=1.0))
    assert kept.words == ["a", "b"]
    kept = nl.filter_distribution(d, GenerationParams(top_k=4, top_p=0.81, temperature=1.0))
    assert kept.words == ["a", "b", "c"]
    kept = nl.filter_distribution(d, GenerationParams(top_k=2, top_p=0.99, temperature=1.0))
    assert kept.words == ["a", "b"]
    kept = nl.filter_distribution(d, GenerationParams(top_k=4, top_p=0.01, temperature=1.0))
    assert kept.words == ["a"]


def test_temperature_flattening_two_words():
    d = dist(a=0.9, b=0.1)
    params = GenerationParams(top_k=2, top_p=1.0, temperature=math.inf)
    rng = np.random.default_rng(0)
    draws = [nl.filtered_sample(d, params, rng) for _ in range(10_000)]
    assert 0.48 <= draws.count("a") / 10_000 <= 0.52


probs_st = st.lists(st.floats(1e-6, 1.0), min_size=1, max_size=8)


@given(probs_st, st.floats(1e-2, 1e3))
def test_temperature_preserves_argmax(ps, t):
    d = CandidateDistribution.from_mapping({f"w{i}": p for i, p in enumerate(ps)}, normalize=True)
    tempered = nl.apply_temperature(d, t)
    assert tempered.words[int(np.argmax(tempered.probs))] == d.argmax()


def test_generate_chain():
    lm = nl.train_lm(corpus(("a b c", "neutral")), order=3, alpha=ALPHA)
    params = GenerationParams(top_k=1, temperature=50.0, seed=3)
    assert nl.generate(lm, ["a"], params) == ["b", "c"]
    assert nl.generate(lm, ["a"], GenerationParams(max_tokens=0)) == []


def test_generate_deterministic_given_seed():
    lm = nl.train_lm(corpus(("a b c d", "neutral"), ("a c b", "neutral"), ("d a b", "toxic")), order=2)
    params = GenerationParams(top_k=3, top_p=0.95, temperature=2.0, max_tokens=10, seed=42)
    assert nl.generate(lm, ["a"], params) == nl.generate(lm, ["a"], params)
    assert lm.continue_text("a", params) == lm.continue_text("a", params)


def test_generation_params_validation():
    for bad in ({"top_k": 0}, {"top_p": 0.0}, {"top_p": 1.5}, {"temperature": 0.0}, {"max_tokens": -1}):
        with pytest.raises(DataError):
            GenerationParams(**bad)


def test_lm_round_trip(tmp_path):
    lm = nl.train_lm(corpus(("a b c", "neutral"), ("a d", "toxic"), ("б, в!", "neutral")), order=3, alpha=0.25)
    lm.add_sentence(["x", "a"], "any")
    nl.save_lm(lm, tmp_path / "lm.tsv")
    back = nl.load_lm(tmp_path / "lm.tsv")
    assert back.order == 3 and back.alpha == 0.25 and back.vocab == lm.vocab
    for style in nl.STYLES:
        for hist in ([], ["a"], ["a", "b"], ["б", ","]):
            assert back.conditional(hist, style) == lm.conditional(hist, style)
