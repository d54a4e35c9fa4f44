"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line shown in the terminal summary (and on
stdout with ``-s``). Run just these with ``pytest -m acceptance``.
"""

import math
import time

import numpy as np
import pytest

from rudetox import ngram_lm as nl
from rudetox import toxicity as tx
from rudetox.baselines import Delete, Duplicate
from rudetox.cli import evaluate_files
from rudetox.condbert import CondBert, CondBertConfig, beam_replace
from rudetox.data_io import LabeledCorpus, ParallelCorpus, SplitSpec, StyleLabel, holdout_split, split_corpus, write_lines
from rudetox.embeddings import EmbeddingTable, RetrieveIndex, nearest_neighbor
from rudetox.metrics import PairScores, bootstrap_gm, corpus_ppl, evaluate_method, gm
from rudetox.ngram_lm import CandidateDistribution, GenerationParams
from rudetox.promptgen import (
    PromptMode,
    build_few_shot,
    build_finetune_records,
    build_zero_shot,
    detoxify_prompted,
    train_finetuned_lm,
)
from rudetox.synth import SyntheticWorld
from rudetox.text import tokenize

from oracles import brute_force_nearest, chain_rule_logprob, exhaustive_best, random_instance

pytestmark = pytest.mark.acceptance


def test_c01_gm_rows(criterion):
    rows = [((0.91, 0.85, 65.74), 0.22), ((0.61, 0.77, 36.92), 0.23), ((0.66, 0.86, 209.95), 0.14)]
    got = [gm(*triple) for triple, _ in rows]
    ok = all(abs(g - want) <= 0.01 for g, (_, want) in zip(got, rows))
    criterion(1, "GM reproduces published rows within 0.01", ok, ", ".join(f"{g:.4f}" for g in got))


def test_c02_duplicate_identities(criterion, tmp_path):
    world = SyntheticWorld.create(seed=3)
    train = world.corpus(200, 400, seed=4)
    classifier = tx.train(train, tx.TrainConfig(epochs=100))
    lm = nl.train_lm(train, order=2)
    table = world.embeddings()
    rng = np.random.default_rng(5)
    pool = world.vocabulary
    lines = []
    for _ in range(100):
        words = [str(w) for w in rng.choice(pool, size=rng.integers(1, 12))]
        words[0] = words[0].capitalize()
        lines.append(" ".join(words) + str(rng.choice([".", "!", "?", ""])))
    write_lines(lines, tmp_path / "in.txt")
    write_lines([Duplicate().transform(tokenize(l)).raw for l in lines], tmp_path / "out.txt")
    start = time.perf_counter()
    (report,) = evaluate_files(tmp_path / "in.txt", [("Duplicate", tmp_path / "out.txt")], classifier, table, lm,
                               resamples=1000, seed=0)
    elapsed = time.perf_counter() - start
    ok = report.wo == 1.0 and report.bleu == 1.0 and report.cs == 1.0 and elapsed < 1.0
    criterion(2, "Duplicate gives WO = BLEU = CS = 1 on 100 sentences", ok,
              f"WO {report.wo} BLEU {report.bleu} CS {report.cs}, {elapsed:.2f}s")


def test_c03_delete_vs_condbert(criterion):
    start = time.perf_counter()
    world = SyntheticWorld.create(seed=0)
    train, test = split_corpus(world.corpus(1500, 3000, seed=1), SplitSpec(500, seed=2))
    classifier = tx.train(train)
    lexicon = tx.extract_lexicon(classifier, manual=world.toxic_words)
    lm = nl.train_lm(train, order=3, alpha=0.1)
    table = world.embeddings()
    delete = evaluate_method(Delete(lexicon), test, classifier, table, lm, resamples=100)
    cond = evaluate_method(CondBert(lm, lexicon, CondBertConfig(hard_ban=True)), test, classifier, table, lm,
                           resamples=100)
    elapsed = time.perf_counter() - start
    ok = (len(test) == 500 and delete.sta >= 0.95 and cond.sta >= 0.95 and cond.wo >= delete.wo - 0.05
          and cond.ppl <= delete.ppl and elapsed < 30.0)
    criterion(3, "condBERT keeps STA and WO of Delete with lower PPL", ok,
              f"Delete STA {delete.sta:.3f} WO {delete.wo:.4f} PPL {delete.ppl:.1f}; "
              f"condBERT STA {cond.sta:.3f} WO {cond.wo:.4f} PPL {cond.ppl:.1f}; {elapsed:.1f}s")


def test_c04_logreg_gradient_and_f1(criterion):
    start = time.perf_counter()
    world = SyntheticWorld.create(seed=11)
    small = world.corpus(20, 30, seed=12)
    sents = [tokenize(t) for t in small.texts]
    vocab = tx.Vocabulary.build(sents)
    X = tx.design_matrix(sents, vocab)
    y = np.array([1.0 if l == StyleLabel.TOXIC else 0.0 for l in small.labels])
    rng = np.random.default_rng(13)
    h = 1e-6
    worst = 0.0
    for _ in range(10):
        p = rng.normal(scale=1.0, size=len(vocab) + 1)
        _, g = tx.loss_and_grad(p, X, y, 1e-3)
        fd = np.empty_like(p)
        for j in range(len(p)):
            e = np.zeros_like(p)
            e[j] = h
            fd[j] = (tx.loss_and_grad(p + e, X, y, 1e-3)[0] - tx.loss_and_grad(p - e, X, y, 1e-3)[0]) / (2 * h)
        worst = max(worst, np.linalg.norm(g - fd) / max(np.linalg.norm(g), np.linalg.norm(fd)))
    train, held = holdout_split(world.corpus(1000, 2000, seed=14), 0.2, seed=15)
    score = tx.f1(tx.train(train), held)
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-5 and score >= 0.95 and elapsed < 10.0
    criterion(4, "logistic regression gradient check and held-out F1", ok,
              f"max rel err {worst:.2e}, F1 {score:.4f}, {elapsed:.1f}s")


def test_c05_beam_vs_exhaustive(criterion):
    start = time.perf_counter()
    rng = np.random.default_rng(5)
    agree = 0
    for _ in range(200):
        left, right, lm, cfg, lexicon = random_instance(rng)
        agree += beam_replace(left, right, lm, cfg, lexicon) == exhaustive_best(left, right, lm, cfg, lexicon)
    elapsed = time.perf_counter() - start
    criterion(5, "beam search equals exhaustive enumeration", agree == 200 and elapsed < 10.0,
              f"{agree}/200, {elapsed:.1f}s")


def test_c06_retrieve_vs_brute_force(criterion):
    start = time.perf_counter()
    rng = np.random.default_rng(6)
    words = [f"w{i}" for i in range(60)]
    agree = 0
    for _ in range(100):
        dim = int(rng.integers(2, 9))
        vectors = {w: rng.normal(size=dim) for w in words[:50]}  # w50..w59 stay out of vocabulary
        table = EmbeddingTable(vectors, dim)
        n = int(rng.integers(1, 1001))
        cands = [[str(w) for w in rng.choice(words, size=rng.integers(1, 5))] for _ in range(n)]
        if n > 3:
            cands[n // 2] = list(cands[n // 3])  # duplicate candidate: ties go to the earlier one
        query = [str(w) for w in rng.choice(words, size=rng.integers(1, 5))]
        index = RetrieveIndex.build([" ".join(c) for c in cands], table)
        got = nearest_neighbor(" ".join(query), index, table)
        want, _ = brute_force_nearest(query, cands, {w: v.tolist() for w, v in vectors.items()})
        agree += got == " ".join(cands[want])
    elapsed = time.perf_counter() - start
    criterion(6, "Retrieve equals brute-force nearest neighbour", agree == 100 and elapsed < 10.0,
              f"{agree}/100, {elapsed:.1f}s")


def test_c07_perplexity_oracle(criterion):
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(50):
        vocab = [f"t{i}" for i in range(int(rng.integers(2, 10)))]
        train = [[str(w) for w in rng.choice(vocab, size=rng.integers(1, 8))] for _ in range(rng.integers(1, 10))]
        order, alpha = int(rng.integers(1, 5)), float(rng.uniform(0.01, 2.0))
        lm = nl.train_lm(LabeledCorpus(tuple((" ".join(s), StyleLabel.NEUTRAL) for s in train)), order, alpha)
        outs = [[str(w) for w in rng.choice(vocab + ["oov"], size=rng.integers(1, 8))] for _ in range(rng.integers(1, 6))]
        lp = n = 0
        for s in outs:
            a, b = chain_rule_logprob(train, s, order, alpha)
            lp, n = lp + a, n + b
        want = math.exp(-lp / n)
        worst = max(worst, abs(corpus_ppl([" ".join(s) for s in outs], lm) - want) / want)
    # no data in the neutral tables: every outcome has probability 1 / outcome_size
    uniform = nl.train_lm(LabeledCorpus((("a b c d", StyleLabel.TOXIC),)), order=3)

    class Neutral:
        def sentence_logprob(self, tokens):
            return uniform.sentence_logprob(tokens, "neutral")

    ppl = corpus_ppl(["a b", "d c b a e", "c"], Neutral())
    # exp(log V) is not bit-exact in binary floating point, so "exactly" means to round-off
    uniform_ok = math.isclose(ppl, uniform.outcome_size, rel_tol=1e-12)
    elapsed = time.perf_counter() - start
    criterion(7, "corpus PPL equals chain-rule oracle; uniform PPL equals outcome count",
              worst <= 1e-9 and uniform_ok and elapsed < 5.0,
              f"max rel err {worst:.1e}, uniform {ppl!r} vs {uniform.outcome_size}, {elapsed:.2f}s")


def test_c08_sampling_contracts(criterion):
    start = time.perf_counter()
    rng = np.random.default_rng(8)
    ok_argmax = ok_identity = ok_temp = True
    for _ in range(200):
        v = int(rng.integers(1, 12))
        p = rng.dirichlet(np.ones(v))
        dist = CandidateDistribution.from_mapping({f"x{i}": float(q) for i, q in enumerate(p)})
        t = float(rng.uniform(0.1, 100.0))
        ok_argmax &= nl.filtered_sample(dist, GenerationParams(top_k=1, temperature=t, seed=int(rng.integers(1e6)))) \
            == dist.argmax()
        same = nl.filter_distribution(dist, GenerationParams(top_k=v, top_p=1.0, temperature=1.0))
        ok_identity &= same.words == dist.words and np.allclose(same.probs, dist.probs, rtol=1e-12, atol=0)
        ok_temp &= nl.apply_temperature(dist, t).argmax() == dist.argmax()
    two = CandidateDistribution.from_mapping({"a": 0.9, "b": 0.1})
    params = GenerationParams(top_k=2, top_p=1.0, temperature=math.inf)
    draw_rng = np.random.default_rng(0)
    freq = [nl.filtered_sample(two, params, draw_rng) for _ in range(10_000)].count("a") / 10_000
    elapsed = time.perf_counter() - start
    ok = ok_argmax and ok_identity and ok_temp and 0.48 <= freq <= 0.52 and elapsed < 5.0
    criterion(8, "top-k, top-p and temperature sampling contracts", ok,
              f"argmax {ok_argmax}, identity {ok_identity}, temperature {ok_temp}, freq(a) {freq:.4f}")


def test_c09_prompt_round_trips(criterion):
    start = time.perf_counter()
    pairs = ParallelCorpus((("ты дурак", "ты неправ"), ("он идиот полный", "он странный"),
                            ("какой кошмар", "какая неудача")))
    golden = (
        build_zero_shot(tokenize("ты дурак")) == "Перефразируй\nты дурак >>>"
        and build_few_shot(pairs, "ты дурак", 0) == "Перефразируй\nты дурак >>>"
        and build_few_shot(pairs, "x", 1) == "ты дурак >>> ты неправ\nПерефразируй\nx >>>"
        and build_finetune_records(ParallelCorpus((("дурак", "человек"),))) == ["дурак >>> человек"]
    )
    lm = train_finetuned_lm(pairs, order=3)
    params = GenerationParams(top_k=1)
    outs = [detoxify_prompted(src, lm, PromptMode.FINETUNED_SIM, params).raw for src, _ in pairs]
    reproduced = outs == [tgt for _, tgt in pairs]
    elapsed = time.perf_counter() - start
    criterion(9, "prompt formats are byte-exact; fine-tuned LM reproduces targets",
              golden and reproduced and elapsed < 5.0, f"golden {golden}, outputs {outs}")


def test_c10_bootstrap(criterion):
    start = time.perf_counter()
    pairs = [PairScores(1, 0.8, 0.5, 0.9, -12.0, 5), PairScores(0, 0.4, 0.2, 0.7, -20.0, 6),
             PairScores(1, 1.0, 1.0, 0.95, -8.0, 4)]
    constant = bootstrap_gm([pairs[0]] * 9, 1000, 1)[1] == 0.0
    deterministic = bootstrap_gm(pairs, 1000, 42) == bootstrap_gm(pairs, 1000, 42)
    _, std = bootstrap_gm(pairs, 1000, 0)
    values = []
    for child in np.random.SeedSequence(0).spawn(1000):
        idx = [int(i) for i in np.random.default_rng(child).integers(0, 3, size=3)]
        s = sum(pairs[i].sta_neutral for i in idx) / 3
        c = sum(pairs[i].cs for i in idx) / 3
        ppl = math.exp(-sum(pairs[i].log_prob_sum for i in idx) / sum(pairs[i].token_count for i in idx))
        values.append((s * c / ppl) ** (1 / 3) if s > 0 and c > 0 else 0.0)
    mean = sum(values) / len(values)
    ref_std = math.sqrt(sum((v - mean) ** 2 for v in values) / len(values))
    elapsed = time.perf_counter() - start
    ok = constant and deterministic and abs(std - ref_std) <= 1e-12 and elapsed < 5.0
    criterion(10, "bootstrap std: constant, seeded, matches reimplementation", ok,
              f"constant {constant}, deterministic {deterministic}, |diff| {abs(std - ref_std):.1e}")
