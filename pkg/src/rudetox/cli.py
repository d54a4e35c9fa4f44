"""Command-line front end.

Exit codes: 0 success, 2 I/O, 3 data/validation, 4 alignment, 5 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import data_io, embeddings, metrics, ngram_lm, promptgen, toxicity
from .baselines import Delete, Duplicate, Retrieve
from .condbert import CondBert, CondBertConfig
from .errors import AlignmentError, DataError, DetoxError
from .text import load_lemma_table, tokenize

log = logging.getLogger("rudetox")

METHODS = ("duplicate", "delete", "retrieve", "condbert", "prompt-zero", "prompt-few", "prompt-ft")


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("logistic regression")
    g.add_argument("--learning-rate", type=float, default=2.0, help="gradient step size (default: %(default)s)")
    g.add_argument("--epochs", type=int, default=500, help="full-batch steps (default: %(default)s)")
    g.add_argument("--l2", type=float, default=1e-3, help="L2 penalty on weights (default: %(default)s)")
    g.add_argument("--min-count", type=int, default=1, help="vocabulary count cutoff (default: %(default)s)")


def _add_gen_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("generation")
    g.add_argument("--top-k", type=int, default=3, help="(default: %(default)s)")
    g.add_argument("--top-p", type=float, default=0.95, help="(default: %(default)s)")
    g.add_argument("--temperature", type=float, default=50.0, help="(default: %(default)s)")
    g.add_argument("--max-tokens", type=int, default=40, help="(default: %(default)s)")
    g.add_argument("--few-shot-k", type=int, default=3, help="examples in few-shot prompts (default: %(default)s)")


def _add_condbert_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("condbert")
    g.add_argument("--penalty", type=float, default=1.5, help="toxicity penalty lambda (default: %(default)s)")
    g.add_argument("--beam-width", type=int, default=5, help="(default: %(default)s)")
    g.add_argument("--max-replacement", type=int, default=3, help="max words per mask (default: %(default)s)")
    g.add_argument("--condbert-style", choices=("neutral", "any"), default="neutral",
                   help="masked-LM conditioning; 'any' is the unconditioned variant (default: %(default)s)")
    g.add_argument("--soft-ban", action="store_true", help="penalize instead of banning lexicon words")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rudetox", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-demo", help="write a synthetic corpus, parallel pairs, embeddings and toxic-word list")
    p.add_argument("--outdir", type=Path, required=True)
    p.add_argument("--n-toxic", type=int, default=1500, help="(default: %(default)s)")
    p.add_argument("--n-neutral", type=int, default=3000, help="(default: %(default)s)")
    p.add_argument("--n-pairs", type=int, default=200, help="(default: %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="(default: %(default)s)")

    p = sub.add_parser("split", help="hold out toxic test sentences")
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--test-size", type=int, required=True)
    p.add_argument("--seed", type=int, default=0, help="(default: %(default)s)")
    p.add_argument("--train-out", type=Path, required=True, help="labeled TSV")
    p.add_argument("--test-out", type=Path, required=True, help="one sentence per line")

    p = sub.add_parser("train-classifier", help="train the toxicity classifier, report held-out F1")
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--model-out", type=Path, required=True)
    p.add_argument("--holdout", type=float, default=0.1, help="held-out fraction for F1 (default: %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="(default: %(default)s)")
    p.add_argument("--lexicon-out", type=Path, help="also write the thresholded lexicon")
    p.add_argument("--threshold", type=float, help="lexicon weight threshold (default: top 1%% of vocabulary)")
    p.add_argument("--manual-words", type=Path, help="extra toxic words, one per line")
    _add_train_flags(p)

    p = sub.add_parser("train-lm", help="train the n-gram language model")
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--order", type=int, default=3, help="(default: %(default)s)")
    p.add_argument("--alpha", type=float, default=0.1, help="add-alpha smoothing (default: %(default)s)")
    p.add_argument("--finetune-pairs", type=Path, help="also train on 'src >>> tgt' records from this parallel TSV")

    p = sub.add_parser("build-index", help="retrieve index from the neutral part of a corpus")
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--embeddings", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("finetune-records", help="write 'src >>> tgt' records, one per line")
    p.add_argument("--pairs", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("detox", help="detoxify one sentence per line")
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--output", type=Path, required=True)
    p.add_argument("--lexicon", type=Path, help="word<TAB>weight or one word per line")
    p.add_argument("--lemmas", type=Path, help="surface<TAB>lemma table for delete")
    p.add_argument("--index", type=Path)
    p.add_argument("--embeddings", type=Path)
    p.add_argument("--lm", type=Path, help="n-gram model for condbert / prompt-zero / prompt-few")
    p.add_argument("--lm-ft", type=Path, help="n-gram model trained with --finetune-pairs, for prompt-ft")
    p.add_argument("--pairs", type=Path, help="parallel TSV for prompt-few")
    p.add_argument("--seed", type=int, default=0, help="(default: %(default)s)")
    _add_condbert_flags(p)
    _add_gen_flags(p)

    p = sub.add_parser("evaluate", help="score detoxified outputs against their inputs")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--output", action="append", required=True, metavar="NAME=PATH",
                   help="method output file; repeatable")
    p.add_argument("--classifier", type=Path, required=True)
    p.add_argument("--embeddings", type=Path, required=True)
    p.add_argument("--lm", type=Path, required=True, help="scoring n-gram model")
    p.add_argument("--resamples", type=int, default=1000, help="(default: %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="(default: %(default)s)")
    p.add_argument("--report", type=Path, help="plain-text table (default: stdout only)")
    p.add_argument("--records", type=Path, help="JSON-lines twin of the table")

    p = sub.add_parser("pipeline", help="train, detoxify with every method, evaluate")
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--pairs", type=Path, required=True)
    p.add_argument("--embeddings", type=Path, required=True)
    p.add_argument("--manual-words", type=Path)
    p.add_argument("--workdir", type=Path, required=True)
    p.add_argument("--test-size", type=int, default=500, help="(default: %(default)s)")
    p.add_argument("--seed", type=int, default=0, help="(default: %(default)s)")
    p.add_argument("--resamples", type=int, default=1000, help="(default: %(default)s)")
    p.add_argument("--order", type=int, default=3, help="(default: %(default)s)")
    p.add_argument("--alpha", type=float, default=0.1, help="(default: %(default)s)")
    p.add_argument("--threshold", type=float)
    p.add_argument("--methods", default=",".join(METHODS), help="comma-separated (default: all)")
    _add_train_flags(p)
    _add_condbert_flags(p)
    _add_gen_flags(p)
    return parser


# -- subcommands -------------------------------------------------------------


def cmd_make_demo(args) -> int:
    from .synth import SyntheticWorld

    args.outdir.mkdir(parents=True, exist_ok=True)
    world = SyntheticWorld.create(args.seed)
    data_io.save_labeled_corpus(world.corpus(args.n_toxic, args.n_neutral, seed=args.seed + 1),
                                args.outdir / "corpus.tsv")
    data_io.save_parallel_corpus(world.parallel(args.n_pairs, seed=args.seed + 2), args.outdir / "parallel.tsv")
    embeddings.save_embeddings(world.embeddings(seed=args.seed + 3), args.outdir / "embeddings.txt")
    data_io.write_lines(world.toxic_words, args.outdir / "toxic_words.txt")
    print(f"demo data written to {args.outdir}")
    return 0


def cmd_split(args) -> int:
    corpus = data_io.load_labeled_corpus(args.corpus)
    train, test = data_io.split_corpus(corpus, data_io.SplitSpec(args.test_size, args.seed))
    data_io.save_labeled_corpus(train, args.train_out)
    data_io.write_lines(test.texts, args.test_out)
    print(f"train: {len(train)} entries, test: {len(test)} toxic sentences")
    return 0


def _train_config(args) -> toxicity.TrainConfig:
    return toxicity.TrainConfig(args.learning_rate, args.epochs, args.l2, args.seed, args.min_count)


def cmd_train_classifier(args) -> int:
    corpus = data_io.load_labeled_corpus(args.corpus)
    train, held = data_io.holdout_split(corpus, args.holdout, args.seed)
    model = toxicity.train(train, _train_config(args))
    score = toxicity.f1(model, held)
    toxicity.save_model(model, args.model_out)
    print(f"held-out F1: {score:.4f} (train {len(train)}, held-out {len(held)})")
    if args.lexicon_out:
        manual = data_io.load_word_list(args.manual_words) if args.manual_words else None
        lexicon = toxicity.extract_lexicon(model, args.threshold, manual)
        toxicity.save_lexicon(lexicon, args.lexicon_out)
        print(f"lexicon: {len(lexicon)} words (threshold {lexicon.threshold:.4f})")
    return 0


def cmd_train_lm(args) -> int:
    corpus = data_io.load_labeled_corpus(args.corpus)
    if args.finetune_pairs:
        pairs = data_io.load_parallel_corpus(args.finetune_pairs)
        lm = promptgen.train_finetuned_lm(pairs, corpus, args.order, args.alpha)
    else:
        lm = ngram_lm.train_lm(corpus, args.order, args.alpha)
    ngram_lm.save_lm(lm, args.out)
    print(f"language model: order {lm.order}, vocabulary {len(lm.vocab)}")
    return 0


def cmd_build_index(args) -> int:
    corpus = data_io.load_labeled_corpus(args.corpus).with_label(data_io.StyleLabel.NEUTRAL)
    table = embeddings.load_embeddings(args.embeddings)
    index = embeddings.RetrieveIndex.build(corpus.texts, table)
    embeddings.save_index(index, args.out)
    print(f"index: {len(index)} neutral candidates")
    return 0


def cmd_finetune_records(args) -> int:
    records = promptgen.build_finetune_records(data_io.load_parallel_corpus(args.pairs))
    data_io.write_lines(records, args.out)
    print(f"{len(records)} records")
    return 0


def _require(args, method: str, *flags: str) -> None:
    for flag in flags:
        if getattr(args, flag.replace("-", "_")) is None:
            raise DataError(f"method {method} requires --{flag}")


def _gen_params(args) -> ngram_lm.GenerationParams:
    return ngram_lm.GenerationParams(args.top_k, args.top_p, args.temperature, args.max_tokens, args.seed)


def _condbert_config(args) -> CondBertConfig:
    return CondBertConfig(args.penalty, args.beam_width, args.max_replacement, args.condbert_style,
                          not args.soft_ban)


def make_detoxifier(method: str, args):
    if method == "duplicate":
        return Duplicate()
    if method == "delete":
        _require(args, method, "lexicon")
        lemmas = load_lemma_table(args.lemmas) if args.lemmas else None
        return Delete(toxicity.load_lexicon(args.lexicon), lemmas)
    if method == "retrieve":
        _require(args, method, "index", "embeddings")
        return Retrieve(embeddings.load_index(args.index), embeddings.load_embeddings(args.embeddings))
    if method == "condbert":
        _require(args, method, "lexicon", "lm")
        return CondBert(ngram_lm.load_lm(args.lm), toxicity.load_lexicon(args.lexicon), _condbert_config(args))
    if method == "prompt-zero":
        _require(args, method, "lm")
        return promptgen.PromptDetoxifier(ngram_lm.load_lm(args.lm), "zero_shot", _gen_params(args))
    if method == "prompt-few":
        _require(args, method, "lm", "pairs")
        pairs = data_io.load_parallel_corpus(args.pairs)
        return promptgen.PromptDetoxifier(ngram_lm.load_lm(args.lm), "few_shot", _gen_params(args), pairs,
                                          min(args.few_shot_k, len(pairs)))
    if method == "prompt-ft":
        _require(args, method, "lm-ft")
        return promptgen.PromptDetoxifier(ngram_lm.load_lm(args.lm_ft), "finetuned_sim", _gen_params(args))
    raise DataError(f"unknown method {method!r}")


def run_detox(detoxifier, lines: list[str]) -> list[str]:
    out = []
    for line in lines:
        x = tokenize(line)
        if not x.tokens:
            out.append(line)
            continue
        out.append(detoxifier.transform(x).raw)
    return out


def cmd_detox(args) -> int:
    detoxifier = make_detoxifier(args.method, args)
    lines = data_io.read_lines(args.input)
    data_io.write_lines(run_detox(detoxifier, lines), args.output)
    log.info("%s: %d sentences", args.method, len(lines))
    return 0


def _parse_outputs(specs: list[str]) -> list[tuple[str, Path]]:
    out = []
    for spec in specs:
        name, sep, path = spec.partition("=")
        if not sep or not name or not path:
            raise DataError(f"--output expects NAME=PATH, got {spec!r}")
        out.append((name, Path(path)))
    return out


def evaluate_files(inputs_path: Path, outputs: list[tuple[str, Path]], classifier, table, lm,
                   resamples: int, seed: int) -> list[metrics.EvalReport]:
    inputs = data_io.read_lines(inputs_path)
    reports = []
    for name, path in outputs:
        hyps = data_io.read_lines(path)
        if len(hyps) != len(inputs):
            raise AlignmentError(f"{path} has {len(hyps)} lines but {inputs_path} has {len(inputs)}")
        reports.append(metrics.evaluate_pairs(name, inputs, hyps, classifier, table, lm, resamples, seed))
    return reports


def _emit_reports(reports, report_path: Path | None, records_path: Path | None) -> None:
    table = metrics.format_table(reports)
    sys.stdout.write(table)
    if report_path:
        report_path.write_text(table, encoding="utf-8")
    if records_path:
        data_io.write_lines([r.to_record() for r in reports], records_path)


def cmd_evaluate(args) -> int:
    outputs = _parse_outputs(args.output)
    classifier = toxicity.load_model(args.classifier)
    table = embeddings.load_embeddings(args.embeddings)
    lm = ngram_lm.load_lm(args.lm)
    reports = evaluate_files(args.input, outputs, classifier, table, lm, args.resamples, args.seed)
    _emit_reports(reports, args.report, args.records)
    return 0


def cmd_pipeline(args) -> int:
    work: Path = args.workdir
    work.mkdir(parents=True, exist_ok=True)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in METHODS:
            raise DataError(f"unknown method {m!r}")

    corpus = data_io.load_labeled_corpus(args.corpus)
    pairs = data_io.load_parallel_corpus(args.pairs)
    table = embeddings.load_embeddings(args.embeddings)
    train, test = data_io.split_corpus(corpus, data_io.SplitSpec(args.test_size, args.seed))
    data_io.save_labeled_corpus(train, work / "train.tsv")
    data_io.write_lines(test.texts, work / "test.txt")

    model = toxicity.train(train, _train_config(args))
    toxicity.save_model(model, work / "classifier.tsv")
    manual = data_io.load_word_list(args.manual_words) if args.manual_words else None
    lexicon = toxicity.extract_lexicon(model, args.threshold, manual)
    toxicity.save_lexicon(lexicon, work / "lexicon.tsv")
    lm = ngram_lm.train_lm(train, args.order, args.alpha)
    ngram_lm.save_lm(lm, work / "lm.tsv")
    lm_ft = promptgen.train_finetuned_lm(pairs, train, args.order, args.alpha)
    ngram_lm.save_lm(lm_ft, work / "lm_ft.tsv")
    index = embeddings.RetrieveIndex.build(train.with_label(data_io.StyleLabel.NEUTRAL).texts, table)
    embeddings.save_index(index, work / "index.tsv")
    log.info("artifacts written to %s", work)

    # reuse the detox wiring with artifact paths filled in
    ns = argparse.Namespace(**vars(args))
    ns.lexicon, ns.lemmas, ns.index, ns.embeddings = work / "lexicon.tsv", None, work / "index.tsv", args.embeddings
    ns.lm, ns.lm_ft, ns.pairs = work / "lm.tsv", work / "lm_ft.tsv", args.pairs
    outputs = []
    for m in methods:
        out = work / f"out_{m}.txt"
        data_io.write_lines(run_detox(make_detoxifier(m, ns), test.texts), out)
        outputs.append((m, out))
        log.info("detox %s done", m)

    reports = evaluate_files(work / "test.txt", outputs, model, table, lm, args.resamples, args.seed)
    _emit_reports(reports, work / "report.txt", work / "report.jsonl")
    return 0


COMMANDS = {
    "make-demo": cmd_make_demo,
    "split": cmd_split,
    "train-classifier": cmd_train_classifier,
    "train-lm": cmd_train_lm,
    "build-index": cmd_build_index,
    "finetune-records": cmd_finetune_records,
    "detox": cmd_detox,
    "evaluate": cmd_evaluate,
    "pipeline": cmd_pipeline,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except DetoxError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ArithmeticError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
