"""Prompt construction for the GPT-style paraphrase detoxifier.

Layouts (``P`` = prefix, ``S`` = separator)::

    zero-shot        P\\n{x} S
    few-shot         {src_1} S {tgt_1}\\n ... {src_k} S {tgt_k}\\nP\\n{x} S
    fine-tune record {src} S {tgt}

The continuation is whatever the LM produces after the final separator.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .data_io import LabeledCorpus, ParallelCorpus, StyleLabel
from .errors import DataError
from .ngram_lm import GenerationParams, GenerativeLm, NgramLm, train_lm
from .text import Sentence, tokenize


@dataclass(frozen=True)
class PromptTemplate:
    paraphrase_prefix: str = "Перефразируй"
    separator: str = ">>>"

    def __post_init__(self):
        if not self.separator.strip():
            raise DataError("separator must be non-empty")

    def check_text(self, text: str) -> None:
        if self.separator in text:
            raise DataError(f"text contains the separator {self.separator!r}: {text!r}")


DEFAULT_TEMPLATE = PromptTemplate()


class PromptMode(str, enum.Enum):
    ZERO_SHOT = "zero_shot"
    FEW_SHOT = "few_shot"
    FINETUNED_SIM = "finetuned_sim"


def _raw(x: Sentence | str) -> str:
    return x.raw if isinstance(x, Sentence) else x


def build_zero_shot(x: Sentence | str, tmpl: PromptTemplate = DEFAULT_TEMPLATE) -> str:
    return f"{tmpl.paraphrase_prefix}\n{_raw(x)} {tmpl.separator}"


def _record(src: str, tgt: str, tmpl: PromptTemplate) -> str:
    tmpl.check_text(src)
    tmpl.check_text(tgt)
    return f"{src} {tmpl.separator} {tgt}"


def build_few_shot(
    pairs: ParallelCorpus, x: Sentence | str, k: int, tmpl: PromptTemplate = DEFAULT_TEMPLATE
) -> str:
    """First ``k`` pairs as examples, in corpus order, followed by the zero-shot block."""
    if k < 0 or k > len(pairs):
        raise DataError(f"k={k} few-shot examples requested but the parallel corpus has {len(pairs)} pairs")
    lines = [_record(src, tgt, tmpl) for src, tgt in pairs.pairs[:k]]
    lines.append(build_zero_shot(x, tmpl))
    return "\n".join(lines)


def build_finetune_records(pairs: ParallelCorpus, tmpl: PromptTemplate = DEFAULT_TEMPLATE) -> list[str]:
    return [_record(src, tgt, tmpl) for src, tgt in pairs]


def parse_generation(output: str, tmpl: PromptTemplate = DEFAULT_TEMPLATE) -> Sentence:
    """Text after the last separator, trimmed and cut at the first newline."""
    _, sep, tail = output.rpartition(tmpl.separator)
    text = tail if sep else output
    text = text.strip().split("\n", 1)[0].strip()
    return tokenize(text)


def train_finetuned_lm(
    pairs: ParallelCorpus,
    base: LabeledCorpus | None = None,
    order: int = 3,
    alpha: float = 0.1,
    tmpl: PromptTemplate = DEFAULT_TEMPLATE,
) -> NgramLm:
    """N-gram stand-in for a fine-tuned generator: trained on the record strings (plus ``base``)."""
    records = [(r, StyleLabel.NEUTRAL) for r in build_finetune_records(pairs, tmpl)]
    entries = tuple(base.entries if base is not None else ()) + tuple(records)
    return train_lm(LabeledCorpus(entries), order, alpha)


def detoxify_prompted(
    x: Sentence | str,
    lm: GenerativeLm,
    mode: PromptMode | str,
    params: GenerationParams = GenerationParams(),
    pairs: ParallelCorpus | None = None,
    k: int = 0,
    tmpl: PromptTemplate = DEFAULT_TEMPLATE,
    style="any",
) -> Sentence:
    mode = PromptMode(mode)
    if mode is PromptMode.FEW_SHOT:
        if pairs is None:
            raise DataError("few-shot prompting needs a parallel corpus")
        prompt = build_few_shot(pairs, x, k, tmpl)
    else:
        prompt = build_zero_shot(x, tmpl)
    continuation = lm.continue_text(prompt, params, style)
    return parse_generation(prompt + " " + continuation, tmpl)


class PromptDetoxifier:
    def __init__(
        self,
        lm: GenerativeLm,
        mode: PromptMode | str,
        params: GenerationParams = GenerationParams(),
        pairs: ParallelCorpus | None = None,
        k: int = 0,
        tmpl: PromptTemplate = DEFAULT_TEMPLATE,
    ):
        self.lm = lm
        self.mode = PromptMode(mode)
        if self.mode is PromptMode.FEW_SHOT and pairs is None:
            raise DataError("few-shot prompting needs a parallel corpus")
        self.params = params
        self.pairs = pairs
        self.k = k
        self.tmpl = tmpl
        self.name = {
            PromptMode.ZERO_SHOT: "detoxGPT zero-shot",
            PromptMode.FEW_SHOT: "detoxGPT few-shot",
            PromptMode.FINETUNED_SIM: "detoxGPT fine-tuned",
        }[self.mode]

    def transform(self, x: Sentence) -> Sentence:
        return detoxify_prompted(x, self.lm, self.mode, self.params, self.pairs, self.k, self.tmpl)
