"""Text detoxification: baselines, condBERT-style substitution, prompt scaffolding, evaluation."""

from .data_io import LabeledCorpus, ParallelCorpus, SplitSpec, StyleLabel
from .text import Sentence, Token, normalize, tokenize

__all__ = ["LabeledCorpus", "ParallelCorpus", "SplitSpec", "StyleLabel", "Sentence", "Token", "normalize", "tokenize"]
__version__ = "0.1.0"
