"""Synthetic toxic/neutral corpora with a planted toxic lexicon.

Every sentence is a bag of random filler words with an optional "frame"
(two words, a slot, one word) spliced in. Toxic sentences fill the slot
with a planted toxic word; most neutral sentences fill it with a neutral
word, the rest have no frame. Frames give the n-gram models consistent
contexts to learn, fillers give every sentence enough distinct tokens.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data_io import LabeledCorpus, ParallelCorpus, StyleLabel
from .embeddings import EmbeddingTable

_CONS = "бвгдзклмнпрстфхш"
_VOWELS = "аеиоуя"


def _pseudo_words(rng: np.random.Generator, n: int, syllables: int, taken: set[str]) -> list[str]:
    out = []
    while len(out) < n:
        w = "".join(rng.choice(list(_CONS)) + rng.choice(list(_VOWELS)) for _ in range(syllables))
        if w not in taken:
            taken.add(w)
            out.append(w)
    return out


@dataclass(frozen=True)
class SyntheticWorld:
    fillers: tuple[str, ...]
    frames: tuple[tuple[str, str, str], ...]
    toxic_words: tuple[str, ...]
    neutral_words: tuple[str, ...]

    @classmethod
    def create(
        cls, seed: int = 0, n_fillers: int = 400, n_frames: int = 20, n_toxic: int = 12, n_neutral: int = 12
    ) -> SyntheticWorld:
        rng = np.random.default_rng(seed)
        taken: set[str] = set()
        fillers = _pseudo_words(rng, n_fillers, 3, taken)
        frame_words = _pseudo_words(rng, 3 * n_frames, 2, taken)
        toxic = _pseudo_words(rng, n_toxic, 4, taken)
        neutral = _pseudo_words(rng, n_neutral, 4, taken)
        frames = [tuple(frame_words[3 * i : 3 * i + 3]) for i in range(n_frames)]
        return cls(tuple(fillers), tuple(frames), tuple(toxic), tuple(neutral))

    @property
    def vocabulary(self) -> list[str]:
        words = list(self.fillers) + [w for f in self.frames for w in f]
        return words + list(self.toxic_words) + list(self.neutral_words)

    def _sentence(self, rng: np.random.Generator, slot: str | None, frame_idx: int | None = None,
                  min_len: int = 18, max_len: int = 24) -> list[str]:
        m = int(rng.integers(min_len, max_len + 1))
        words = [self.fillers[i] for i in rng.choice(len(self.fillers), size=m, replace=False)]
        if slot is None:
            return words
        if frame_idx is None:
            frame_idx = int(rng.integers(len(self.frames)))
        a, b, c = self.frames[frame_idx]
        at = int(rng.integers(0, m + 1))
        return words[:at] + [a, b, slot, c] + words[at:]

    def corpus(self, n_toxic: int, n_neutral: int, seed: int = 0, neutral_frame_rate: float = 0.6) -> LabeledCorpus:
        """Toxic and neutral sentences interleaved in a seeded random order."""
        rng = np.random.default_rng(seed)
        labels = [StyleLabel.TOXIC] * n_toxic + [StyleLabel.NEUTRAL] * n_neutral
        order = rng.permutation(len(labels))
        entries = []
        for j in order:
            label = labels[j]
            if label == StyleLabel.TOXIC:
                slot = self.toxic_words[int(rng.integers(len(self.toxic_words)))]
            elif rng.random() < neutral_frame_rate:
                slot = self.neutral_words[int(rng.integers(len(self.neutral_words)))]
            else:
                slot = None
            entries.append((" ".join(self._sentence(rng, slot)), label))
        return LabeledCorpus(tuple(entries))

    def parallel(self, n: int, seed: int = 0) -> ParallelCorpus:
        """Toxic sentences paired with the same sentence carrying a neutral slot word."""
        rng = np.random.default_rng(seed)
        pairs = []
        for _ in range(n):
            toxic = self.toxic_words[int(rng.integers(len(self.toxic_words)))]
            neutral = self.neutral_words[int(rng.integers(len(self.neutral_words)))]
            words = self._sentence(rng, toxic, min_len=4, max_len=8)
            src = " ".join(words)
            tgt = " ".join(neutral if w == toxic else w for w in words)
            pairs.append((src, tgt))
        return ParallelCorpus(tuple(pairs))

    def embeddings(self, dim: int = 16, seed: int = 0) -> EmbeddingTable:
        """Random vectors; toxic words sit near the neutral slot words so CS rewards substitution."""
        rng = np.random.default_rng(seed)
        vectors = {w: rng.standard_normal(dim) for w in self.vocabulary}
        slot_centre = np.mean([vectors[w] for w in self.neutral_words], axis=0)
        for w in self.toxic_words:
            vectors[w] = slot_centre + 0.3 * rng.standard_normal(dim)
        return EmbeddingTable(vectors, dim)
