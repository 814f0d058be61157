"""Collapsed Dirichlet-Multinomial word model with a symmetric prior."""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from math import lgamma
from typing import Iterable

from .errors import ConfigError, DomainError

_PUNCT = re.compile(r"[^\w\s]", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase, strip punctuation, split on whitespace."""
    return _PUNCT.sub(" ", text.lower()).split()


class Vocabulary:
    """Dense token <-> index map, indices assigned in order of first appearance."""

    def __init__(self, tokens: Iterable[str] = ()):
        self.index: dict[str, int] = {}
        self.tokens: list[str] = []
        for tok in tokens:
            self.add(tok)

    def add(self, token: str) -> int:
        idx = self.index.get(token)
        if idx is None:
            idx = self.index[token] = len(self.tokens)
            self.tokens.append(token)
        return idx

    def __len__(self):
        return len(self.tokens)

    @property
    def size(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class DocCounts:
    """Bag of words of one document as parallel (word index, count) tuples."""

    words: tuple[int, ...]
    counts: tuple[int, ...]
    total: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total", sum(self.counts))

    @classmethod
    def from_indices(cls, indices: Iterable[int]) -> "DocCounts":
        c = Counter(indices)
        keys = tuple(sorted(c))
        return cls(keys, tuple(c[k] for k in keys))

    @classmethod
    def from_tokens(cls, tokens: Iterable[str], vocab: Vocabulary) -> "DocCounts":
        return cls.from_indices(vocab.add(t) for t in tokens)

    def as_dict(self) -> dict[int, int]:
        return dict(zip(self.words, self.counts))


class ClusterWordCounts:
    __slots__ = ("total", "per_word")

    def __init__(self):
        self.total = 0
        self.per_word: dict[int, int] = {}

    def copy(self) -> "ClusterWordCounts":
        new = ClusterWordCounts()
        new.total = self.total
        new.per_word = self.per_word.copy()
        return new


@dataclass(frozen=True)
class DmParams:
    vocab_size: int
    theta0_v: float = 10.0

    def __post_init__(self):
        if self.theta0_v <= 0:
            raise ConfigError(f"theta0_v must be > 0, got {self.theta0_v}")
        if self.vocab_size < 1:
            raise ConfigError("vocabulary must be non-empty")

    @property
    def theta0(self) -> float:
        return self.vocab_size * self.theta0_v


def dm_log_predictive(cluster: ClusterWordCounts, doc: DocCounts, params: DmParams) -> float:
    """Log-probability of the document's token sequence given the cluster's counts."""
    th = params.theta0_v
    theta0 = params.theta0
    n_c = cluster.total
    out = lgamma(n_c + theta0) - lgamma(n_c + doc.total + theta0)
    per_word = cluster.per_word
    for v, n in zip(doc.words, doc.counts):
        if v >= params.vocab_size or v < 0:
            raise DomainError(f"word index {v} outside vocabulary of size {params.vocab_size}")
        k = per_word.get(v, 0)
        out += lgamma(k + n + th) - lgamma(k + th)
    return out


def update_counts(cluster: ClusterWordCounts, doc: DocCounts) -> ClusterWordCounts:
    per_word = cluster.per_word
    for v, n in zip(doc.words, doc.counts):
        per_word[v] = per_word.get(v, 0) + n
    cluster.total += doc.total
    return cluster
