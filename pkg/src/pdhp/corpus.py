from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import OrderingError
from .language_model import DocCounts, Vocabulary


@dataclass(frozen=True)
class Document:
    doc_id: int
    timestamp: float
    tokens: tuple[str, ...]


def check_sorted(documents: Sequence[Document]) -> None:
    for prev, cur in zip(documents, documents[1:]):
        if cur.timestamp < prev.timestamp:
            raise OrderingError(
                f"document {cur.doc_id} (t={cur.timestamp}) precedes document {prev.doc_id} (t={prev.timestamp})"
            )


def encode(documents: Sequence[Document], vocab: Vocabulary | None = None) -> tuple[Vocabulary, list[DocCounts]]:
    vocab = Vocabulary() if vocab is None else vocab
    counts = [DocCounts.from_tokens(d.tokens, vocab) for d in documents]
    return vocab, counts
