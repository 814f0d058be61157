"""Plain-text file formats.

corpus     one document per line: ``doc_id<TAB>timestamp<TAB>space-separated tokens``
labels     TSV with header ``doc_id textual temporal``
assignments TSV with header ``doc_id cluster``
tables     CSV with a header row
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import Document
from .errors import DataError


def format_float(x: float) -> str:
    """Shortest positional decimal that parses back to the same double."""
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return np.format_float_positional(float(x), unique=True, trim="-")


def write_corpus(path, documents: Iterable[Document]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for d in documents:
            f.write(f"{d.doc_id}\t{format_float(d.timestamp)}\t{' '.join(d.tokens)}\n")


def read_corpus(path) -> list[Document]:
    docs = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) not in (2, 3):
                raise DataError(f"{path}:{lineno}: expected 'doc_id<TAB>timestamp<TAB>tokens'")
            try:
                doc_id = int(parts[0])
            except ValueError:
                raise DataError(f"{path}:{lineno}: bad doc id {parts[0]!r}") from None
            try:
                ts = float(parts[1])
            except ValueError:
                raise DataError(f"{path}:{lineno}: bad timestamp {parts[1]!r}") from None
            if not math.isfinite(ts):
                raise DataError(f"{path}:{lineno}: non-finite timestamp")
            tokens = tuple(parts[2].split()) if len(parts) == 3 else ()
            docs.append(Document(doc_id, ts, tokens))
    return docs


def _write_tsv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\t".join(header) + "\n")
        for row in rows:
            f.write("\t".join(str(x) for x in row) + "\n")


def _read_tsv(path, header: Sequence[str]) -> list[list[int]]:
    rows = []
    with open(path, encoding="utf-8") as f:
        first = f.readline().rstrip("\n").split("\t")
        if first != list(header):
            raise DataError(f"{path}:1: expected header {' '.join(header)!r}")
        for lineno, line in enumerate(f, 2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} columns, got {len(parts)}")
            try:
                rows.append([int(p) for p in parts])
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-integer field") from None
    return rows


def write_labels(path, doc_ids, textual, temporal) -> None:
    _write_tsv(path, ("doc_id", "textual", "temporal"), zip(doc_ids, textual, temporal))


def read_labels(path) -> tuple[list[int], list[int], list[int]]:
    rows = _read_tsv(path, ("doc_id", "textual", "temporal"))
    return [r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows]


def write_assignments(path, doc_ids, clusters) -> None:
    _write_tsv(path, ("doc_id", "cluster"), zip(doc_ids, clusters))


def read_assignments(path) -> tuple[list[int], list[int]]:
    rows = _read_tsv(path, ("doc_id", "cluster"))
    return [r[0] for r in rows], [r[1] for r in rows]


def _cell(x) -> str:
    if isinstance(x, float):
        return format_float(x)
    return str(x)


def write_table(path, columns: Sequence[str], rows: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row[c]) for c in columns])


def read_table(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_json(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))
