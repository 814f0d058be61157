"""NMI scoring against textual and temporal ground truths, and grid sweeps."""
from __future__ import annotations

import itertools
import logging
import math
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .datagen import GenerationSpec, generate_corpus
from .inference import FitConfig, fit

log = logging.getLogger(__name__)

_NORMALIZATIONS = ("geometric", "arithmetic", "max", "min")


def _entropy(counts: np.ndarray) -> float:
    p = counts[counts > 0] / counts.sum()
    return float(-(p * np.log(p)).sum())


def nmi(labels_a: Sequence, labels_b: Sequence, normalization: str = "geometric") -> float:
    """Normalized mutual information with natural logs and plug-in entropies.

    A constant labeling scores 0 against a non-constant one, and 1 against
    another constant labeling.
    """
    if len(labels_a) != len(labels_b):
        raise ValueError(f"label lengths differ: {len(labels_a)} != {len(labels_b)}")
    if len(labels_a) == 0:
        raise ValueError("need at least one label")
    if normalization not in _NORMALIZATIONS:
        raise ValueError(f"unknown normalization {normalization!r}")
    _, a = np.unique(np.asarray(labels_a, dtype=object).astype(str), return_inverse=True)
    _, b = np.unique(np.asarray(labels_b, dtype=object).astype(str), return_inverse=True)
    table = np.zeros((a.max() + 1, b.max() + 1))
    np.add.at(table, (a, b), 1.0)
    h_a = _entropy(table.sum(axis=1))
    h_b = _entropy(table.sum(axis=0))
    if h_a == 0.0 or h_b == 0.0:
        return 1.0 if h_a == h_b else 0.0
    n = table.sum()
    nz = table > 0
    outer = np.outer(table.sum(axis=1), table.sum(axis=0))
    mi = float((table[nz] / n * np.log(table[nz] * n / outer[nz])).sum())
    if normalization == "geometric":
        denom = math.sqrt(h_a * h_b)
    elif normalization == "arithmetic":
        denom = 0.5 * (h_a + h_b)
    elif normalization == "max":
        denom = max(h_a, h_b)
    else:
        denom = min(h_a, h_b)
    return min(1.0, max(0.0, mi / denom))


@dataclass
class MetricsReport:
    nmi_textual: float
    nmi_temporal: float
    n_clusters: int
    config: dict = field(default_factory=dict)
    realized: dict = field(default_factory=dict)

    @property
    def nmi_diff(self) -> float:
        return self.nmi_temporal - self.nmi_textual

    def to_dict(self) -> dict:
        d = asdict(self)
        d["nmi_diff"] = self.nmi_diff
        return d


def score(assignments, textual_labels, temporal_labels, normalization: str = "geometric") -> MetricsReport:
    return MetricsReport(
        nmi_textual=nmi(assignments, textual_labels, normalization),
        nmi_temporal=nmi(assignments, temporal_labels, normalization),
        n_clusters=len(set(assignments)),
    )


@dataclass(frozen=True)
class SweepGrid:
    r: tuple[float, ...] = (0.0, 0.5, 1.0, 2.0, 4.0)
    textual_overlap: tuple[float, ...] = (0.0, 0.3, 0.5, 0.7, 0.9)
    intensity_overlap: tuple[float, ...] = (0.0, 0.3, 0.5, 0.7, 0.9)
    decorrelation: tuple[float, ...] = (0.0,)
    seeds: tuple[int, ...] = tuple(range(10))

    def points(self):
        return itertools.product(self.r, self.textual_overlap, self.intensity_overlap, self.decorrelation)


RUN_COLUMNS = ("r", "textual_overlap", "intensity_overlap", "decorrelation", "seed", "status",
               "n_documents", "n_clusters", "nmi_textual", "nmi_temporal", "nmi_diff",
               "measured_intensity_overlap", "error")
AGG_COLUMNS = ("r", "textual_overlap", "intensity_overlap", "decorrelation", "n_runs", "n_failed",
               "nmi_textual", "nmi_temporal", "nmi_diff", "measured_intensity_overlap")


def run_one(r: float, textual_overlap: float, intensity_overlap: float, decorrelation: float, seed: int,
            gen: GenerationSpec, fit_config: FitConfig, normalization: str = "geometric") -> dict:
    row = {"r": r, "textual_overlap": textual_overlap, "intensity_overlap": intensity_overlap,
           "decorrelation": decorrelation, "seed": seed}
    try:
        spec = replace(gen, textual_overlap=textual_overlap, intensity_overlap=intensity_overlap,
                       decorrelation=decorrelation, seed=seed)
        corpus = generate_corpus(spec)
        result = fit(corpus.documents, replace(fit_config, r=r, seed=seed))
        rep = score(result.assignments, corpus.textual_labels, corpus.temporal_labels, normalization)
        row.update(status="ok", n_documents=len(corpus), n_clusters=rep.n_clusters,
                   nmi_textual=rep.nmi_textual, nmi_temporal=rep.nmi_temporal, nmi_diff=rep.nmi_diff,
                   measured_intensity_overlap=corpus.metadata["measured_intensity_overlap"], error="")
    except Exception as exc:  # recorded in the table, never dropped
        log.warning("run failed at %s: %s", row, exc)
        row.update(status="failed", n_documents=0, n_clusters=0, nmi_textual=math.nan,
                   nmi_temporal=math.nan, nmi_diff=math.nan, measured_intensity_overlap=math.nan,
                   error=f"{type(exc).__name__}: {exc}".replace("\n", " "))
        log.debug(traceback.format_exc())
    return row


def _run_packed(args):
    return run_one(*args)


def aggregate(rows: list[dict]) -> list[dict]:
    keys = ("r", "textual_overlap", "intensity_overlap", "decorrelation")
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault(tuple(row[k] for k in keys), []).append(row)
    out = []
    for key, members in groups.items():
        ok = [m for m in members if m["status"] == "ok"]
        agg = dict(zip(keys, key))
        agg["n_runs"] = len(members)
        agg["n_failed"] = len(members) - len(ok)
        for col in ("nmi_textual", "nmi_temporal", "nmi_diff", "measured_intensity_overlap"):
            vals = [m[col] for m in ok if not math.isnan(m[col])]
            agg[col] = float(np.mean(vals)) if vals else math.nan
        out.append(agg)
    return out


def run_sweep(grid: SweepGrid, gen: GenerationSpec | None = None, fit_config: FitConfig | None = None,
              workers: int = 1, normalization: str = "geometric") -> tuple[list[dict], list[dict]]:
    """One row per (grid point, seed) plus per-point means; row order is fixed by the grid."""
    gen = GenerationSpec() if gen is None else gen
    fit_config = FitConfig() if fit_config is None else fit_config
    jobs = [(r, to, io, rho, seed, gen, fit_config, normalization)
            for (r, to, io, rho) in grid.points() for seed in grid.seeds]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            rows = list(ex.map(_run_packed, jobs))
    else:
        rows = [_run_packed(j) for j in jobs]
    return rows, aggregate(rows)
