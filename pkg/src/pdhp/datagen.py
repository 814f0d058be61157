"""Synthetic labeled corpora: one Hawkes stream per cluster, each event a bag of words.

Knobs: shared-vocabulary fraction between clusters, how much the clusters'
activity windows overlap in time, and a decorrelation rate that re-draws a
document's textual cluster independently of the stream that emitted it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import Document
from .errors import ConfigError, DomainError
from .point_process import KernelBasis


@dataclass(frozen=True)
class GenerationSpec:
    n_clusters: int = 2
    vocab_per_cluster: int = 1000
    words_per_doc: int = 20
    textual_overlap: float = 0.0
    intensity_overlap: float = 0.0
    decorrelation: float = 0.0
    horizon: float = 500.0  # length of each cluster's activity window
    base_rate: float = 0.2
    branching_ratio: float = 0.8
    true_weights: tuple[tuple[float, ...], ...] | None = None
    kernel_means: tuple[float, ...] = (3.0, 7.0, 11.0)
    kernel_bandwidth: float | None = None
    seed: int = 0

    def __post_init__(self):
        for name in ("textual_overlap", "intensity_overlap", "decorrelation"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")
        if self.n_clusters < 1 or self.vocab_per_cluster < 1 or self.words_per_doc < 0:
            raise ConfigError("n_clusters and vocab_per_cluster must be >= 1, words_per_doc >= 0")
        if self.horizon <= 0 or self.base_rate < 0:
            raise ConfigError("horizon must be > 0 and base_rate >= 0")
        if self.true_weights is not None and len(self.true_weights) != self.n_clusters:
            raise ConfigError("true_weights needs one weight vector per cluster")
        basis = self.basis()
        for w in self.weights():
            br = branching_ratio(w, basis)
            if br >= 1.0:
                raise ConfigError(f"unstable Hawkes process: branching ratio {br:.4f} >= 1")

    def basis(self) -> KernelBasis:
        return KernelBasis.default(self.kernel_means, self.kernel_bandwidth)

    def weights(self) -> list[np.ndarray]:
        if self.true_weights is not None:
            return [np.asarray(w, dtype=float) for w in self.true_weights]
        masses = self.basis().masses()
        w = self.branching_ratio / (len(masses) * masses)
        return [w.copy() for _ in range(self.n_clusters)]


@dataclass
class LabeledCorpus:
    documents: list[Document]
    temporal_labels: list[int]
    textual_labels: list[int]
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.documents)


def branching_ratio(weights, basis: KernelBasis) -> float:
    w = np.asarray(weights, dtype=float)
    if w.shape != (basis.size,) or np.any(w < 0):
        raise ConfigError(f"weights must be {basis.size} nonnegative values")
    return float(w @ basis.masses())


def _kernel_peak_bound(basis: KernelBasis, dts: np.ndarray) -> np.ndarray:
    """``sup_{s >= dt} kappa_l(s)`` per row; valid because each kernel is unimodal."""
    mu = np.asarray(basis.means)
    sigma = np.asarray(basis.bandwidths)
    k = basis.matrix(dts)
    peak = 1.0 / (sigma * math.sqrt(2.0 * math.pi))
    before_mode = dts[:, None] <= mu
    return np.where(before_mode, peak, k)


def simulate_hawkes(mu: float, weights, basis: KernelBasis, T: float,
                    rng: np.random.Generator) -> np.ndarray:
    """Ogata thinning on ``[0, T]`` for ``mu + sum_{t_i < t} w . kappa(t - t_i)``."""
    w = np.asarray(weights, dtype=float)
    br = branching_ratio(w, basis)
    if br >= 1.0:
        raise ConfigError(f"unstable Hawkes process: branching ratio {br:.4f} >= 1")
    if mu < 0:
        raise ConfigError("base rate must be >= 0")
    events: list[float] = []
    t = 0.0
    start = 0
    horizon = basis.horizon
    while True:
        while start < len(events) and t - events[start] > horizon:
            start += 1
        recent = np.array(events[start:])
        bound = mu
        if recent.size:
            bound += float(_kernel_peak_bound(basis, t - recent).sum(axis=0) @ w)
        if bound <= 0.0:
            break
        t += rng.exponential(1.0 / bound)
        if t > T:
            break
        lam = mu
        if recent.size:
            dts = t - recent
            lam += float(basis.matrix(dts[dts > 0]).sum(axis=0) @ w)
        if rng.random() * bound <= lam:
            events.append(t)
    return np.array(events)


def build_vocabularies(V: int, overlap: float, n_clusters: int = 2) -> list[np.ndarray]:
    """Word-index sets of size ``V``; all clusters share the first ``round(overlap * V)`` indices."""
    if not 0.0 <= overlap <= 1.0:
        raise ConfigError(f"overlap must lie in [0, 1], got {overlap}")
    shared = int(round(overlap * V))
    own = V - shared
    return [np.concatenate([np.arange(shared), shared + k * own + np.arange(own)])
            for k in range(n_clusters)]


def intensity_on_grid(events, basis: KernelBasis, weights, grid: np.ndarray) -> np.ndarray:
    """Triggered intensity (no base rate) at each grid point, strict-past convention."""
    events = np.sort(np.asarray(events, dtype=float))
    w = np.asarray(weights, dtype=float)
    out = np.zeros(len(grid))
    for t_i in events:
        lo = np.searchsorted(grid, t_i, side="right")
        hi = np.searchsorted(grid, t_i + basis.horizon, side="right")
        if hi > lo:
            out[lo:hi] += basis.matrix(grid[lo:hi] - t_i) @ w
    return out


def measured_intensity_overlap(events_a, events_b, basis: KernelBasis, weights, grid_step: float,
                               weights_b=None) -> float:
    """Overlap coefficient ``int min(la, lb) / int max(la, lb)`` on a regular grid.

    Returns ``nan`` when both intensities vanish everywhere.
    """
    if grid_step <= 0:
        raise DomainError("grid step must be > 0")
    weights_b = weights if weights_b is None else weights_b
    all_events = np.concatenate([np.asarray(events_a, float), np.asarray(events_b, float)])
    if all_events.size == 0:
        return math.nan
    grid = np.arange(all_events.min(), all_events.max() + basis.horizon + grid_step, grid_step)
    la = intensity_on_grid(events_a, basis, weights, grid)
    lb = intensity_on_grid(events_b, basis, weights_b, grid)
    top = np.maximum(la, lb).sum()
    if top <= 0.0:
        return math.nan
    return float(np.minimum(la, lb).sum() / top)


def generate_corpus(spec: GenerationSpec, rng: np.random.Generator | None = None) -> LabeledCorpus:
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    basis = spec.basis()
    weights = spec.weights()
    K = spec.n_clusters
    vocabs = build_vocabularies(spec.vocab_per_cluster, spec.textual_overlap, K)
    shift = (1.0 - spec.intensity_overlap) * spec.horizon

    streams = []
    for k in range(K):
        times = simulate_hawkes(spec.base_rate, weights[k], basis, spec.horizon, rng) + k * shift
        streams.append(times)

    times = np.concatenate(streams)
    temporal = np.concatenate([np.full(len(s), k) for k, s in enumerate(streams)]).astype(int)
    order = np.lexsort((temporal, times))
    times, temporal = times[order], temporal[order]

    textual = temporal.copy()
    redraw = rng.random(len(times)) < spec.decorrelation
    textual[redraw] = rng.integers(0, K, size=int(redraw.sum()))

    docs = []
    for i, (t, k) in enumerate(zip(times, textual)):
        words = rng.choice(vocabs[k], size=spec.words_per_doc, replace=True)
        docs.append(Document(i, float(t), tuple(f"w{v}" for v in words)))

    overlaps = []
    for a in range(K):
        for b in range(a + 1, K):
            overlaps.append(measured_intensity_overlap(streams[a], streams[b], basis, weights[a], 0.5,
                                                       weights_b=weights[b]))
    meta = {
        "events_per_cluster": [len(s) for s in streams],
        "measured_intensity_overlap": float(np.nanmean(overlaps)) if overlaps and not all(
            math.isnan(o) for o in overlaps) else math.nan,
        "shared_vocabulary": int(round(spec.textual_overlap * spec.vocab_per_cluster)),
        "n_decorrelated": int(np.sum(textual != temporal)),
    }
    return LabeledCorpus(docs, temporal.tolist(), textual.tolist(), meta)
