"""Sequential Monte Carlo clustering of a timestamped document stream.

Every particle holds one allocation hypothesis. For each incoming document a
particle (1) draws a cluster from the textual-likelihood x temporal-prior
posterior, (2) updates that cluster's Hawkes dynamics and word counts and (3)
multiplies its weight by the document's marginal likelihood. Particles are
resampled systematically when the effective sample size drops too low.
"""
from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .corpus import Document, check_sorted, encode
from .errors import ConfigError, OrderingError
from .language_model import ClusterWordCounts, DmParams, DocCounts, dm_log_predictive, update_counts
from .point_process import ClusterDynamics, KernelBasis, intensity, sample_candidates, update_dynamics
from .prior import PriorParams, powered_log_intensities


@dataclass
class FitConfig:
    r: float = 1.0
    lambda0: float = 0.01
    alpha0: float = 1.0  # only used by the count-based prior
    theta0_v: float = 10.0
    kernel_means: tuple[float, ...] = (3.0, 7.0, 11.0)
    kernel_bandwidths: tuple[float, ...] | None = None
    kernel_horizon: float | None = None
    n_particles: int = 8
    ess_threshold: float = 0.5
    n_candidates: int = 8
    candidate_scale: tuple[float, float] = (0.1, 3.0)
    seed: int = 0
    mode: str = "sample"
    n_threads: int = 1

    def __post_init__(self):
        if self.n_particles < 1:
            raise ConfigError("n_particles must be >= 1")
        if not 0 < self.ess_threshold <= 1:
            raise ConfigError("ess_threshold must lie in (0, 1]")
        if self.mode not in ("sample", "greedy"):
            raise ConfigError(f"unknown mode {self.mode!r}; expected 'sample' or 'greedy'")
        if self.n_threads < 1:
            raise ConfigError("n_threads must be >= 1")
        self.prior_params()
        self.kernel_basis()

    def prior_params(self) -> PriorParams:
        return PriorParams(r=self.r, alpha0=self.alpha0, lambda0=self.lambda0)

    def kernel_basis(self) -> KernelBasis:
        if self.kernel_bandwidths is None:
            basis = KernelBasis.default(self.kernel_means, horizon=self.kernel_horizon)
        else:
            bws = tuple(self.kernel_bandwidths)
            horizon = self.kernel_horizon
            if horizon is None:
                horizon = max(self.kernel_means) + 5.0 * max(bws)
            basis = KernelBasis(tuple(self.kernel_means), bws, horizon)
        return basis

    def model(self, vocab_size: int) -> "Model":
        return Model(
            prior=self.prior_params(),
            dm=DmParams(vocab_size=vocab_size, theta0_v=self.theta0_v),
            basis=self.kernel_basis(),
            n_candidates=self.n_candidates,
            candidate_scale=tuple(self.candidate_scale),
        )

    def digest(self) -> str:
        """Hash of every setting except the thread count, which never changes results."""
        d = asdict(self)
        d.pop("n_threads")
        blob = json.dumps(d, sort_keys=True, default=list).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class Model:
    prior: PriorParams
    dm: DmParams
    basis: KernelBasis
    n_candidates: int = 8
    candidate_scale: tuple[float, float] = (0.1, 3.0)


class Cluster:
    __slots__ = ("dynamics", "words")

    def __init__(self, dynamics: ClusterDynamics, words: ClusterWordCounts):
        self.dynamics = dynamics
        self.words = words

    def copy(self) -> "Cluster":
        return Cluster(self.dynamics.copy(), self.words.copy())


class Particle:
    def __init__(self):
        self.assignments: list[int] = []
        self.clusters: dict[int, Cluster] = {}
        self.log_weight = 0.0
        self.next_id = 1
        self.last_time = -math.inf

    def copy(self) -> "Particle":
        new = Particle()
        new.assignments = list(self.assignments)
        new.clusters = {c: cl.copy() for c, cl in self.clusters.items()}
        new.log_weight = self.log_weight
        new.next_id = self.next_id
        new.last_time = self.last_time
        return new


def posterior_over_clusters(particle: Particle, timestamp: float, doc: DocCounts,
                            model: Model) -> tuple[list[int], np.ndarray, float]:
    """Normalized log-posterior over existing clusters plus a new one.

    Returns ``(cluster_ids, log_post, log_norm)``; the last entry of
    ``log_post`` is the new cluster and ``log_norm`` is the log marginal
    likelihood of the document under the particle.
    """
    if timestamp < particle.last_time:
        raise OrderingError(f"document at t={timestamp} precedes t={particle.last_time}")
    ids = list(particle.clusters)
    r = model.prior.r
    k = len(ids)
    text = np.empty(k + 1)
    lam = np.empty(k)
    for i, c in enumerate(ids):
        cl = particle.clusters[c]
        text[i] = dm_log_predictive(cl.words, doc, model.dm)
        lam[i] = intensity(cl.dynamics, model.basis, timestamp) if r != 0 else 0.0
    text[k] = dm_log_predictive(_EMPTY_COUNTS, doc, model.dm)
    log_prior = np.append(powered_log_intensities(lam, r), math.log(model.prior.lambda0))
    # the prior's own normalizer cancels between clusters but enters the marginal likelihood
    log_prior -= logsumexp(log_prior)
    joint = text + log_prior
    log_norm = float(logsumexp(joint))
    return ids, joint - log_norm, log_norm


_EMPTY_COUNTS = ClusterWordCounts()


def step(particle: Particle, timestamp: float, doc: DocCounts, model: Model,
         rng: np.random.Generator, greedy: bool = False) -> Particle:
    ids, log_post, log_norm = posterior_over_clusters(particle, timestamp, doc, model)
    if greedy:
        choice = int(np.argmax(log_post))
    else:
        p = np.exp(log_post)
        choice = int(np.searchsorted(np.cumsum(p), rng.random() * p.sum(), side="right"))
        choice = min(choice, len(p) - 1)
    if choice == len(ids):
        cid = particle.next_id
        particle.next_id += 1
        cands = sample_candidates(model.candidate_scale, model.n_candidates, model.basis.size, rng)
        cluster = particle.clusters[cid] = Cluster(ClusterDynamics(cands), ClusterWordCounts())
    else:
        cid = ids[choice]
        cluster = particle.clusters[cid]
    update_dynamics(cluster.dynamics, model.basis, timestamp)
    update_counts(cluster.words, doc)
    particle.assignments.append(cid)
    particle.log_weight += log_norm
    particle.last_time = timestamp
    return particle


def effective_sample_size(log_weights: Sequence[float]) -> float:
    lw = np.asarray(log_weights, dtype=float)
    if lw.size == 0 or not np.any(np.isfinite(lw)):
        raise ValueError("effective sample size needs at least one finite log-weight")
    w = np.exp(lw - lw[np.isfinite(lw)].max())
    w /= w.sum()
    return float(1.0 / np.sum(w * w))


def systematic_indices(log_weights: Sequence[float], rng: np.random.Generator) -> np.ndarray:
    lw = np.asarray(log_weights, dtype=float)
    n = lw.size
    w = np.exp(lw - lw.max())
    cdf = np.cumsum(w / w.sum())
    cdf[-1] = 1.0
    positions = (rng.random() + np.arange(n)) / n
    return np.searchsorted(cdf, positions, side="right")


def resample(particles: list[Particle], rng: np.random.Generator) -> list[Particle]:
    """Systematic resampling; returns independent copies with zero log-weight."""
    idx = systematic_indices([p.log_weight for p in particles], rng)
    out = []
    for j in idx:
        new = particles[j].copy()
        new.log_weight = 0.0
        out.append(new)
    return out


@dataclass
class ClusterSnapshot:
    cluster_id: int
    event_times: list[float]
    weights: list[float]
    n_words: int
    top_words: list[tuple[str, int]] = field(default_factory=list)

    def intensity(self, basis: KernelBasis, t: float) -> float:
        dyn = ClusterDynamics(np.array([self.weights]), self.event_times)
        return intensity(dyn, basis, t)


@dataclass
class ClusteringResult:
    doc_ids: list[int]
    assignments: list[int]
    clusters: dict[int, ClusterSnapshot]
    particle_log_weights: list[float]
    metadata: dict

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)


def fit(corpus: Sequence[Document], config: FitConfig, top_words: int = 10) -> ClusteringResult:
    """Single pass over a time-sorted corpus; result from the max-weight particle."""
    corpus = list(corpus)
    check_sorted(corpus)
    vocab, docs = encode(corpus)
    meta = {"seed": config.seed, "config_hash": config.digest(), "n_documents": len(corpus),
            "vocab_size": vocab.size, "n_resamplings": 0}
    if not corpus:
        return ClusteringResult([], [], {}, [0.0] * config.n_particles, meta)
    model = config.model(vocab.size)
    greedy = config.mode == "greedy"
    n = config.n_particles
    seeds = np.random.SeedSequence(config.seed).spawn(n + 1)
    # random streams belong to particle slots, so copies made by resampling diverge
    rngs = [np.random.default_rng(s) for s in seeds[:n]]
    resample_rng = np.random.default_rng(seeds[n])
    particles = [Particle() for _ in range(n)]
    pool = ThreadPoolExecutor(config.n_threads) if config.n_threads > 1 and n > 1 else None
    try:
        for d, doc in zip(corpus, docs):
            if pool is None:
                for j in range(n):
                    step(particles[j], d.timestamp, doc, model, rngs[j], greedy)
            else:
                list(pool.map(lambda j: step(particles[j], d.timestamp, doc, model, rngs[j], greedy), range(n)))
            lw = [p.log_weight for p in particles]
            if n > 1 and effective_sample_size(lw) < config.ess_threshold * n:
                particles = resample(particles, resample_rng)
                meta["n_resamplings"] += 1
    finally:
        if pool is not None:
            pool.shutdown()
    best = particles[int(np.argmax([p.log_weight for p in particles]))]
    clusters = {}
    for cid, cl in best.clusters.items():
        ranked = sorted(cl.words.per_word.items(), key=lambda kv: (-kv[1], kv[0]))[:top_words]
        clusters[cid] = ClusterSnapshot(
            cid, list(cl.dynamics.event_times), [float(x) for x in cl.dynamics.active_weights],
            cl.words.total, [(vocab.tokens[v], c) for v, c in ranked])
    return ClusteringResult([d.doc_id for d in corpus], list(best.assignments), clusters,
                            [p.log_weight for p in particles], meta)
