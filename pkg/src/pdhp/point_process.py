"""Hawkes intensities over a fixed Gaussian kernel basis.

A cluster's intensity is ``lambda(t) = sum_{t_i < t} w . kappa(t - t_i)`` where
``kappa`` stacks ``L`` Gaussian densities truncated to zero past ``horizon``.
Kernel weights ``w`` are chosen among a finite set of candidates, each scored
by its running Hawkes log-likelihood.
"""
from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import ndtr

from .errors import ConfigError, DomainError

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class KernelBasis:
    means: tuple[float, ...]
    bandwidths: tuple[float, ...]
    horizon: float

    def __post_init__(self):
        means = tuple(float(m) for m in self.means)
        bws = tuple(float(b) for b in self.bandwidths)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "bandwidths", bws)
        object.__setattr__(self, "horizon", float(self.horizon))
        if len(means) == 0 or len(means) != len(bws):
            raise ConfigError("kernel means and bandwidths must be non-empty and of equal length")
        if any(m < 0 for m in means) or any(b <= 0 for b in bws):
            raise ConfigError("kernel means must be >= 0 and bandwidths > 0")
        if any(b <= a for a, b in zip(means, means[1:])):
            raise ConfigError("kernel means must be strictly increasing")
        if self.horizon < max(means) + 5.0 * max(bws):
            raise ConfigError(
                f"horizon {self.horizon} < max(means) + 5*max(bandwidths) = {max(means) + 5.0 * max(bws)}"
            )
        object.__setattr__(self, "_mu", np.array(means))
        object.__setattr__(self, "_sigma", np.array(bws))

    @classmethod
    def default(cls, means: Sequence[float] = (3.0, 7.0, 11.0), bandwidth: float | None = None,
                horizon: float | None = None) -> "KernelBasis":
        """Equal-bandwidth basis; bandwidth defaults to half the smallest spacing of the means."""
        means = tuple(float(m) for m in means)
        if bandwidth is None:
            spacing = min(np.diff(means)) if len(means) > 1 else 1.0
            bandwidth = 0.5 * spacing
        bws = (float(bandwidth),) * len(means)
        if horizon is None:
            horizon = max(means) + 5.0 * bandwidth
        return cls(means, bws, horizon)

    @property
    def size(self) -> int:
        return len(self.means)

    def matrix(self, dts: np.ndarray) -> np.ndarray:
        """Kernel values for each elapsed time, shape ``(len(dts), L)``."""
        dts = np.asarray(dts, dtype=float)[:, None]
        z = (dts - self._mu) / self._sigma
        out = np.exp(-0.5 * z * z) / (self._sigma * _SQRT_2PI)
        out[dts[:, 0] > self.horizon] = 0.0
        return out

    def cumulative(self, xs: np.ndarray) -> np.ndarray:
        """``int_0^min(x, horizon) kappa_l``, shape ``(len(xs), L)``; zero for x <= 0."""
        xs = np.clip(np.asarray(xs, dtype=float), 0.0, self.horizon)[:, None]
        lo = ndtr((0.0 - self._mu) / self._sigma)
        return ndtr((xs - self._mu) / self._sigma) - lo

    def masses(self) -> np.ndarray:
        """Integral of each truncated kernel over ``[0, horizon]``."""
        return self.cumulative(np.array([self.horizon]))[0]


def kernel_vector(basis: KernelBasis, dt: float) -> np.ndarray:
    if dt < 0:
        raise DomainError(f"negative elapsed time {dt}")
    return basis.matrix(np.array([dt]))[0]


class ClusterDynamics:
    """Event history and kernel-weight candidates of one cluster.

    ``candidate_loglik[m]`` is the Hawkes log-likelihood of candidate ``m`` on
    ``[0, last event]``, kept up to date by :func:`update_dynamics`.
    """

    __slots__ = ("event_times", "candidates", "candidate_loglik", "active_weights", "_active")

    def __init__(self, candidates: np.ndarray, event_times: Sequence[float] = ()):
        self.candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
        if np.any(self.candidates < 0):
            raise DomainError("kernel weights must be nonnegative")
        self.event_times: list[float] = list(event_times)
        self.candidate_loglik = np.zeros(len(self.candidates))
        self._active = 0
        self.active_weights = self.candidates[0]

    @property
    def n_events(self) -> int:
        return len(self.event_times)

    @property
    def last_time(self) -> float:
        return self.event_times[-1] if self.event_times else -math.inf

    def copy(self) -> "ClusterDynamics":
        new = ClusterDynamics.__new__(ClusterDynamics)
        new.event_times = list(self.event_times)
        new.candidates = self.candidates  # never mutated in place
        new.candidate_loglik = self.candidate_loglik.copy()
        new._active = self._active
        new.active_weights = self.active_weights
        return new

    def kernel_sum(self, basis: KernelBasis, t: float) -> np.ndarray:
        """``sum_{t - horizon <= t_i < t} kappa(t - t_i)``, a length-L vector."""
        times = self.event_times
        hi = bisect_left(times, t)
        lo = bisect_left(times, t - basis.horizon, 0, hi)
        if lo == hi:
            return np.zeros(basis.size)
        return basis.matrix(t - np.array(times[lo:hi])).sum(axis=0)

    def _select(self):
        self._active = int(np.argmax(self.candidate_loglik))
        self.active_weights = self.candidates[self._active]


def intensity(dyn: ClusterDynamics, basis: KernelBasis, t: float, weights: np.ndarray | None = None) -> float:
    w = dyn.active_weights if weights is None else np.asarray(weights, dtype=float)
    return float(dyn.kernel_sum(basis, t) @ w)


def integrated_intensity(dyn: ClusterDynamics, basis: KernelBasis, weights: np.ndarray, t_end: float) -> float:
    """Closed-form compensator ``int_0^t_end lambda(s) ds``."""
    if not dyn.event_times:
        return 0.0
    if t_end < dyn.event_times[-1]:
        raise DomainError(f"t_end={t_end} precedes the last event {dyn.event_times[-1]}")
    g = basis.cumulative(t_end - np.array(dyn.event_times)).sum(axis=0)
    return float(g @ np.asarray(weights, dtype=float))


def hawkes_log_likelihood(dyn: ClusterDynamics, basis: KernelBasis, weights: np.ndarray, t_end: float) -> float:
    """Batch log-likelihood; events without strictly earlier history add no log term.

    Returns ``-inf`` when some event with a nonempty history has zero intensity.
    """
    w = np.asarray(weights, dtype=float)
    times = dyn.event_times
    total = 0.0
    for i, t in enumerate(times):
        if bisect_left(times, t, 0, i) == 0:
            continue
        lam = float(basis.matrix(t - np.array(times[:i])).sum(axis=0) @ w)
        if lam <= 0.0:
            return -math.inf
        total += math.log(lam)
    return total - integrated_intensity(dyn, basis, w, t_end)


def sample_candidates(scale_range: tuple[float, float], m: int, n_kernels: int,
                      rng: np.random.Generator) -> np.ndarray:
    """``m`` weight vectors: a uniform simplex direction times a log-uniform total scale."""
    lo, hi = float(scale_range[0]), float(scale_range[1])
    if m < 1 or n_kernels < 1:
        raise ConfigError("need at least one candidate and one kernel")
    if not 0.0 < lo <= hi:
        raise ConfigError(f"invalid candidate scale range ({lo}, {hi})")
    directions = rng.dirichlet(np.ones(n_kernels), size=m)
    if lo == hi:
        scales = np.full(m, lo)
    else:
        scales = np.exp(rng.uniform(math.log(lo), math.log(hi), size=m))
    return directions * scales[:, None]


def update_dynamics(dyn: ClusterDynamics, basis: KernelBasis, t_new: float) -> ClusterDynamics:
    """Append an event and advance every candidate's log-likelihood to ``t_new``."""
    times = dyn.event_times
    if times and t_new < times[-1]:
        raise DomainError(f"event at {t_new} precedes last event {times[-1]}")
    if times:
        t_prev = times[-1]
        # events saturated before t_prev contribute no further compensator
        lo = bisect_left(times, t_prev - basis.horizon)
        recent = np.array(times[lo:])
        comp = (basis.cumulative(t_new - recent) - basis.cumulative(t_prev - recent)).sum(axis=0)
        increment = -(dyn.candidates @ comp)
        ks = dyn.kernel_sum(basis, t_new)
        if bisect_left(times, t_new) > 0:
            lam = dyn.candidates @ ks
            with np.errstate(divide="ignore"):
                increment = increment + np.log(lam)
        dyn.candidate_loglik = dyn.candidate_loglik + increment
    times.append(float(t_new))
    dyn._select()
    return dyn
