"""Powered Dirichlet priors over cluster sizes and over Hawkes intensities.

``r = 1`` gives the Dirichlet (resp. Dirichlet-Hawkes) process, ``r = 0`` the
uniform process. The last entry of every returned vector is the new cluster.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class PriorParams:
    r: float = 1.0
    alpha0: float = 1.0
    lambda0: float = 0.01

    def __post_init__(self):
        if not self.r >= 0:
            raise ConfigError(f"r must be >= 0, got {self.r}")
        if not self.alpha0 > 0:
            raise ConfigError(f"alpha0 must be > 0, got {self.alpha0}")
        if not self.lambda0 > 0:
            raise ConfigError(f"lambda0 must be > 0, got {self.lambda0}")


def pdp_prior(counts, params: PriorParams) -> np.ndarray:
    counts = np.asarray(counts, dtype=float)
    if np.any(counts < 1):
        raise DomainError("cluster counts must be >= 1")
    powered = counts ** params.r
    denom = params.alpha0 + powered.sum()
    return np.append(powered, params.alpha0) / denom


def _check_intensities(intensities) -> np.ndarray:
    lam = np.asarray(intensities, dtype=float).reshape(-1)
    if not np.all(np.isfinite(lam)) or np.any(lam < 0):
        raise DomainError("intensities must be finite and nonnegative")
    return lam


def pdhp_prior(intensities, params: PriorParams) -> np.ndarray:
    lam = _check_intensities(intensities)
    powered = lam ** params.r  # numpy gives 0**0 == 1
    denom = params.lambda0 + powered.sum()
    return np.append(powered, params.lambda0) / denom


def powered_log_intensities(intensities, r: float) -> np.ndarray:
    """``r * log(lambda)`` with ``0 ** 0 == 1`` and ``0 ** r == 0`` for ``r > 0``."""
    lam = _check_intensities(intensities)
    if r == 0:
        return np.zeros_like(lam)
    with np.errstate(divide="ignore"):
        return r * np.log(lam)


def log_pdhp_prior(intensities, params: PriorParams) -> np.ndarray:
    logs = np.append(powered_log_intensities(intensities, params.r), np.log(params.lambda0))
    return logs - logsumexp(logs)
