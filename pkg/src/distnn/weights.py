"""Local weight vectors for weighted nearest-neighbour classifiers.

Constructors return plain float64 arrays of length ``n`` that are
nonnegative, nonincreasing and sum to one. The ``bridge_*`` helpers map an
oracle parameter tuned on the full sample (K or m) to the per-shard value
used by the majority-voting or weighted-voting ensembles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import safe_ceil

SUM_TOL = 1e-12


def alpha(i, d: float):
    """i**(1 + 2/d) - (i - 1)**(1 + 2/d); accepts scalars or arrays."""
    p = 1.0 + 2.0 / d
    i = np.asarray(i, dtype=np.float64)
    out = i**p - (i - 1.0) ** p
    return float(out) if out.ndim == 0 else out


def _normalize(w: np.ndarray) -> np.ndarray:
    w = np.clip(w, 0.0, None)
    total = math.fsum(w)
    if total <= 0:
        raise ValueError("weight vector has no positive mass")
    w = w / total
    return w


def uniform_k_weights(n: int, k: int) -> np.ndarray:
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    w = np.zeros(n)
    w[:k] = 1.0 / k
    return w


def ownn_weights(n: int, m: int, d: int) -> np.ndarray:
    """Optimal weighted nearest-neighbour weights with cutoff ``m`` in dimension ``d``.

    The bracket is nonnegative in exact arithmetic; float noise below zero is
    clipped before renormalising.
    """
    if not 1 <= m <= n:
        raise ValueError(f"m must lie in [1, {n}], got {m}")
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    i = np.arange(1, m + 1, dtype=np.float64)
    w = np.zeros(n)
    w[:m] = (1.0 + d / 2.0 - d * alpha(i, d) / (2.0 * m ** (2.0 / d))) / m
    return _normalize(w)


def bnn_weights(n: int, q: float) -> np.ndarray:
    """WNN weights equivalent to bagged 1-NN with resampling ratio ``q``."""
    if not 0.0 < q < 1.0:
        raise ValueError(f"q must lie in (0, 1), got {q}")
    if n < 1:
        raise ValueError("n must be >= 1")
    i = np.arange(n, dtype=np.float64)
    # log-space keeps (1-q)**i from underflowing into a zero-sum for tiny q*n
    logw = math.log(q) + i * math.log1p(-q) - math.log(-math.expm1(n * math.log1p(-q)))
    return _normalize(np.exp(logw))


def effective_support(w: np.ndarray) -> int:
    """1 + index of the last nonzero weight."""
    nz = np.flatnonzero(w)
    return int(nz[-1]) + 1 if nz.size else 0


# -- bridging from oracle parameters to per-shard ones --------------------

def majority_factor(d: float) -> float:
    return (math.pi / 2.0) ** (d / (d + 4.0))


def bridge_k_majority(K_oracle: float, s: int, d: float) -> int:
    return max(1, safe_ceil(majority_factor(d) * K_oracle / s))


def bridge_k_weighted(K_oracle: float, s: int) -> int:
    return max(1, safe_ceil(K_oracle / s))


bridge_l_majority = bridge_k_majority
bridge_l_weighted = bridge_k_weighted


# -- schemes --------------------------------------------------------------

@dataclass(frozen=True)
class UniformK:
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")

    def weights(self, n: int, d: int | None = None) -> np.ndarray:
        return uniform_k_weights(n, min(self.k, n))


@dataclass(frozen=True)
class Ownn:
    m: int
    d: int

    def __post_init__(self):
        if self.m < 1 or self.d < 1:
            raise ValueError(f"need m >= 1 and d >= 1, got m={self.m}, d={self.d}")

    def weights(self, n: int, d: int | None = None) -> np.ndarray:
        return ownn_weights(n, min(self.m, n), self.d)


@dataclass(frozen=True)
class BnnGeometric:
    q: float

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise ValueError(f"q must lie in (0, 1), got {self.q}")

    def weights(self, n: int, d: int | None = None) -> np.ndarray:
        return bnn_weights(n, self.q)


@dataclass(frozen=True)
class Custom:
    w: tuple = field()

    def weights(self, n: int, d: int | None = None) -> np.ndarray:
        w = np.asarray(self.w, dtype=np.float64)
        if w.shape != (n,):
            raise ValueError(f"custom weights have length {w.size}, need {n}")
        if np.any(w < 0):
            raise ValueError("custom weights must be nonnegative")
        return _normalize(w)


# -- admissibility diagnostics --------------------------------------------

@dataclass
class AdmissibilityReport:
    beta: float
    n: int
    k2: int
    values: dict
    bounds: dict
    holds: dict
    extra_ratio: float | None = None
    extra_scale: float | None = None

    @property
    def admissible(self) -> bool:
        return all(self.holds.values())


def check_admissibility(w, beta: float, d: int, s: int | None = None) -> AdmissibilityReport:
    """Evaluate the five admissible-class conditions on ``w`` literally.

    Purely diagnostic. When ``s`` is given the report also carries the
    third-moment ratio sum(w^3)/sum(w^2)^1.5 next to s^-1/2 (log s)^-2, which
    the majority-vote normal approximation needs to be small.
    """
    if not 0.0 < beta < 0.5:
        raise ValueError(f"beta must lie in (0, 1/2), got {beta}")
    w = np.asarray(w, dtype=np.float64)
    n = w.size
    k2 = safe_ceil(n ** (1.0 - beta))
    a = alpha(np.arange(1, n + 1), d)
    logn = math.log(n) if n > 1 else float("nan")
    s2 = float(np.sum(w**2))
    s3 = float(np.sum(w**3))
    aw = float(np.sum(a * w))
    tail = w[k2:]
    values = {
        "w1": s2,
        "w2": n ** (-4.0 / d) * aw**2,
        "w3": n ** (2.0 / d) * float(np.sum(tail)) / aw,
        "w4": float(np.sum(tail**2)) / s2,
        "w5": s3 / s2**1.5,
    }
    bounds = {
        "w1": n**-beta,
        "w2": n**-beta,
        "w3": 1.0 / logn,
        "w4": 1.0 / logn,
        "w5": 1.0 / logn,
    }
    holds = {key: bool(values[key] <= bounds[key]) for key in values}
    report = AdmissibilityReport(beta, n, k2, values, bounds, holds)
    if s is not None:
        report.extra_ratio = values["w5"]
        report.extra_scale = s**-0.5 * math.log(s) ** -2 if s > 1 else float("inf")
    return report
