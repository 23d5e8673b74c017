"""Gaussian-mixture class-conditional models used in the simulation studies."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy.linalg import solve_triangular, toeplitz
from scipy.special import expit, logsumexp
from scipy.stats import norm

from .core import Dataset


@dataclass(frozen=True)
class Component:
    weight: float
    mean: tuple
    cov: tuple  # row-major nested tuples, d x d

    @cached_property
    def _chol(self) -> np.ndarray:
        return np.linalg.cholesky(np.asarray(self.cov, dtype=np.float64))

    @cached_property
    def _logdet(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self._chol))))

    def logpdf(self, X: np.ndarray) -> np.ndarray:
        diff = np.atleast_2d(X) - np.asarray(self.mean)
        z = solve_triangular(self._chol, diff.T, lower=True)
        d = diff.shape[1]
        return -0.5 * (np.sum(z * z, axis=0) + self._logdet + d * math.log(2 * math.pi))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal((n, len(self.mean)))
        return np.asarray(self.mean) + z @ self._chol.T


@dataclass(frozen=True)
class GaussianMixtureSpec:
    pi1: float
    class1: tuple = field(default_factory=tuple)
    class0: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not 0.0 < self.pi1 < 1.0:
            raise ValueError(f"pi1 must lie in (0, 1), got {self.pi1}")
        for name, comps in (("class1", self.class1), ("class0", self.class0)):
            if not comps:
                raise ValueError(f"{name} has no components")
            if abs(sum(c.weight for c in comps) - 1.0) > 1e-12:
                raise ValueError(f"{name} mixture weights do not sum to 1")
            for c in comps:
                cov = np.asarray(c.cov)
                if not np.allclose(cov, cov.T):
                    raise ValueError(f"{name} covariance is not symmetric")
                if np.any(np.linalg.eigvalsh(cov) <= 0):
                    raise ValueError(f"{name} covariance is not positive definite")

    @property
    def d(self) -> int:
        return len(self.class1[0].mean)

    def swapped(self) -> "GaussianMixtureSpec":
        return replace(self, pi1=1.0 - self.pi1, class1=self.class0, class0=self.class1)

    def to_dict(self) -> dict:
        def comps(cs):
            return [{"weight": c.weight, "mean": list(c.mean), "cov": [list(r) for r in c.cov]} for c in cs]
        return {"pi1": self.pi1, "class1": comps(self.class1), "class0": comps(self.class0)}

    @classmethod
    def from_dict(cls, obj: dict) -> "GaussianMixtureSpec":
        def comps(cs):
            return tuple(Component(float(c["weight"]), tuple(map(float, c["mean"])),
                                   tuple(tuple(map(float, r)) for r in c["cov"])) for c in cs)
        return cls(float(obj["pi1"]), comps(obj["class1"]), comps(obj["class0"]))


def _comp(weight, mean, cov) -> Component:
    return Component(float(weight), tuple(float(v) for v in mean),
                     tuple(tuple(float(v) for v in row) for row in np.asarray(cov)))


def simulation_spec(sim_id: int, d: int) -> GaussianMixtureSpec:
    """Simulation settings 1 (Gaussian), 2 (bimodal) and 3 (bimodal, correlated)."""
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    one = np.ones(d)
    eye = np.eye(d)
    if sim_id == 1:
        return GaussianMixtureSpec(
            1 / 3,
            (_comp(1.0, 0 * one, eye),),
            (_comp(1.0, 2 / math.sqrt(d) * one, eye),),
        )
    if sim_id in (2, 3):
        sigma = eye if sim_id == 2 else toeplitz(0.6 ** np.arange(d))
        return GaussianMixtureSpec(
            1 / 3 if sim_id == 2 else 1 / 2,
            (_comp(0.5, 0 * one, sigma), _comp(0.5, 3 * one, 2 * sigma)),
            (_comp(0.5, 1.5 * one, sigma), _comp(0.5, 4.5 * one, 2 * sigma)),
        )
    raise ValueError(f"unknown simulation id {sim_id}; expected 1, 2 or 3")


def _mixture_logpdf(comps, X) -> np.ndarray:
    parts = np.stack([math.log(c.weight) + c.logpdf(X) for c in comps])
    return logsumexp(parts, axis=0)


def _draw_class(comps, n: int, rng: np.random.Generator) -> np.ndarray:
    counts = rng.multinomial(n, [c.weight for c in comps])
    which = np.repeat(np.arange(len(comps)), counts)
    rng.shuffle(which)
    out = np.empty((n, len(comps[0].mean)))
    for j, c in enumerate(comps):
        mask = which == j
        out[mask] = c.sample(int(mask.sum()), rng)
    return out


def sample(spec: GaussianMixtureSpec, n: int, rng: np.random.Generator) -> Dataset:
    if n < 1:
        raise ValueError("n must be >= 1")
    y = (rng.random(n) < spec.pi1).astype(np.int8)
    X = np.empty((n, spec.d))
    n1 = int(y.sum())
    X[y == 1] = _draw_class(spec.class1, n1, rng)
    X[y == 0] = _draw_class(spec.class0, n - n1, rng)
    return Dataset(X, y)


def log_odds(spec: GaussianMixtureSpec, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != spec.d:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {spec.d}")
    return (math.log(spec.pi1) + _mixture_logpdf(spec.class1, X)
            - math.log1p(-spec.pi1) - _mixture_logpdf(spec.class0, X))


def eta(spec: GaussianMixtureSpec, X) -> np.ndarray:
    """P(Y=1 | X=x) for each row of X."""
    return expit(log_odds(spec, X))


def bayes_classify(spec: GaussianMixtureSpec, X) -> np.ndarray:
    # eta >= 1/2 exactly when the log-odds are >= 0
    return (log_odds(spec, X) >= 0).astype(np.int8)


def two_gaussian_bayes_risk(pi1: float, delta: float) -> float:
    """Bayes risk for two equal-covariance Gaussians at Mahalanobis distance ``delta``."""
    pi0 = 1.0 - pi1
    t = math.log(pi1 / pi0) / delta
    return pi1 * norm.cdf(-delta / 2 - t) + pi0 * norm.cdf(-delta / 2 + t)
