"""Cross-validated choice of the oracle parameter (K, m or q)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Dataset, safe_ceil
from .ensemble import classify_estimate
from .neighbors import NeighborIndex
from .weights import bnn_weights, effective_support, ownn_weights, uniform_k_weights

FAMILIES = ("knn", "ownn", "bnn")


@dataclass
class TuneResult:
    family: str
    grid: list
    cv_risk: np.ndarray
    cv_se: np.ndarray
    selected: float
    folds: int

    def rows(self) -> list[dict]:
        return [{"family": self.family, "param": p, "cv_risk": float(r), "cv_se": float(e),
                 "selected": int(p == self.selected)}
                for p, r, e in zip(self.grid, self.cv_risk, self.cv_se)]


def default_oracle_k(N: int) -> int:
    return int(min(N, max(1, safe_ceil(N**0.7))))


GRID_SCALE = 16


def default_grid(family: str, N: int, d: int, size: int = 24) -> list:
    """Log-spaced candidates up to GRID_SCALE times the optimal-order N^(4/(d+4)).

    The optimal OWNN cutoff carries a constant well above one, so a narrow
    grid tends to select its own upper edge.
    """
    top = min(N, max(2, int(GRID_SCALE * N ** (4.0 / (d + 4)))))
    if family in ("knn", "ownn"):
        return sorted({int(v) for v in np.unique(np.round(np.geomspace(1, top, size)))})
    if family == "bnn":
        # a resampling ratio q behaves roughly like 1/q neighbours
        return [float(q) for q in np.geomspace(1.0 / top, 0.5, size)]
    raise ValueError(f"unknown family {family!r}")


def scheme_weights(family: str, n: int, param, d: int) -> np.ndarray:
    if family == "knn":
        return uniform_k_weights(n, min(int(param), n))
    if family == "ownn":
        return ownn_weights(n, min(int(param), n), d)
    if family == "bnn":
        return bnn_weights(n, float(param))
    raise ValueError(f"unknown family {family!r}")


def stratified_folds(y: np.ndarray, folds: int, rng: np.random.Generator) -> np.ndarray:
    """Fold id per point, with each class dealt round-robin after shuffling."""
    y = np.asarray(y)
    counts = np.bincount(y, minlength=2)
    if folds < 2:
        raise ValueError("folds must be >= 2")
    if folds > counts.min():
        raise ValueError(f"{folds} folds exceed the smallest class count {counts.min()}")
    fold = np.empty(y.size, dtype=np.int64)
    offset = 0
    for c in (0, 1):
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(idx.size)]
        fold[idx] = (np.arange(idx.size) + offset) % folds
        offset += idx.size
    return fold


def cv_tune(data: Dataset, family: str, grid=None, folds: int = 5,
            rng: np.random.Generator | None = None) -> TuneResult:
    """Pick the grid value with the lowest pooled cross-validated error.

    Ties go to the smallest parameter value.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    if rng is None:
        rng = np.random.default_rng(0)
    grid = list(default_grid(family, data.n, data.d) if grid is None else grid)
    if not grid:
        raise ValueError("empty grid")
    fold = stratified_folds(data.y, folds, rng)

    errors = np.zeros((len(grid), folds))
    sizes = np.zeros(folds)
    for f in range(folds):
        tr = np.flatnonzero(fold != f)
        va = np.flatnonzero(fold == f)
        n_tr = tr.size
        ws = [scheme_weights(family, n_tr, p, data.d) for p in grid]
        depth = max(effective_support(w) for w in ws)
        idx, _ = NeighborIndex(data.X[tr]).query(data.X[va], depth)
        labels = data.y[tr][idx].astype(np.float64)
        truth = data.y[va]
        for g, w in enumerate(ws):
            k = effective_support(w)
            S = (labels[:, :k] * w[None, :k]).sum(axis=1)
            pred = classify_estimate(S)
            errors[g, f] = np.sum(pred != truth)
        sizes[f] = va.size

    pooled = errors.sum(axis=1) / data.n
    per_fold = errors / sizes[None, :]
    se = per_fold.std(axis=1, ddof=1) / math.sqrt(folds)
    order = np.lexsort((np.asarray(grid, dtype=float), pooled))
    best = grid[int(order[0])]
    return TuneResult(family, grid, pooled, se, best, folds)
