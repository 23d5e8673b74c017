"""Exact nearest-neighbour ordering with index tie-breaking.

Two backends share one contract: a brute-force scan and a k-d tree. Both
return the ``m`` closest training points sorted by (squared distance,
original index), so their outputs are identical element for element.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .core import Dataset, squared_distances

_CHUNK = 256
# relative gap below which the tree's m-th and (m+1)-th candidates count as tied
_TIE_REL = 1e-9


@dataclass(frozen=True)
class NeighborOrdering:
    indices: np.ndarray
    distances: np.ndarray  # squared Euclidean


def _check_m(m: int, n: int) -> int:
    m = int(m)
    if not 1 <= m <= n:
        raise ValueError(f"m must lie in [1, {n}], got {m}")
    return m


def _sort_rows(d2: np.ndarray, idx: np.ndarray):
    """Sort each row by (d2, idx)."""
    order = np.lexsort((idx, d2), axis=-1)
    return np.take_along_axis(idx, order, -1), np.take_along_axis(d2, order, -1)


def _gathered_sq(Q: np.ndarray, X: np.ndarray, idx: np.ndarray) -> np.ndarray:
    # same per-coordinate accumulation as core.squared_distances -> bitwise equal values
    out = np.zeros(idx.shape)
    for j in range(Q.shape[1]):
        diff = Q[:, j, None] - X[idx, j]
        out += diff * diff
    return out


def brute_knn(X: np.ndarray, Q: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Indices and squared distances of the ``m`` nearest rows of X for each query."""
    X = np.asarray(X, dtype=np.float64)
    Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
    n = X.shape[0]
    m = _check_m(m, n)
    if Q.shape[1] != X.shape[1]:
        raise ValueError(f"dimension mismatch: {Q.shape[1]} vs {X.shape[1]}")
    out_i = np.empty((Q.shape[0], m), dtype=np.intp)
    out_d = np.empty((Q.shape[0], m))
    for lo in range(0, Q.shape[0], _CHUNK):
        d2 = squared_distances(Q[lo:lo + _CHUNK], X)
        if m == n or m > n // 2:
            order = np.argsort(d2, axis=1, kind="stable")[:, :m]
            out_i[lo:lo + _CHUNK] = order
            out_d[lo:lo + _CHUNK] = np.take_along_axis(d2, order, 1)
            continue
        part = np.argpartition(d2, m - 1, axis=1)[:, :m]
        pd = np.take_along_axis(d2, part, 1)
        kth = pd.max(axis=1)
        # rows where the cut falls inside a tie need the full stable sort
        tied = (d2 <= kth[:, None]).sum(axis=1) != m
        idx, dd = _sort_rows(pd, part)
        if tied.any():
            rows = np.flatnonzero(tied)
            order = np.argsort(d2[rows], axis=1, kind="stable")[:, :m]
            idx[rows] = order
            dd[rows] = np.take_along_axis(d2[rows], order, 1)
        out_i[lo:lo + _CHUNK] = idx
        out_d[lo:lo + _CHUNK] = dd
    return out_i, out_d


class NeighborIndex:
    """Exact neighbour search over a fixed point set.

    ``method`` selects the backend: "tree", "brute" or "auto" (tree for small
    ``m``, brute scan when most of the set is requested anyway).
    """

    def __init__(self, X: np.ndarray, method: str = "auto"):
        if method not in ("auto", "tree", "brute"):
            raise ValueError(f"unknown method {method!r}")
        self.X = np.ascontiguousarray(X, dtype=np.float64)
        self.method = method
        self._tree = None
        if method != "brute":
            self._tree = cKDTree(self.X, balanced_tree=False, compact_nodes=False)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def query(self, Q: np.ndarray, m: int, method: str | None = None) -> tuple[np.ndarray, np.ndarray]:
        Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
        m = _check_m(m, self.n)
        if Q.shape[1] != self.X.shape[1]:
            raise ValueError(f"dimension mismatch: {Q.shape[1]} vs {self.X.shape[1]}")
        if Q.shape[0] == 0:
            return np.empty((0, m), dtype=np.intp), np.empty((0, m))
        method = method or self.method
        if method == "tree" and self._tree is None:
            self._tree = cKDTree(self.X, balanced_tree=False, compact_nodes=False)
        use_tree = method == "tree" or (method == "auto" and 4 * m <= self.n)
        if not use_tree:
            return brute_knn(self.X, Q, m)
        return self._tree_query(Q, m)

    def _tree_query(self, Q, m):
        n = self.n
        kq = min(m + 1, n)
        _, cand = self._tree.query(Q, k=kq)
        cand = np.asarray(cand, dtype=np.intp).reshape(Q.shape[0], kq)
        d2 = _gathered_sq(Q, self.X, cand)
        idx, dd = _sort_rows(d2, cand)
        if kq > m:
            gap = dd[:, m] - dd[:, m - 1]
            tied = gap <= _TIE_REL * np.maximum(dd[:, m], 1e-300)
            idx, dd = idx[:, :m].copy(), dd[:, :m].copy()
            if tied.any():
                rows = np.flatnonzero(tied)
                bi, bd = brute_knn(self.X, Q[rows], m)
                idx[rows] = bi
                dd[rows] = bd
        return idx, dd


def order_neighbors(data: Dataset, x, m: int) -> NeighborOrdering:
    """The ``m`` nearest training points to ``x`` by brute-force scan."""
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    idx, d2 = brute_knn(data.X, x, m)
    return NeighborOrdering(idx[0], d2[0])


def order_neighbors_tree(data: Dataset, x, m: int, index: NeighborIndex | None = None) -> NeighborOrdering:
    """Same result as :func:`order_neighbors`, found through a k-d tree."""
    if index is None:
        index = NeighborIndex(data.X, method="tree")
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    idx, d2 = index.query(x, m, method="tree")
    return NeighborOrdering(idx[0], d2[0])
