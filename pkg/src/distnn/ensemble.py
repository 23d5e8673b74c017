"""Divide-and-conquer nearest-neighbour ensembles.

Training data is split at random into ``s`` equal shards. Every shard keeps
its own neighbour index and applies one shared local weight vector. A query
is answered by each shard independently; the shard outputs are combined
either by majority vote over local class labels or by thresholding the mean
of the local regression estimates.
"""

from __future__ import annotations

import enum
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import Dataset
from .neighbors import NeighborIndex
from .weights import effective_support

FORMAT_VERSION = 1
# absorbs float summation error so that an exact 1/2 resolves to class 1
TIE_EPS = 1e-12


class Mode(str, enum.Enum):
    MAJORITY = "majority"
    WEIGHTED = "weighted"


@dataclass(frozen=True)
class Partition:
    assignment: np.ndarray  # shard id per point, -1 for points left out
    s: int
    n: int

    def shard_indices(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == j)

    @property
    def dropped(self) -> int:
        return int(np.sum(self.assignment < 0))


def make_partition(N: int, s: int, rng: np.random.Generator) -> Partition:
    """Random split of N points into s shards of floor(N/s); the rest are left out."""
    if not 1 <= s <= N:
        raise ValueError(f"need 1 <= s <= N, got s={s}, N={N}")
    n = N // s
    perm = rng.permutation(N)
    assignment = np.full(N, -1, dtype=np.int64)
    assignment[perm[: s * n]] = np.repeat(np.arange(s), n)
    assignment.setflags(write=False)
    return Partition(assignment, s, n)


def n_shards(N: int, gamma: float) -> int:
    return int(min(N, max(1, round(N**gamma))))


class Shard:
    """One subsample: its points, labels and neighbour index."""

    def __init__(self, X: np.ndarray, y: np.ndarray, index_method: str = "auto"):
        self.X = np.ascontiguousarray(X, dtype=np.float64)
        self.y = np.ascontiguousarray(y, dtype=np.int8)
        self.index = NeighborIndex(self.X, method=index_method)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def regress(self, Q: np.ndarray, w: np.ndarray) -> np.ndarray:
        """Local regression estimates sum_i w_i Y_(i) for every query row."""
        k = effective_support(w)
        idx, _ = self.index.query(Q, k)
        labels = self.y[idx].astype(np.float64)
        return (labels * w[None, :k]).sum(axis=1)


def local_regress(shard: Shard, w: np.ndarray, x) -> float:
    if len(w) != shard.n:
        raise ValueError(f"weight length {len(w)} != shard size {shard.n}")
    return float(shard.regress(np.asarray(x, dtype=np.float64).reshape(1, -1), w)[0])


def classify_estimate(S):
    return (np.asarray(S) >= 0.5 - TIE_EPS).astype(np.int8)


def local_classify(shard: Shard, w: np.ndarray, x) -> int:
    return int(classify_estimate(local_regress(shard, w, x)))


def aggregate(S: np.ndarray, mode: Mode) -> np.ndarray:
    """Combine an (s x q) matrix of local estimates into q class labels."""
    S = np.atleast_2d(S)
    s = S.shape[0]
    if Mode(mode) is Mode.MAJORITY:
        votes = classify_estimate(S).sum(axis=0, dtype=np.int64)
        return (2 * votes >= s).astype(np.int8)
    # sorting first makes the sum independent of shard order
    total = np.sort(S, axis=0).sum(axis=0)
    return classify_estimate(total / s)


class DnnModel:
    """A fitted ensemble of ``s`` shards sharing one weight vector."""

    def __init__(self, shards: list[Shard], weights: np.ndarray, mode: Mode, dropped: int = 0):
        weights = np.asarray(weights, dtype=np.float64)
        for sh in shards:
            if sh.n != weights.size:
                raise ValueError(f"shard of size {sh.n} does not match weights of length {weights.size}")
        weights.setflags(write=False)
        self.shards = list(shards)
        self.weights = weights
        self.mode = Mode(mode)
        self.dropped = dropped
        self.fit_times: list[float] = []  # per-shard build seconds, filled by fit_dnn

    @property
    def s(self) -> int:
        return len(self.shards)

    @property
    def n(self) -> int:
        return self.weights.size

    @property
    def d(self) -> int:
        return self.shards[0].X.shape[1]

    def local_estimates(self, Q: np.ndarray, threads: int = 1, timings: dict | None = None) -> np.ndarray:
        Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
        if Q.shape[1] != self.d:
            raise ValueError(f"dimension mismatch: query has {Q.shape[1]}, model has {self.d}")
        if Q.shape[0] == 0:
            return np.empty((self.s, 0))

        def run(sh):
            t0 = time.perf_counter()
            out = sh.regress(Q, self.weights)
            return out, time.perf_counter() - t0

        if threads > 1 and self.s > 1:
            with ThreadPoolExecutor(threads) as ex:
                res = list(ex.map(run, self.shards))
        else:
            res = [run(sh) for sh in self.shards]
        if timings is not None:
            timings["shards"] = [t for _, t in res]
        return np.vstack([r for r, _ in res])

    def predict_batch(self, Q, threads: int = 1, timings: dict | None = None) -> np.ndarray:
        """Class labels for every query row.

        If ``timings`` is a dict it receives the per-shard seconds under
        "shards" and the combine step under "aggregate".
        """
        Q = np.asarray(Q, dtype=np.float64)
        if Q.size == 0:
            return np.empty(0, dtype=np.int8)
        S = self.local_estimates(Q, threads, timings)
        t0 = time.perf_counter()
        out = aggregate(S, self.mode)
        if timings is not None:
            timings["aggregate"] = time.perf_counter() - t0
        return out

    def predict(self, x) -> int:
        return int(self.predict_batch(np.asarray(x, dtype=np.float64).reshape(1, -1))[0])

    __call__ = predict_batch


def fit_dnn(data: Dataset, s: int, scheme, mode: Mode, rng: np.random.Generator,
            threads: int = 1, index_method: str = "auto") -> DnnModel:
    """Partition ``data`` into ``s`` shards and fit local WNN classifiers.

    ``scheme`` is anything with ``weights(n, d)`` (see :mod:`distnn.weights`)
    or a ready weight vector of length floor(N/s).
    """
    part = make_partition(data.n, s, rng)
    if hasattr(scheme, "weights"):
        w = scheme.weights(part.n, data.d)
    else:
        w = np.asarray(scheme, dtype=np.float64)

    def build(j):
        t0 = time.perf_counter()
        idx = part.shard_indices(j)
        sh = Shard(data.X[idx], data.y[idx], index_method)
        return sh, time.perf_counter() - t0

    if threads > 1 and s > 1:
        with ThreadPoolExecutor(threads) as ex:
            built = list(ex.map(build, range(s)))
    else:
        built = [build(j) for j in range(s)]
    model = DnnModel([b for b, _ in built], w, mode, dropped=part.dropped)
    model.fit_times = [t for _, t in built]
    return model


def fit_oracle_wnn(data: Dataset, w, index_method: str = "auto") -> DnnModel:
    """Single-machine WNN over all N points."""
    if hasattr(w, "weights"):
        w = w.weights(data.n, data.d)
    w = np.asarray(w, dtype=np.float64)
    if w.size != data.n:
        raise ValueError(f"weight length {w.size} != N = {data.n}")
    t0 = time.perf_counter()
    model = DnnModel([Shard(data.X, data.y, index_method)], w, Mode.WEIGHTED)
    model.fit_times = [time.perf_counter() - t0]
    return model


def save_model(model: DnnModel, path) -> None:
    arrays = {
        "format_version": np.array(FORMAT_VERSION),
        "mode": np.array(model.mode.value),
        "weights": model.weights,
        "dropped": np.array(model.dropped),
        "s": np.array(model.s),
    }
    for j, sh in enumerate(model.shards):
        arrays[f"X_{j}"] = sh.X
        arrays[f"y_{j}"] = sh.y
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_model(path, index_method: str = "auto") -> DnnModel:
    with np.load(path, allow_pickle=False) as z:
        version = int(z["format_version"])
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {version}")
        s = int(z["s"])
        shards = [Shard(z[f"X_{j}"], z[f"y_{j}"], index_method) for j in range(s)]
        return DnnModel(shards, z["weights"].copy(), Mode(str(z["mode"])), int(z["dropped"]))
