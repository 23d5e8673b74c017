"""Shared data types, seeded random streams and the distance primitive."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class DataError(ValueError):
    """Raised when input rows cannot form a valid binary-labelled dataset."""


@dataclass(frozen=True)
class Dataset:
    """Feature matrix ``X`` (N x d) with binary labels ``y`` (length N)."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=np.float64)
        y = np.ascontiguousarray(self.y, dtype=np.int8)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise DataError(f"features must be a non-empty 2-D array, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise DataError(f"labels shape {y.shape} does not match {X.shape[0]} rows")
        if not np.all((y == 0) | (y == 1)):
            raise DataError("labels must be 0 or 1")
        if not np.all(np.isfinite(X)):
            raise DataError("features contain NaN or Inf")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.X[idx], self.y[idx])

    def __len__(self) -> int:
        return self.n


def validate_dataset(rows: Iterable[Sequence], labels: Iterable | None = None) -> Dataset:
    """Build a Dataset from raw rows, naming the offending row on failure.

    If ``labels`` is None the last entry of each row is taken as the label.
    """
    rows = list(rows)
    if not rows:
        raise DataError("no rows")
    if labels is None:
        labels = [r[-1] if len(r) else None for r in rows]
        rows = [r[:-1] for r in rows]
    labels = list(labels)
    if len(labels) != len(rows):
        raise DataError(f"{len(rows)} feature rows but {len(labels)} labels")

    width = len(rows[0])
    X = np.empty((len(rows), width), dtype=np.float64)
    y = np.empty(len(rows), dtype=np.int8)
    for i, (row, lab) in enumerate(zip(rows, labels)):
        if len(row) != width:
            raise DataError(f"row {i}: expected {width} features, got {len(row)}")
        try:
            vals = [float(v) for v in row]
        except (TypeError, ValueError) as exc:
            raise DataError(f"row {i}: non-numeric feature ({exc})") from None
        if not all(math.isfinite(v) for v in vals):
            raise DataError(f"row {i}: non-finite feature value")
        try:
            lab_f = float(lab)
        except (TypeError, ValueError):
            raise DataError(f"row {i}: label {lab!r} is not 0 or 1") from None
        if lab_f not in (0.0, 1.0):
            raise DataError(f"row {i}: label {lab!r} is not 0 or 1")
        X[i] = vals
        y[i] = int(lab_f)
    if width < 1:
        raise DataError("rows have no features")
    return Dataset(X, y)


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Independent generator for the substream addressed by ``stream``.

    Streams are derived from (seed, stream) alone, so the draw order of other
    streams never affects this one.
    """
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class SeededRng:
    """A (seed, stream-id) address for a reproducible random substream."""

    seed: int
    stream: tuple = ()

    def child(self, *key: int) -> "SeededRng":
        return SeededRng(self.seed, self.stream + tuple(int(k) for k in key))

    def generator(self) -> np.random.Generator:
        return make_rng(self.seed, *self.stream)


def squared_distances(Q: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between every row of ``Q`` and every row of ``X``.

    Accumulated coordinate by coordinate in a fixed order, so a given pair
    always yields the same float no matter how it is batched.
    """
    Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if Q.shape[1] != X.shape[1]:
        raise ValueError(f"dimension mismatch: {Q.shape[1]} vs {X.shape[1]}")
    out = np.zeros((Q.shape[0], X.shape[0]))
    for j in range(Q.shape[1]):
        diff = Q[:, j, None] - X[None, :, j]
        out += diff * diff
    return out


def squared_distance(a, b) -> float:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    return float(squared_distances(a[None, :], b[None, :])[0, 0])


def safe_ceil(x: float, rel: float = 1e-9) -> int:
    """Ceiling that ignores float noise just above an integer (1024**0.7 -> 128)."""
    r = round(x)
    if abs(x - r) <= rel * max(1.0, abs(x)):
        return int(r)
    return math.ceil(x)
