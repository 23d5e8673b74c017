"""Risk, regret and classification-instability estimation with replications."""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Protocol

import numpy as np

from .core import Dataset, make_rng
from .simgen import GaussianMixtureSpec, bayes_classify, sample


# procedure(train, rng) -> predictor; predictor(Q) -> labels
Predictor = Callable[[np.ndarray], np.ndarray]
Procedure = Callable[[Dataset, np.random.Generator], Predictor]


def empirical_risk(predictions, truth) -> float:
    p = np.asarray(predictions).ravel()
    t = np.asarray(truth).ravel()
    if p.shape != t.shape:
        raise ValueError(f"length mismatch: {p.size} vs {t.size}")
    if p.size == 0:
        raise ValueError("empty prediction vector")
    return float(np.mean(p != t))


def empirical_regret(risk: float, bayes_risk: float) -> float:
    # may be slightly negative from Monte Carlo noise; kept raw for unbiased averaging
    return float(risk) - float(bayes_risk)


def mean_se(values) -> tuple[float, float | None]:
    """Mean and standard error; the error is None for a single value."""
    v = np.asarray(values, dtype=np.float64)
    m = math.fsum(v) / v.size
    if v.size < 2:
        return m, None
    return m, float(np.std(v, ddof=1) / math.sqrt(v.size))


def disagreement(a, b) -> float:
    return empirical_risk(a, b)


# -- data sources ----------------------------------------------------------

class DataSource(Protocol):
    def draw(self, rng: np.random.Generator) -> tuple[Dataset, Dataset]: ...
    def pair(self, rng: np.random.Generator) -> tuple[Dataset, Dataset, Dataset]: ...


@dataclass(frozen=True)
class SimulationSource:
    """Fresh training and test draws from a known mixture."""

    spec: GaussianMixtureSpec
    n_train: int
    n_test: int = 1000

    def draw(self, rng):
        train = sample(self.spec, self.n_train, rng)
        test = sample(self.spec, self.n_test, rng)
        return train, test

    def pair(self, rng):
        d1, test = self.draw(rng)
        d2 = sample(self.spec, self.n_train, rng)
        return d1, d2, test


@dataclass(frozen=True)
class FixedDataSource:
    """Random train/test splits of one fixed dataset.

    Instability pairs are two disjoint random halves of the training part.
    """

    data: Dataset
    test_size: int | None = None

    def _split(self, rng):
        from .experiment import split_test

        return split_test(self.data, rng, self.test_size)

    def draw(self, rng):
        return self._split(rng)

    def pair(self, rng):
        train, test = self._split(rng)
        perm = rng.permutation(train.n)
        half = train.n // 2
        if half < 1:
            raise ValueError("not enough training data for two disjoint halves")
        return train.subset(np.sort(perm[:half])), train.subset(np.sort(perm[half:2 * half])), test


# -- instability -----------------------------------------------------------

@dataclass
class CisEstimate:
    mean: float
    stderr: float | None
    per_pair: np.ndarray


def empirical_cis(procedure: Procedure, source, test_X: np.ndarray | None = None,
                  R: int = 1, seed: int = 0) -> CisEstimate:
    """Average disagreement between classifiers fitted on two independent training sets.

    ``source`` is a :class:`SimulationSource`, :class:`FixedDataSource` or a
    bare Dataset (split into disjoint halves). When ``test_X`` is None the
    source's own test draw supplies the query points.
    """
    if R < 1:
        raise ValueError("R must be >= 1")
    if isinstance(source, Dataset):
        source = FixedDataSource(source, test_size=0)
    vals = np.empty(R)
    for r in range(R):
        rng = make_rng(seed, r)
        d1, d2, test = source.pair(rng)
        Q = test.X if test_X is None else np.atleast_2d(test_X)
        f1 = procedure(d1, make_rng(seed, r, 1))
        f2 = procedure(d2, make_rng(seed, r, 2))
        vals[r] = disagreement(f1(Q), f2(Q))
    m, se = mean_se(vals)
    return CisEstimate(m, se, vals)


# -- replicated evaluation -------------------------------------------------

@dataclass
class EvalReport:
    method: str
    gamma: float
    s: int
    n: int
    d: int
    N: int
    replications: int
    risk: float
    risk_se: float | None
    bayes_risk: float | None = None
    regret: float | None = None
    cis: float | None = None
    cis_se: float | None = None
    fit_time: float = 0.0
    predict_time: float = 0.0
    predict_time_per_query: float = 0.0
    parallel_fit_time: float = 0.0
    parallel_predict_time: float = 0.0
    parallel_predict_time_per_query: float = 0.0
    dropped: int = 0
    error: str | None = None
    risks: np.ndarray = field(default=None, repr=False)
    cis_values: np.ndarray = field(default=None, repr=False)

    def row(self) -> dict:
        out = asdict(self)
        out.pop("risks")
        out.pop("cis_values")
        return out


@dataclass(frozen=True)
class MethodSpec:
    """A named procedure plus the shard bookkeeping reported alongside it."""

    name: str
    procedure: Procedure
    gamma: float = 0.0


def _timed_fit_predict(procedure, train, Q, rng):
    """Fit and predict, returning sequential and critical-path timings.

    The critical path treats shards as separate machines: partitioning plus
    the slowest shard build, then the slowest shard query plus the combine
    step. Models that do not report shard timings count as one machine.
    """
    t0 = time.perf_counter()
    clf = procedure(train, rng)
    t1 = time.perf_counter()
    timings = {}
    if hasattr(clf, "predict_batch"):
        pred = clf.predict_batch(Q, timings=timings)
    else:
        pred = clf(Q)
    t2 = time.perf_counter()
    fit, predict = t1 - t0, t2 - t1
    shard_fit = getattr(clf, "fit_times", None) or [fit]
    par_fit = fit - sum(shard_fit) + max(shard_fit)
    if "shards" in timings:
        par_predict = predict - sum(timings["shards"]) + max(timings["shards"])
    else:
        par_predict = predict
    return clf, pred, (fit, predict, par_fit, par_predict)


def _one_replication(methods, source, seed, r, with_cis, bayes_spec):
    rng = make_rng(seed, r)
    if with_cis:
        train, train2, test = source.pair(rng)
    else:
        train, test = source.draw(rng)
        train2 = None
    out = {}
    bayes = None
    if bayes_spec is not None:
        bayes = empirical_risk(bayes_classify(bayes_spec, test.X), test.y)
    for m in methods:
        try:
            # keyed by gamma, so methods sharing a gamma share the partition
            key = int(round(m.gamma * 1_000_000))
            clf, pred, (tf, tp, ptf, ptp) = _timed_fit_predict(
                m.procedure, train, test.X, make_rng(seed, r, key, 1))
            rec = {"risk": empirical_risk(pred, test.y), "fit": tf, "predict": tp,
                   "pfit": ptf, "ppredict": ptp,
                   "s": getattr(clf, "s", 1), "n": getattr(clf, "n", train.n),
                   "dropped": getattr(clf, "dropped", 0), "N": train.n, "q": test.n}
            if with_cis:
                clf2 = m.procedure(train2, make_rng(seed, r, key, 2))
                rec["cis"] = disagreement(pred, clf2(test.X))
        except Exception as exc:  # reported per cell; other methods keep running
            rec = {"error": f"{type(exc).__name__}: {exc}"}
        out[m.name] = rec
    return out, bayes


def run_replicated(methods: list[MethodSpec], source, R: int, seed: int,
                   with_cis: bool = False, bayes_spec: GaussianMixtureSpec | None = None,
                   threads: int = 1) -> dict[str, EvalReport]:
    """R independent (train, predict, score) rounds shared by all methods.

    Every method sees the same training and test draw within a replication,
    and each replication has its own random substream, so the result does
    not depend on ``threads``.
    """
    if R < 1:
        raise ValueError("R must be >= 1")

    def job(r):
        return _one_replication(methods, source, seed, r, with_cis, bayes_spec)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            results = list(ex.map(job, range(R)))
    else:
        results = [job(r) for r in range(R)]

    bayes_vals = [b for _, b in results if b is not None]
    bayes_risk = mean_se(bayes_vals)[0] if bayes_vals else None
    reports = {}
    for m in methods:
        recs = [res[m.name] for res, _ in results]
        errors = [x["error"] for x in recs if "error" in x]
        if errors:
            reports[m.name] = EvalReport(m.name, m.gamma, 0, 0, source_dim(source), 0, R,
                                         float("nan"), None, error=errors[0])
            continue
        risks = np.array([x["risk"] for x in recs])
        risk, risk_se = mean_se(risks)
        rep = EvalReport(
            method=m.name, gamma=m.gamma, s=recs[0]["s"], n=recs[0]["n"],
            d=source_dim(source), N=recs[0]["N"], replications=R,
            risk=risk, risk_se=risk_se, bayes_risk=bayes_risk,
            regret=None if bayes_risk is None else empirical_regret(risk, bayes_risk),
            fit_time=float(np.mean([x["fit"] for x in recs])),
            predict_time=float(np.mean([x["predict"] for x in recs])),
            predict_time_per_query=float(np.mean([x["predict"] / x["q"] for x in recs])),
            parallel_fit_time=float(np.mean([x["pfit"] for x in recs])),
            parallel_predict_time=float(np.mean([x["ppredict"] for x in recs])),
            parallel_predict_time_per_query=float(np.mean([x["ppredict"] / x["q"] for x in recs])),
            dropped=recs[0]["dropped"], risks=risks,
        )
        if with_cis:
            cis = np.array([x["cis"] for x in recs])
            rep.cis, rep.cis_se = mean_se(cis)
            rep.cis_values = cis
        reports[m.name] = rep
    if bayes_vals:
        reports["bayes"] = EvalReport(
            method="bayes", gamma=0.0, s=1, n=0, d=source_dim(source), N=0, replications=R,
            risk=bayes_risk, risk_se=mean_se(bayes_vals)[1], bayes_risk=bayes_risk, regret=0.0,
            risks=np.asarray(bayes_vals))
    return reports


def source_dim(source) -> int:
    if isinstance(source, SimulationSource):
        return source.spec.d
    return source.data.d
