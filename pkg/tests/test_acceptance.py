"""Acceptance criteria 1-11 plus the public-dataset CSV smoke run.

Each test prints exactly one PASS/FAIL line (also collected and repeated in
the pytest terminal summary). The statistical criteria use R = 200
replications of Simulation 1 at N = 2700; sigma for a comparison of two
means is the combined standard error sqrt(se_a^2 + se_b^2) of the
replication averages.

Run standalone with ``python tests/test_acceptance.py`` or through pytest.
"""

import csv
import functools
import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))
from conftest import ACCEPTANCE_LINES, random_dataset  # noqa: E402

from distnn.core import Dataset, make_rng  # noqa: E402
from distnn.ensemble import Mode, fit_dnn, fit_oracle_wnn  # noqa: E402
from distnn.evaluation import SimulationSource, empirical_cis  # noqa: E402
from distnn.experiment import ExperimentConfig, run_experiment, table1_rows  # noqa: E402
from distnn.neighbors import NeighborIndex, brute_knn  # noqa: E402
from distnn.simgen import simulation_spec  # noqa: E402
from distnn.theory import figure1_table, q_double_prime, q_majority, q_prime  # noqa: E402
from distnn.weights import (alpha, bnn_weights, bridge_k_majority, bridge_k_weighted,  # noqa: E402
                            ownn_weights, uniform_k_weights)

R = 200
N = 2700
D = 4
SEED = 20240611

pytestmark = pytest.mark.slow


def verdict(label: str, ok: bool, detail: str) -> bool:
    line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok


def sigma(*se):
    return math.sqrt(sum(s * s for s in se))


# -- shared experiment runs ------------------------------------------------

def _config(**kw):
    base = dict(seed=SEED, source="simulation", simulation=1, d=D, N=N, test_size=1000,
                replications=R, K="auto", m="cv", q="cv", folds=5)
    base.update(kw)
    return ExperimentConfig(**base)


def _cells(result):
    return {(r["method"], r["gamma"]): r for r in result.reports}


@functools.lru_cache(maxsize=None)
def knn_run():
    cfg = _config(methods=["oracle-kNN", "M-DNN(k)", "W-DNN(k)"], gammas=[0.0, 0.1, 0.2, 0.3])
    return run_experiment(cfg)


@functools.lru_cache(maxsize=None)
def ownn_run():
    cfg = _config(methods=["M-DNN-OWNN", "W-DNN-OWNN"], gammas=[0.1, 0.4, 0.5])
    return run_experiment(cfg)


@functools.lru_cache(maxsize=None)
def cis_run():
    cfg = _config(methods=["W-DNN-OWNN", "oracle-BNN", "M-DNN-OWNN"], gammas=[0.2], cis=True)
    return run_experiment(cfg)


@functools.lru_cache(maxsize=None)
def other_sim_run(sim):
    cfg = _config(simulation=sim, methods=["oracle-kNN", "M-DNN(k)", "W-DNN(k)"], gammas=[0.1, 0.3])
    return run_experiment(cfg)


# -- property criteria -----------------------------------------------------

def naive_wnn_label(X, y, w, x):
    order = sorted(range(len(X)), key=lambda i: (float(np.sum((X[i] - x) ** 2)), i))
    return int(sum(w[r] * y[i] for r, i in enumerate(order)) >= 0.5 - 1e-12)


def test_c01_s1_degeneracy():
    rng = np.random.default_rng(1)
    mismatches = 0
    for inst in range(200):
        n = int(rng.integers(1, 120))
        d = int(rng.integers(1, 6))
        data = random_dataset(rng, n, d, grid=2 if inst % 3 == 0 else None)
        k = int(rng.integers(1, n + 1))
        w = [uniform_k_weights(n, k), ownn_weights(n, k, d),
             bnn_weights(n, float(rng.uniform(0.005, 0.99)))][inst % 3]
        Q = rng.standard_normal((10, d))
        if inst % 3 == 0:
            Q = np.round(Q * 2) / 2
        oracle = fit_oracle_wnn(data, w)(Q)
        naive = [naive_wnn_label(data.X, data.y, w, q) for q in Q]
        for mode in Mode:
            pred = fit_dnn(data, 1, w, mode, rng)(Q)
            mismatches += int(np.sum(pred != oracle))
        mismatches += int(np.sum(oracle != naive))
    assert verdict("C1 s=1 degeneracy", mismatches == 0,
                   f"200 instances, {mismatches} pointwise mismatches (M-DNN, W-DNN vs oracle WNN vs sort oracle)")


def test_c02_tree_equals_brute():
    rng = np.random.default_rng(2)
    bad = 0
    for inst in range(1200):
        n = int(rng.integers(1, 501))
        d = int(rng.integers(1, 11))
        grid = [None, 1, 3][inst % 3]
        data = random_dataset(rng, n, d, grid=grid)
        Q = rng.standard_normal((4, d))
        if grid:
            Q = np.round(Q * grid) / grid
        m = int(rng.integers(1, n + 1))
        ti, td = NeighborIndex(data.X, method="tree").query(Q, m)
        bi, bd = brute_knn(data.X, Q, m)
        if not (np.array_equal(ti, bi) and np.array_equal(td, bd)):
            bad += 1
    assert verdict("C2 tree == brute force", bad == 0, f"1200 instances (N<=500, d<=10, 1/3 tie-heavy), {bad} differ")


def test_c03_weight_invariants():
    rng = np.random.default_rng(3)
    worst_sum, violations = 0.0, 0
    for _ in range(2000):
        n = int(rng.integers(1, 5000))
        d = int(rng.integers(1, 13))
        for w in (uniform_k_weights(n, int(rng.integers(1, n + 1))),
                  ownn_weights(n, int(rng.integers(1, n + 1)), d),
                  bnn_weights(n, float(10 ** rng.uniform(-6, -1e-3)))):
            worst_sum = max(worst_sum, abs(math.fsum(w) - 1))
            violations += int(np.any(w < 0)) + int(np.any(np.diff(w) > 0))
    i = np.arange(1, 10**6 + 1, dtype=np.float64)
    bound_bad, tele_err = 0, 0.0
    for d in range(1, 13):
        a = alpha(i, d)
        c = 1 + 2 / d
        bound_bad += int(np.sum(a < c * (i - 1) ** (2 / d) * (1 - 1e-9)))
        bound_bad += int(np.sum(a > c * i ** (2 / d) * (1 + 1e-9)))
        cs = np.cumsum(a)
        for k in (1, 10, 999, 54321, 10**6):
            tele_err = max(tele_err, abs(cs[k - 1] - k**c) / k**c)
    ok = worst_sum <= 1e-12 and violations == 0 and bound_bad == 0 and tele_err <= 1e-9
    assert verdict("C3 weight invariants", ok,
                   f"max |sum-1|={worst_sum:.1e}, sign/monotone violations={violations}, "
                   f"alpha-bound violations={bound_bad} (i<=1e6, d<=12), telescoping rel err={tele_err:.1e}")


def test_c04_constants():
    rows = figure1_table(range(1, 201))
    big = figure1_table([10**5])[0]
    q4, qp4 = q_majority(4), q_prime(4)
    ok = abs(q4 - 1.25331) <= 1e-4 and abs(qp4 - 1.089) <= 1e-3
    ok &= all(r.Q > 1 and r.Q_prime > 1 and r.Q_double_prime > 1 and r.Q_over_Qpp > 1 for r in rows)
    ok &= all(abs(v - 1) < 1e-3 for v in (big.Q, big.Q_prime, big.Q_double_prime, big.Q_over_Qpp))
    ok &= all(a.Q > b.Q for a, b in zip(rows, rows[1:]))
    ok &= all(r.cis_ratio_majority == math.sqrt(r.Q_over_Qpp) and r.cis_ratio_weighted == math.sqrt(r.inv_Qpp)
              for r in rows)
    assert verdict("C4 constants", ok,
                   f"Q(4)={q4:.6f}, Q'(4)={qp4:.6f}, Q''(4)={q_double_prime(4):.6f}, all >1 for d<=200, "
                   f"|.-1|<1e-3 at d=1e5, CIS ratio = sqrt(regret ratio) exactly")


def test_c05_bridging():
    bad = 0
    for K in list(range(1, 60)) + [100, 253, 1000, 27000, 10**6]:
        for s in (1, 2, 3, 7, 8, 27, 100, 1000, 10**5):
            for d in (1, 2, 4, 8, 30, 1000):
                km, kw = bridge_k_majority(K, s, d), bridge_k_weighted(K, s)
                bad += int(km < kw) + int(km < 1) + int(kw < 1)
    trunc = bridge_k_majority(2, 1000, 4) == 1 and bridge_k_weighted(3, 10) == 1
    assert verdict("C5 bridging", bad == 0 and trunc,
                   f"majority >= weighted >= 1 on the grid ({bad} violations); truncation at 1 honored: {trunc}")


def test_c06_cis_estimator():
    spec = simulation_spec(1, 2)
    src = SimulationSource(spec, 30, 500)

    def const(_t, _r):
        return lambda Q: np.ones(len(Q), dtype=np.int8)

    flips = iter(range(10**6))

    def opposite(_t, _r):
        v = next(flips) % 2
        return lambda Q: np.full(len(Q), v, dtype=np.int8)

    def coin(_t, rng):
        return lambda Q: rng.integers(0, 2, len(Q))

    c0 = empirical_cis(const, src, R=20, seed=6).mean
    c1 = empirical_cis(opposite, src, R=20, seed=6).mean
    Rc = 50
    ch = empirical_cis(coin, src, R=Rc, seed=6).mean
    sig = 0.5 / math.sqrt(500 * Rc)
    ok = c0 == 0 and c1 == 1 and abs(ch - 0.5) <= 3 * sig
    assert verdict("C6 CIS estimator", ok,
                   f"constant={c0}, always-disagree={c1}, coin={ch:.4f} (0.5 +/- {3 * sig:.4f})")


# -- statistical criteria --------------------------------------------------

def test_c07_knn_overlap():
    cells = _cells(knn_run())
    parts, ok = [], True
    for g in (0.1, 0.2, 0.3):
        o, m, w = cells[("oracle-kNN", g)], cells[("M-DNN(k)", g)], cells[("W-DNN(k)", g)]
        gap_w = w["risk"] - o["risk"]
        gap_m = m["risk"] - o["risk"]
        sig = sigma(m["risk_se"], w["risk_se"])
        ok &= abs(gap_w) <= 0.01 and gap_m >= gap_w - 2 * sig
        parts.append(f"g={g}: W-oracle={gap_w:+.4f}, M-oracle={gap_m:+.4f} (2sigma={2 * sig:.4f})")
    assert verdict("C7 W-DNN(k) overlaps oracle kNN", ok, "; ".join(parts))


def test_c08_ownn_deviation():
    cells = _cells(ownn_run())
    m1, m5 = cells[("M-DNN-OWNN", 0.1)], cells[("M-DNN-OWNN", 0.5)]
    w1, w4 = cells[("W-DNN-OWNN", 0.1)], cells[("W-DNN-OWNN", 0.4)]
    sm, sw = sigma(m1["risk_se"], m5["risk_se"]), sigma(w1["risk_se"], w4["risk_se"])
    dm, dw = m5["risk"] - m1["risk"], w4["risk"] - w1["risk"]
    ok = dm >= 2 * sm and abs(dw) <= 2 * sw
    m_star = ownn_run().params.m
    assert verdict("C8 M-DNN-OWNN deviates, W-DNN-OWNN holds", ok,
                   f"m*={m_star}; M: risk(0.5)-risk(0.1)={dm:+.4f} vs 2sigma={2 * sm:.4f}; "
                   f"W: risk(0.4)-risk(0.1)={dw:+.4f} vs 2sigma={2 * sw:.4f}")


def test_c09_timing():
    res = knn_run()
    cells = _cells(res)
    parts, ok = [], True
    for meth in ("M-DNN(k)", "W-DNN(k)"):
        t0 = cells[(meth, 0.0)]["parallel_predict_time_per_query"]
        t3 = cells[(meth, 0.3)]["parallel_predict_time_per_query"]
        s0 = cells[(meth, 0.0)]["predict_time_per_query"]
        s3 = cells[(meth, 0.3)]["predict_time_per_query"]
        ok &= t3 < t0
        parts.append(f"{meth} per-query {t0 * 1e6:.1f}us -> {t3 * 1e6:.1f}us (sequential {s0 * 1e6:.1f} -> {s3 * 1e6:.1f})")
    rows = [r for r in res.reports if r["method"] != "bayes"]
    t1 = {r["gamma"]: r for r in table1_rows(rows, rows)}
    speed = t1[0.3]["speedup"]
    ok &= speed > 1
    parts.append(f"Table-1 speedup at g=0.3: {speed:.2f} (sequential {t1[0.3]['sequential_speedup']:.2f})")
    assert verdict("C9 distributed timing", ok, "; ".join(parts))


def test_c10_cis_ordering():
    cells = _cells(cis_run())
    w, b, m = (cells[(k, 0.2)] for k in ("W-DNN-OWNN", "oracle-BNN", "M-DNN-OWNN"))
    s1, s2 = sigma(w["cis_se"], b["cis_se"]), sigma(b["cis_se"], m["cis_se"])
    ok = b["cis"] - w["cis"] >= 2 * s1 and m["cis"] - b["cis"] >= 2 * s2
    p = cis_run().params
    assert verdict("C10 CIS ordering W < BNN < M", ok,
                   f"m*={p.m}, q*={p.q:.4g}; CIS W={w['cis']:.4f}, BNN={b['cis']:.4f}, M={m['cis']:.4f}; "
                   f"gaps {b['cis'] - w['cis']:+.4f} (2sigma={2 * s1:.4f}), {m['cis'] - b['cis']:+.4f} (2sigma={2 * s2:.4f})")


def test_c11_bayes_sanity():
    runs = [knn_run(), ownn_run(), cis_run(), other_sim_run(2), other_sim_run(3)]
    n_cells, bad, worst = 0, [], float("inf")
    for res in runs:
        rows = [r for r in res.reports if r["method"] != "bayes"]
        bayes = next(r for r in res.reports if r["method"] == "bayes")
        for r in rows:
            n_cells += 1
            sig = sigma(r["risk_se"], bayes["risk_se"])
            z = (r["risk"] - bayes["risk"]) / sig
            worst = min(worst, z)
            if z < -3:
                bad.append(f"{r['method']}@{r['gamma']}")
    assert verdict("C11 risk >= Bayes - 3sigma", not bad,
                   f"{n_cells} cells over simulations 1-3, min (risk-Bayes)/sigma={worst:.1f}"
                   + (f", violations: {bad}" if bad else ""))


def test_csv_smoke(tmp_path):
    from sklearn.datasets import load_breast_cancer

    X, y = load_breast_cancer(return_X_y=True)
    path = tmp_path / "breast_cancer.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"f{j}" for j in range(X.shape[1])] + ["diagnosis"])
        for row, lab in zip(X, y):
            w.writerow([repr(float(v)) for v in row] + [int(lab)])
    cfg = ExperimentConfig(seed=SEED, source="csv", csv_path=str(path), label_column="diagnosis",
                           standardize=True, methods=["oracle-kNN", "W-DNN(k)", "M-DNN(k)"],
                           gammas=[0.1], replications=R, K="auto")
    res = run_experiment(cfg, tmp_path / "run")
    cells = _cells(res)
    o, wd = cells[("oracle-kNN", 0.1)], cells[("W-DNN(k)", 0.1)]
    gap = wd["risk"] - o["risk"]
    assert verdict("CSV smoke (breast cancer)", res.ok and abs(gap) <= 0.02,
                   f"N={X.shape[0]}, d={X.shape[1]}, s={wd['s']}, risk W-DNN={wd['risk']:.4f}, "
                   f"oracle kNN={o['risk']:.4f}, gap={gap:+.4f} (tol 0.02), {R} random splits")


if __name__ == "__main__":
    import tempfile

    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                if name == "test_csv_smoke":
                    with tempfile.TemporaryDirectory() as tmp:
                        fn(Path(tmp))
                else:
                    fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
