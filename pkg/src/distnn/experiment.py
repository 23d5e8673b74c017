"""Config-driven experiment grids: data source x method x partition exponent."""

from __future__ import annotations

import configparser
import csv
import json
import logging
import math
import platform
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .core import DataError, Dataset, make_rng
from .evaluation import EvalReport, FixedDataSource, MethodSpec, SimulationSource, run_replicated
from .methods import ALL_METHODS, ORACLE_METHODS, OracleParams, local_parameter, make_procedure
from .simgen import simulation_spec
from .tuning import cv_tune

log = logging.getLogger(__name__)

TUNE_STREAM = 0x7475_6E65  # substream reserved for the pilot draw used in tuning

RISK_HEADER = ["method", "gamma", "s", "n", "local_param", "N", "d", "replications",
               "risk", "risk_se", "bayes_risk", "regret", "dropped"]
TIME_HEADER = ["method", "gamma", "s", "fit_time", "predict_time", "predict_time_per_query", "total_time",
               "parallel_fit_time", "parallel_predict_time", "parallel_predict_time_per_query",
               "parallel_total_time"]
CIS_HEADER = ["method", "gamma", "s", "replications", "cis", "cis_se", "risk", "risk_se"]
TUNE_HEADER = ["family", "param", "cv_risk", "cv_se", "selected"]


# -- data ingestion --------------------------------------------------------

def load_csv(path, label_column, positive_label: str | None = None) -> Dataset:
    """Read a numeric CSV with a header row.

    ``label_column`` is a column name or a 0-based position. Labels must be
    0/1 unless ``positive_label`` names the value mapped to 1; any other
    single value is then mapped to 0, and a third distinct value is an error.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise DataError(f"{path}: need a header row and at least one data row")
    header = [h.strip() for h in rows[0]]
    if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
        if label_column not in header:
            raise DataError(f"{path}: no column named {label_column!r}")
        lab = header.index(label_column)
    else:
        lab = int(label_column) % len(header)
    feats = [j for j in range(len(header)) if j != lab]

    raw_labels = [r[lab].strip() if lab < len(r) else "" for r in rows[1:]]
    distinct = sorted(set(raw_labels))
    if positive_label is None:
        try:
            numeric = {float(v) for v in distinct}
        except ValueError:
            numeric = None
        if numeric is None or not numeric <= {0.0, 1.0}:
            raise DataError(f"{path}: label column has values {distinct[:5]}; declare positive_label")
        y = np.array([int(float(v)) for v in raw_labels], dtype=np.int8)
    else:
        if len(distinct) > 2:
            raise DataError(f"{path}: label column has {len(distinct)} distinct values, need 2")
        y = np.array([1 if v == str(positive_label) else 0 for v in raw_labels], dtype=np.int8)

    X = np.empty((len(rows) - 1, len(feats)))
    for i, r in enumerate(rows[1:]):
        if len(r) != len(header):
            raise DataError(f"{path}: row {i + 1} has {len(r)} cells, header has {len(header)}")
        for jj, j in enumerate(feats):
            try:
                X[i, jj] = float(r[j])
            except ValueError:
                raise DataError(f"{path}: row {i + 1}, column {header[j]!r}: cannot parse {r[j]!r}") from None
            if not math.isfinite(X[i, jj]):
                raise DataError(f"{path}: row {i + 1}, column {header[j]!r}: non-finite value")
    return Dataset(X, y)


def standardize(train: Dataset, *others: Dataset):
    """Scale every column to mean 0 / variance 1 using training statistics only."""
    mu = train.X.mean(axis=0)
    sd = train.X.std(axis=0)
    sd[sd == 0] = 1.0
    out = [Dataset((train.X - mu) / sd, train.y)]
    out += [None if o is None else Dataset((o.X - mu) / sd, o.y) for o in others]
    return tuple(out)


def default_test_size(N: int) -> int:
    return min(1000, N // 5)


def split_test(data: Dataset, rng: np.random.Generator, test_size: int | None = None):
    """Uniform train/test split; the test part has min(1000, floor(N/5)) points by default."""
    if data.n < 2:
        raise DataError("need at least two points to split")
    t = default_test_size(data.n) if test_size is None else int(test_size)
    if t == 0:
        return data, None
    if not 1 <= t < data.n:
        raise DataError(f"test size {t} out of range for N={data.n}")
    perm = rng.permutation(data.n)
    return data.subset(np.sort(perm[t:])), data.subset(np.sort(perm[:t]))


@dataclass(frozen=True)
class StandardizedSource(FixedDataSource):
    def _split(self, rng):
        train, test = split_test(self.data, rng, self.test_size)
        return standardize(train, test)


# -- config ----------------------------------------------------------------

@dataclass
class ExperimentConfig:
    seed: int
    methods: list = field(default_factory=lambda: ["oracle-kNN", "M-DNN(k)", "W-DNN(k)"])
    gammas: list = field(default_factory=lambda: [round(0.1 * i, 1) for i in range(9)])
    replications: int = 100
    source: str = "simulation"
    simulation: int = 1
    d: int = 4
    N: int = 2700
    test_size: int | None = None
    csv_path: str | None = None
    label_column: str = "-1"
    positive_label: str | None = None
    standardize: bool = False
    K: str = "auto"
    m: str = "cv"
    q: str = "cv"
    folds: int = 5
    cis: bool = False
    threads: int = 1

    def __post_init__(self):
        if not self.methods:
            raise ValueError("methods must be nonempty")
        for m in self.methods:
            if m not in ALL_METHODS:
                raise ValueError(f"unknown method {m!r}; choose from {', '.join(ALL_METHODS)}")
        for g in self.gammas:
            if not 0.0 <= g <= 1.0:
                raise ValueError(f"gamma {g} outside [0, 1]")
        if self.source not in ("simulation", "csv"):
            raise ValueError(f"source must be 'simulation' or 'csv', got {self.source!r}")
        if self.source == "csv" and not self.csv_path:
            raise ValueError("csv source needs csv_path")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


def _parse_value(f, raw: str):
    raw = raw.strip()
    if f.name in ("methods",):
        return [v.strip() for v in raw.split(",") if v.strip()]
    if f.name == "gammas":
        return [float(v) for v in raw.split(",") if v.strip()]
    if f.name in ("standardize", "cis"):
        return raw.lower() in ("1", "true", "yes", "on")
    if f.name == "test_size":
        return None if raw.lower() in ("", "auto", "none") else int(raw)
    if f.name in ("seed", "replications", "simulation", "d", "N", "folds", "threads"):
        return int(raw, 0)
    return raw


def load_config(path, **overrides) -> ExperimentConfig:
    """Read a flat ``key = value`` file (an optional ``[experiment]`` header is allowed)."""
    text = Path(path).read_text()
    if not text.lstrip().startswith("["):
        text = "[experiment]\n" + text
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    cp.read_string(text)
    section = cp["experiment"]
    known = {f.name: f for f in fields(ExperimentConfig)}
    kwargs = {}
    for key, raw in section.items():
        if key not in known:
            raise ValueError(f"unknown config key {key!r}")
        kwargs[key] = _parse_value(known[key], raw)
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    if "seed" not in kwargs:
        raise ValueError("config must set a seed")
    return ExperimentConfig(**kwargs)


# -- running ---------------------------------------------------------------

def build_source(cfg: ExperimentConfig):
    if cfg.source == "simulation":
        spec = simulation_spec(cfg.simulation, cfg.d)
        n_test = 1000 if cfg.test_size is None else cfg.test_size
        return SimulationSource(spec, cfg.N, n_test), spec
    data = load_csv(cfg.csv_path, cfg.label_column, cfg.positive_label)
    cls = StandardizedSource if cfg.standardize else FixedDataSource
    return cls(data, cfg.test_size), None


def pilot_training_set(cfg: ExperimentConfig, source) -> Dataset:
    train, _ = source.draw(make_rng(cfg.seed, TUNE_STREAM))
    return train


def resolve_oracle_params(cfg: ExperimentConfig, source) -> tuple[OracleParams, list]:
    """Fixed, default or cross-validated oracle K, m and q for the methods in play."""
    needs = {
        "K": any(m in ("oracle-kNN", "M-DNN(k)", "W-DNN(k)") for m in cfg.methods),
        "m": any("OWNN" in m for m in cfg.methods),
        "q": "oracle-BNN" in cfg.methods,
    }
    tuned = []
    pilot = None
    values = {}
    for key, family in (("K", "knn"), ("m", "ownn"), ("q", "bnn")):
        raw = str(getattr(cfg, key)).strip().lower()
        if not needs[key] or raw == "auto":
            values[key] = None
        elif raw == "cv":
            if pilot is None:
                pilot = pilot_training_set(cfg, source)
            res = cv_tune(pilot, family, folds=cfg.folds, rng=make_rng(cfg.seed, TUNE_STREAM, 1))
            log.info("tuned %s: %s (cv risk %.4f)", key, res.selected, res.cv_risk.min())
            values[key] = res.selected
            tuned.append(res)
        else:
            values[key] = float(raw) if key == "q" else int(raw)
    return OracleParams(**values), tuned


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for r in rows:
            writer.writerow([_fmt(r.get(h)) for h in header])


@dataclass
class ExperimentResult:
    reports: list          # one EvalReport-like dict per (method, gamma) cell
    failed: list           # (method, gamma, message)
    params: OracleParams
    tuned: list
    out_dir: Path | None = None

    @property
    def ok(self) -> bool:
        return not self.failed


def cell_name(method: str, gamma: float) -> str:
    return method if method in ORACLE_METHODS else f"{method}@{gamma:g}"


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> ExperimentResult:
    source, spec = build_source(cfg)
    params, tuned = resolve_oracle_params(cfg, source)

    pilot_N = cfg.N if cfg.source == "simulation" else source.data.n - (
        default_test_size(source.data.n) if cfg.test_size is None else cfg.test_size)
    specs, failed, seen = [], [], set()
    for method in cfg.methods:
        for g in cfg.gammas:
            name = cell_name(method, g)
            if name in seen:
                continue
            try:
                local_parameter(method, pilot_N, source_d(cfg, source), g, params)
            except Exception as exc:  # a bad cell must not sink the others
                log.error("cell %s failed: %s", name, exc)
                failed.append((method, g, str(exc)))
                continue
            seen.add(name)
            specs.append(MethodSpec(name, make_procedure(method, g, params), g))

    reports = run_replicated(specs, source, cfg.replications, cfg.seed, with_cis=cfg.cis,
                             bayes_spec=spec, threads=cfg.threads) if specs else {}

    rows = []
    for method in cfg.methods:
        for g in cfg.gammas:
            rep = reports.get(cell_name(method, g))
            if rep is None:
                continue
            if rep.error:
                failed.append((method, g, rep.error))
                log.error("cell %s@%g failed: %s", method, g, rep.error)
                continue
            row = rep.row()
            row["method"], row["gamma"] = method, g
            row["local_param"] = local_parameter(method, rep.N, rep.d, g, params)[1]
            row["total_time"] = rep.fit_time + rep.predict_time
            row["parallel_total_time"] = rep.parallel_fit_time + rep.parallel_predict_time
            rows.append(row)
    if "bayes" in reports:
        b = reports["bayes"].row()
        for g in cfg.gammas:
            rows.append({**b, "method": "bayes", "gamma": g})

    result = ExperimentResult(rows, failed, params, tuned)
    if out_dir is not None:
        write_outputs(cfg, result, Path(out_dir))
    return result


def source_d(cfg, source) -> int:
    return cfg.d if cfg.source == "simulation" else source.data.d


def write_outputs(cfg: ExperimentConfig, result: ExperimentResult, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    rows = result.reports
    _write_csv(out / "risk_vs_gamma.csv", RISK_HEADER, rows)
    _write_csv(out / "time_vs_gamma.csv", TIME_HEADER, [r for r in rows if r["method"] != "bayes"])
    _write_csv(out / "cis_table.csv", CIS_HEADER,
               [r for r in rows if r.get("cis") is not None])
    tune_rows = [r for t in result.tuned for r in t.rows()]
    _write_csv(out / "tune.csv", TUNE_HEADER, tune_rows)
    manifest = {
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "oracle_params": asdict(result.params),
        "failed_cells": [{"method": m, "gamma": g, "error": e} for m, g, e in result.failed],
        "versions": {"distnn": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": _scipy_version()},
        "schemas": {"risk_vs_gamma.csv": RISK_HEADER, "time_vs_gamma.csv": TIME_HEADER,
                    "cis_table.csv": CIS_HEADER, "tune.csv": TUNE_HEADER},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    result.out_dir = out


def _scipy_version() -> str:
    import scipy

    return scipy.__version__


# -- reporting -------------------------------------------------------------

def read_csv_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def table1_rows(risk_rows, time_rows) -> list[dict]:
    """Per-gamma risks of the kNN family plus the speedup factor.

    Speedup is the oracle kNN time divided by the slower of M-DNN(k) and
    W-DNN(k), each measured as fit plus predict wall time along the critical
    path (shards counted as parallel machines). ``sequential_speedup`` uses
    single-process totals instead.
    """
    risk = {(r["method"], float(r["gamma"])): float(r["risk"]) for r in risk_rows}
    tt = {(r["method"], float(r["gamma"])): float(r["parallel_total_time"]) for r in time_rows}
    st = {(r["method"], float(r["gamma"])): float(r["total_time"]) for r in time_rows}
    out = []
    for g in sorted({float(r["gamma"]) for r in risk_rows}):
        row = {"gamma": g}
        for m in ("M-DNN(k)", "W-DNN(k)", "oracle-kNN", "oracle-OWNN"):
            row[m] = risk.get((m, g))
        try:
            row["speedup"] = tt[("oracle-kNN", g)] / max(tt[("M-DNN(k)", g)], tt[("W-DNN(k)", g)])
            row["sequential_speedup"] = st[("oracle-kNN", g)] / max(st[("M-DNN(k)", g)], st[("W-DNN(k)", g)])
        except KeyError:
            row["speedup"] = row["sequential_speedup"] = None
        out.append(row)
    return out


TABLE1_HEADER = ["gamma", "M-DNN(k)", "W-DNN(k)", "oracle-kNN", "oracle-OWNN", "speedup",
                 "sequential_speedup"]


def write_report(run_dir) -> Path:
    run_dir = Path(run_dir)
    rows = table1_rows(read_csv_rows(run_dir / "risk_vs_gamma.csv"),
                       read_csv_rows(run_dir / "time_vs_gamma.csv"))
    path = run_dir / "table1.csv"
    _write_csv(path, TABLE1_HEADER, rows)
    return path
