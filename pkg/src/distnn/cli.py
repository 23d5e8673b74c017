"""Command-line entry point: ``distnn {simulate,tune,run,constants,report}``."""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import sys
from pathlib import Path

from .core import make_rng
from .experiment import (TUNE_HEADER, _write_csv, build_source, load_config, pilot_training_set,
                         run_experiment, write_report)
from .simgen import sample, simulation_spec
from .theory import figure1_table, write_constants_csv
from .tuning import cv_tune

log = logging.getLogger("distnn")


def _out_dir(args, label: str) -> Path:
    if args.out:
        return Path(args.out)
    stamp = _dt.datetime.now().strftime("%Y%m%d-%H%M%S")
    return Path("runs") / f"{label}-{stamp}"


def _manifest(out: Path, command: str, **extra) -> None:
    from . import __version__

    body = {"command": command, "distnn": __version__, **extra}
    (out / "manifest.json").write_text(json.dumps(body, indent=2, sort_keys=True, default=str) + "\n")


def cmd_simulate(args) -> int:
    spec = simulation_spec(args.simulation, args.d)
    data = sample(spec, args.N, make_rng(args.seed or 0, 0))
    out = _out_dir(args, "simulate")
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"sim{args.simulation}_d{args.d}_N{args.N}.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{j + 1}" for j in range(data.d)] + ["label"])
        for x, y in zip(data.X, data.y):
            w.writerow([repr(float(v)) for v in x] + [int(y)])
    _manifest(out, "simulate", seed=args.seed or 0, spec=spec.to_dict(), N=args.N)
    print(path)
    return 0


def cmd_tune(args) -> int:
    cfg = load_config(args.config, seed=args.seed, threads=args.threads)
    source, _ = build_source(cfg)
    pilot = pilot_training_set(cfg, source)
    out = _out_dir(args, "tune")
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for fam in args.family:
        res = cv_tune(pilot, fam, folds=cfg.folds, rng=make_rng(cfg.seed, 1, len(rows)))
        log.info("%s: selected %s", fam, res.selected)
        rows.extend(res.rows())
    _write_csv(out / "tune.csv", TUNE_HEADER, rows)
    _manifest(out, "tune", config=cfg.to_dict())
    print(out / "tune.csv")
    return 0


def cmd_run(args) -> int:
    cfg = load_config(args.config, seed=args.seed, threads=args.threads)
    out = _out_dir(args, "run")
    result = run_experiment(cfg, out)
    write_report(out)
    for m, g, e in result.failed:
        log.error("cell %s gamma=%g failed: %s", m, g, e)
    print(out)
    return 0 if result.ok else 1


def cmd_constants(args) -> int:
    out = _out_dir(args, "constants")
    out.mkdir(parents=True, exist_ok=True)
    path = out / "constants.csv"
    write_constants_csv(figure1_table(range(args.d_min, args.d_max + 1)), path)
    print(path)
    return 0


def cmd_report(args) -> int:
    path = write_report(args.run_dir)
    with open(path) as fh:
        sys.stdout.write(fh.read())
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="distnn", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
    common.add_argument("--threads", type=int, default=None, help="worker threads")
    common.add_argument("--out", type=str, default=None, help="output directory (default runs/<label>-<time>)")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="draw a simulation dataset to CSV")
    s.add_argument("--simulation", type=int, default=1, choices=(1, 2, 3))
    s.add_argument("--d", type=int, default=4)
    s.add_argument("--N", type=int, default=2700)
    s.set_defaults(func=cmd_simulate)

    t = sub.add_parser("tune", parents=[common], help="cross-validate oracle parameters")
    t.add_argument("--config", required=True)
    t.add_argument("--family", nargs="+", default=["knn", "ownn", "bnn"], choices=("knn", "ownn", "bnn"))
    t.set_defaults(func=cmd_tune)

    r = sub.add_parser("run", parents=[common], help="run an experiment grid")
    r.add_argument("--config", required=True)
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("constants", parents=[common], help="write the dimension constants table")
    c.add_argument("--d-min", type=int, default=1)
    c.add_argument("--d-max", type=int, default=30)
    c.set_defaults(func=cmd_constants)

    rep = sub.add_parser("report", help="summarise a finished run in the kNN-table format")
    rep.add_argument("run_dir")
    rep.add_argument("-v", "--verbose", action="store_true")
    rep.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
