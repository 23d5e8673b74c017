"""Run the bundled experiment configs end to end.

    python scripts/reproduce.py                # full configs (slow at N=27000)
    python scripts/reproduce.py --quick        # N=2700, 20 replications

Each config writes its CSVs, manifest and table1.csv under <out>/<config name>.
"""

import argparse
import logging
from dataclasses import replace
from pathlib import Path

from distnn.experiment import load_config, run_experiment, write_report
from distnn.theory import figure1_table, write_constants_csv

HERE = Path(__file__).parent
CONFIGS = ["sim1_knn", "sim1_ownn", "sim1_cis"]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/reproduce")
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--only", nargs="*", choices=CONFIGS)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_constants_csv(figure1_table(range(1, 31)), out / "constants.csv")

    for name in args.only or CONFIGS:
        cfg = load_config(HERE / "configs" / f"{name}.ini", threads=args.threads)
        if args.quick:
            cfg = replace(cfg, N=min(cfg.N, 2700), replications=min(cfg.replications, 20))
        res = run_experiment(cfg, out / name)
        write_report(out / name)
        status = "ok" if res.ok else f"{len(res.failed)} failed cells"
        print(f"{name}: {status} -> {out / name}")


if __name__ == "__main__":
    main()
