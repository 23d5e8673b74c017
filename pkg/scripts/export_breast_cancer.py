"""Write scikit-learn's breast cancer data to a CSV the experiment runner can read.

    python scripts/export_breast_cancer.py data/breast_cancer.csv
"""

import argparse
import csv
from pathlib import Path

from sklearn.datasets import load_breast_cancer


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out", nargs="?", default="data/breast_cancer.csv")
    args = ap.parse_args()
    X, y = load_breast_cancer(return_X_y=True)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"f{j}" for j in range(X.shape[1])] + ["diagnosis"])
        for row, lab in zip(X, y):
            w.writerow([repr(float(v)) for v in row] + [int(lab)])
    print(out)


if __name__ == "__main__":
    main()
