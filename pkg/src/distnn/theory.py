"""Dimension-only constants that govern regret and instability ratios.

``q_majority``      regret inflation of majority voting over the oracle.
``q_prime``         extra factor paid by distributed kNN against optimal weights.
``q_double_prime``  bagged-1NN regret relative to optimal weights.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass

from scipy.special import gammaln


def q_majority(d: float) -> float:
    return (math.pi / 2.0) ** (4.0 / (d + 4.0))


def q_prime(d: float) -> float:
    return 2.0 ** (-4.0 / (d + 4.0)) * ((d + 4.0) / (d + 2.0)) ** ((2.0 * d + 4.0) / (d + 4.0))


def q_double_prime(d: float) -> float:
    log_q = (-8.0 / (d + 4.0) * math.log(2.0)
             + 2.0 * d / (d + 4.0) * float(gammaln(2.0 + 2.0 / d))
             + (2.0 * d + 4.0) / (d + 4.0) * math.log((d + 4.0) / (d + 2.0)))
    return math.exp(log_q)


def s_star(N: float, d: float) -> float:
    """Order of the largest shard count at which majority voting keeps the oracle rate."""
    return N ** (2.0 / (d + 4.0))


def s_dagger(N: float, d: float) -> float:
    """Same bound for weighted voting; always at least :func:`s_star`."""
    return N ** (4.0 / (d + 4.0))


def gamma_bound_majority(d: float) -> float:
    return 2.0 / (d + 4.0)


def gamma_bound_weighted(d: float) -> float:
    return 4.0 / (d + 4.0)


@dataclass(frozen=True)
class ConstantsRow:
    d: int
    Q: float
    Q_prime: float
    Q_double_prime: float
    Q_over_Qpp: float          # M-DNN / BNN regret ratio
    inv_Qpp: float             # W-DNN / BNN regret ratio
    cis_ratio_majority: float  # sqrt of the regret ratio
    cis_ratio_weighted: float


def constants_row(d: int) -> ConstantsRow:
    q, qpp = q_majority(d), q_double_prime(d)
    r_m, r_w = q / qpp, 1.0 / qpp
    return ConstantsRow(d, q, q_prime(d), qpp, r_m, r_w, math.sqrt(r_m), math.sqrt(r_w))


def figure1_table(d_values) -> list[ConstantsRow]:
    return [constants_row(int(d)) for d in d_values]


CONSTANTS_HEADER = [f for f in ConstantsRow.__dataclass_fields__]


def write_constants_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CONSTANTS_HEADER, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (v if isinstance(v, int) else repr(float(v))) for k, v in asdict(row).items()})
