"""Named classification procedures compared in the experiments.

Each builder returns ``procedure(train, rng) -> fitted model``; the shard
count comes from the partition exponent and the training size, and local
parameters are bridged from the oracle ones.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ensemble import Mode, fit_dnn, fit_oracle_wnn, n_shards
from .tuning import default_oracle_k
from .weights import (BnnGeometric, Ownn, UniformK, bridge_k_majority, bridge_k_weighted,
                      bridge_l_majority, bridge_l_weighted)

ORACLE_METHODS = ("oracle-kNN", "oracle-OWNN", "oracle-BNN")
DISTRIBUTED_METHODS = ("M-DNN(k)", "W-DNN(k)", "M-DNN-OWNN", "W-DNN-OWNN")
ALL_METHODS = ORACLE_METHODS + DISTRIBUTED_METHODS


@dataclass(frozen=True)
class OracleParams:
    """Oracle tuning parameters; ``K=None`` means ceil(N^0.7)."""

    K: int | None = None
    m: int | None = None
    q: float | None = None

    def k_for(self, N: int) -> int:
        return default_oracle_k(N) if self.K is None else min(int(self.K), N)


def local_parameter(name: str, N: int, d: int, gamma: float, params: OracleParams):
    """(s, local parameter) a method will use on a training set of size N."""
    s = 1 if name in ORACLE_METHODS else n_shards(N, gamma)
    if name == "oracle-kNN":
        return s, params.k_for(N)
    if name == "oracle-OWNN":
        return s, _need(params.m, "m")
    if name == "oracle-BNN":
        return s, _need(params.q, "q")
    if name == "M-DNN(k)":
        return s, bridge_k_majority(params.k_for(N), s, d)
    if name == "W-DNN(k)":
        return s, bridge_k_weighted(params.k_for(N), s)
    if name == "M-DNN-OWNN":
        return s, bridge_l_majority(_need(params.m, "m"), s, d)
    if name == "W-DNN-OWNN":
        return s, bridge_l_weighted(_need(params.m, "m"), s)
    raise ValueError(f"unknown method {name!r}; choose from {', '.join(ALL_METHODS)}")


def _need(value, label):
    if value is None:
        raise ValueError(f"oracle parameter {label} is required (tune it first)")
    return value


def make_procedure(name: str, gamma: float, params: OracleParams, threads: int = 1):
    if name not in ALL_METHODS:
        raise ValueError(f"unknown method {name!r}; choose from {', '.join(ALL_METHODS)}")

    def procedure(train, rng):
        N, d = train.n, train.d
        s, p = local_parameter(name, N, d, gamma, params)
        if name == "oracle-kNN":
            return fit_oracle_wnn(train, UniformK(p))
        if name == "oracle-OWNN":
            return fit_oracle_wnn(train, Ownn(min(p, N), d))
        if name == "oracle-BNN":
            return fit_oracle_wnn(train, BnnGeometric(p))
        mode = Mode.MAJORITY if name.startswith("M-") else Mode.WEIGHTED
        scheme = UniformK(p) if name.endswith("(k)") else Ownn(p, d)
        return fit_dnn(train, s, scheme, mode, rng, threads=threads)

    return procedure
