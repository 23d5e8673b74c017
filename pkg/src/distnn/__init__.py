"""Distributed weighted nearest-neighbour classification (majority and weighted voting)."""

__version__ = "0.1.0"

from .core import Dataset, SeededRng, make_rng, squared_distance, validate_dataset
from .ensemble import DnnModel, Mode, fit_dnn, fit_oracle_wnn, make_partition
from .weights import bnn_weights, ownn_weights, uniform_k_weights

__all__ = [
    "Dataset", "SeededRng", "make_rng", "squared_distance", "validate_dataset",
    "DnnModel", "Mode", "fit_dnn", "fit_oracle_wnn", "make_partition",
    "bnn_weights", "ownn_weights", "uniform_k_weights",
]
