"""Hyperdimensional computing with accuracy-constrained model compression."""

from microhd._backend import name as backend
from microhd.cost import compute_ops, memory_bits, report, savings
from microhd.hv import (
    BipolarHV,
    IntegerHV,
    bind,
    bundle_accumulate,
    cosine_similarity,
    dot_similarity,
    hamming,
    permute,
    random_bipolar,
)
from microhd.model import HdcConfig, TrainedModel, TrainOptions, evaluate, fit, predict
from microhd.rng import Rng

__version__ = "0.1.0"

__all__ = [
    "BipolarHV",
    "HdcConfig",
    "IntegerHV",
    "Rng",
    "TrainOptions",
    "TrainedModel",
    "backend",
    "bind",
    "bundle_accumulate",
    "compute_ops",
    "cosine_similarity",
    "dot_similarity",
    "evaluate",
    "fit",
    "hamming",
    "memory_bits",
    "permute",
    "predict",
    "random_bipolar",
    "report",
    "savings",
]
