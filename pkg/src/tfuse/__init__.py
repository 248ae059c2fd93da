"""Bayesian fusion estimation and clustering via heavy-tail shrinkage on
successive differences, with exact fused-lasso baselines, block-recovery
metrics and a replication harness."""

__version__ = "0.1.0"

from .model import (ChainState, ClusterDraws, Dataset, DPHyper, LaplaceHyper,
                    NumericError, PosteriorDraws, SamplerConfig, THyper,
                    default_laplace_rate)
from .rng import RngStream, derive_stream_id

__all__ = [
    "ChainState", "ClusterDraws", "Dataset", "DPHyper", "LaplaceHyper",
    "NumericError", "PosteriorDraws", "RngStream", "SamplerConfig", "THyper",
    "default_laplace_rate", "derive_stream_id", "__version__",
]
