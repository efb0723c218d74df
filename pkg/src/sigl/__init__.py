"""Graphon estimation from collections of graphs with implicit neural representations."""

from ._accel import backend_name, set_backend
from .baselines import sas_estimate, usvt_estimate
from .estimator import SiglConfig, sample_estimate, sigl_estimate
from .graphons import (Constant, Learned, Mixture, ParametricMono, ParametricSbm, Synthetic,
                       discretize, sample_graph)
from .gw import estimation_error, gw_distance

__version__ = "0.1.0"

__all__ = [
    "Constant", "Learned", "Mixture", "ParametricMono", "ParametricSbm", "SiglConfig", "Synthetic",
    "backend_name", "discretize", "estimation_error", "gw_distance", "sample_estimate", "sample_graph",
    "sas_estimate", "set_backend", "sigl_estimate", "usvt_estimate",
]
