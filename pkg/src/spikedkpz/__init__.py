"""Spiked KPZ fluctuations: Borodin-Peche limit laws, exact Fredholm
determinants for the semi-discrete log-gamma polymer, and Monte Carlo checks."""

from .distributions import (
    DistributionQuery,
    TabulatedCDF,
    cdrp_laplace,
    f_bp,
    f_bp_table,
    finite_n_laplace,
    scaled_u,
    sigma_limit_scan,
)
from .fredholm import FredholmResult, det_contour, det_halfline
from .kernels import CdrpParams, FiniteNParams, SpikeParams
from .specfun import ScalingConstants, scaling_constants

__version__ = "0.1.0"

__all__ = [
    "CdrpParams",
    "DistributionQuery",
    "FiniteNParams",
    "FredholmResult",
    "ScalingConstants",
    "SpikeParams",
    "TabulatedCDF",
    "cdrp_laplace",
    "det_contour",
    "det_halfline",
    "f_bp",
    "f_bp_table",
    "finite_n_laplace",
    "scaled_u",
    "scaling_constants",
    "sigma_limit_scan",
]
