"""Monte Carlo simulation of the semi-discrete polymer with log-gamma boundary sources."""

from ._backend import BACKEND
from .simulate import (
    DisorderSample,
    EmpiricalDistribution,
    SimConfig,
    ks_statistic,
    log_lattice,
    mc_free_energy_distribution,
    mc_laplace,
    sample_discrete_block,
    sample_disorder,
    sample_dual_partition_function,
    sample_free_energies,
    sample_partition_function,
    sample_rng,
    scaled_config,
)

__all__ = [
    "BACKEND",
    "DisorderSample",
    "EmpiricalDistribution",
    "SimConfig",
    "ks_statistic",
    "log_lattice",
    "mc_free_energy_distribution",
    "mc_laplace",
    "sample_discrete_block",
    "sample_disorder",
    "sample_dual_partition_function",
    "sample_free_energies",
    "sample_partition_function",
    "sample_rng",
    "scaled_config",
]
