"""Monte Carlo sampling of the semi-discrete polymer with log-gamma boundary sources."""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..kernels import ContourConstraintError, SpikeParams
from ..specfun import ScalingConstants, scaling_constants
from ._backend import log_partition

THREADS_ENV = "SPIKEDKPZ_THREADS"


@dataclass(frozen=True)
class SimConfig:
    """Polymer parameters plus Monte Carlo controls.

    ``M`` is the number of time steps on [0, tau]; it must be at least 10 N.
    """

    N: int
    tau: float
    a: tuple
    alpha: tuple = ()
    M: int = 2000
    num_samples: int = 1000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(x) for x in self.a))
        object.__setattr__(self, "alpha", tuple(float(x) for x in self.alpha))
        if self.N < 1 or len(self.a) != self.N:
            raise ValueError(f"drift vector must have length N={self.N}")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.alpha and min(self.alpha) <= max(self.a):
            raise ContourConstraintError("need alpha_k - a_l > 0 for all k, l")
        if self.M < 10 * self.N:
            raise ValueError(f"grid too coarse: M={self.M} < 10 N={10 * self.N}")
        if self.num_samples < 0:
            raise ValueError("num_samples must be non-negative")

    @property
    def n(self) -> int:
        return len(self.alpha)

    @property
    def dt(self) -> float:
        return self.tau / self.M

    def with_(self, **kw) -> "SimConfig":
        d = asdict(self)
        d.update(kw)
        return SimConfig(**d)


def scaled_config(kappa: float, N: int, spikes: SpikeParams | None = None, M: int | None = None,
                  num_samples: int = 1000, seed: int = 0) -> tuple[SimConfig, ScalingConstants]:
    """Parameters of the free-energy scaling experiment.

    tau = kappa N; the first m drifts are theta + b_l / (c N^{1/3}), the
    remaining ones are zero; alpha_k = theta + beta_k / (c N^{1/3}).
    """
    spikes = spikes or SpikeParams()
    sc = scaling_constants(kappa)
    if spikes.m > N:
        raise ValueError("more drift spikes than levels")
    s = 1.0 / (sc.c * N ** (1.0 / 3.0))
    a = [sc.theta + b * s for b in spikes.b] + [0.0] * (N - spikes.m)
    alpha = [sc.theta + bb * s for bb in spikes.beta]
    cfg = SimConfig(N=N, tau=kappa * N, a=tuple(a), alpha=tuple(alpha), M=M or 10 * N,
                    num_samples=num_samples, seed=seed)
    return cfg, sc


@dataclass(frozen=True)
class DisorderSample:
    """One realisation of the environment.

    omega[k, l] is the boundary weight at (-(k+1), l+1); ``brownian`` holds
    the (N, M) increments, drift included.
    """

    omega: np.ndarray
    brownian: np.ndarray
    seed: tuple

    def coarsen(self, factor: int) -> "DisorderSample":
        """Same Brownian paths on a grid ``factor`` times coarser."""
        if factor == 1:
            return self
        n_lev, m = self.brownian.shape
        if m % factor:
            raise ValueError("grid size not divisible by the coarsening factor")
        b = self.brownian.reshape(n_lev, m // factor, factor).sum(axis=2)
        return DisorderSample(self.omega, b, self.seed)


def sample_rng(master_seed: int, index: int) -> np.random.Generator:
    """Generator for sample ``index``; independent of how samples are scheduled."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(master_seed), int(index)])))


def sample_disorder(cfg: SimConfig, index: int, M: int | None = None,
                    drifts: Sequence[float] | None = None) -> DisorderSample:
    """Draw the boundary block and Brownian increments for sample ``index``."""
    M = M or cfg.M
    rng = sample_rng(cfg.seed, index)
    a = np.array(cfg.a if drifts is None else drifts, dtype=float)
    alpha = np.array(cfg.alpha, dtype=float)
    shape = alpha[:, None] - np.array(cfg.a)[None, :]
    g = rng.standard_gamma(shape) if shape.size else np.zeros((0, cfg.N))
    omega = -np.log(np.maximum(g, np.finfo(float).tiny))
    dt = cfg.tau / M
    incr = a[:, None] * dt + math.sqrt(dt) * rng.standard_normal((len(a), M))
    return DisorderSample(omega, incr, (cfg.seed, index))


def log_lattice(omega: np.ndarray) -> np.ndarray:
    """log Z(i, j) over the discrete block, with Z(i, j) = e^w (Z(i-1, j) + Z(i, j-1)).

    Row k of the result corresponds to lattice row -(n-k), so the first row
    holds the paths' starting row -n and the last row is -1.
    """
    n, N = omega.shape
    # omega[k] belongs to row -(k+1); reorder so index 0 is row -n
    w = omega[::-1]
    out = np.full((n, N), -np.inf)
    for i in range(n):
        for j in range(N):
            if i == 0 and j == 0:
                prev = 0.0
            else:
                prev = np.logaddexp(out[i - 1, j] if i > 0 else -np.inf, out[i, j - 1] if j > 0 else -np.inf)
            out[i, j] = w[i, j] + prev
    return out


def sample_discrete_block(omega: np.ndarray, log: bool = False) -> np.ndarray:
    """D[l] = sum over up-right paths (-n, 1) -> (-1, l) of e^{sum of omega}.

    For n = 0 the path starts on level 1, so D = (1, 0, ..., 0).
    """
    omega = np.asarray(omega, dtype=float)
    n, N = omega.shape
    if n == 0:
        out = np.full(N, -np.inf)
        out[0] = 0.0
    else:
        out = log_lattice(omega)[-1]
    return out if log else np.exp(out)


def sample_partition_function(cfg: SimConfig, d: DisorderSample) -> tuple[float, float]:
    """(Z, F) on the grid of ``d`` with the trapezoid rule in time."""
    log_d = sample_discrete_block(d.omega, log=True)
    dt = cfg.tau / d.brownian.shape[1]
    F = log_partition(np.ascontiguousarray(log_d), np.ascontiguousarray(d.brownian), dt)
    return math.exp(F) if F < 709 else math.inf, F


def sample_dual_partition_function(omega: np.ndarray, incr: np.ndarray, x_tilde: float,
                                   log: bool = False) -> float:
    """Coupled partition function whose Brownian levels sit on the block's columns.

    ``omega`` is the same (n, m) block used by the primary function and
    ``incr`` the (n, M) increments of the n column paths on [0, x_tilde]
    (drifts beta_k included).  The discrete part ends on the top row m at
    column k - n - 1, after which the path climbs the columns k, ..., n.
    """
    omega = np.asarray(omega, dtype=float)
    incr = np.atleast_2d(np.asarray(incr, dtype=float))
    n, m = omega.shape
    if incr.shape[0] != n:
        raise ValueError("need one Brownian path per column")
    if m == 0:
        log_d = np.full(n, -np.inf)
        log_d[0] = 0.0
    else:
        log_d = log_lattice(omega)[:, -1]
    if x_tilde == 0:
        F = float(log_d[-1])
    else:
        F = log_partition(np.ascontiguousarray(log_d), np.ascontiguousarray(incr), x_tilde / incr.shape[1])
    return F if log else math.exp(F)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _parallel_map(fn: Callable[[int], float], count: int, threads: int | None = None) -> np.ndarray:
    threads = threads or _threads()
    if threads == 1 or count < 2:
        return np.array([fn(i) for i in range(count)], dtype=float)
    with ThreadPoolExecutor(threads) as pool:
        return np.array(list(pool.map(fn, range(count), chunksize=max(1, count // (8 * threads)))), dtype=float)


def sample_free_energies(cfg: SimConfig, M_list: Sequence[int] | None = None,
                         threads: int | None = None) -> np.ndarray:
    """ln Z for every sample; with several grid sizes the paths are shared.

    Returns shape (num_samples,) or (len(M_list), num_samples).  Each grid
    size must divide the finest one.
    """
    grids = list(M_list) if M_list else [cfg.M]
    fine = max(grids)
    if any(fine % m for m in grids):
        raise ValueError("grid sizes must divide the finest grid")
    for m in grids:
        if m < 10 * cfg.N:
            raise ValueError(f"grid too coarse: M={m} < 10 N")

    def one(i: int):
        d = sample_disorder(cfg, i, fine)
        return [sample_partition_function(cfg, d.coarsen(fine // m))[1] for m in grids]

    threads = threads or _threads()
    if threads == 1:
        rows = [one(i) for i in range(cfg.num_samples)]
    else:
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(one, range(cfg.num_samples)))
    out = np.array(rows, dtype=float).reshape(cfg.num_samples, len(grids)).T
    return out if M_list else out[0]


@dataclass(frozen=True)
class EmpiricalDistribution:
    samples: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "samples", np.sort(np.asarray(self.samples, dtype=float)))

    @property
    def count(self) -> int:
        return len(self.samples)

    def cdf(self, x):
        return np.searchsorted(self.samples, x, side="right") / self.count

    def mean(self) -> float:
        return float(np.mean(self.samples))

    def dump(self, path: str | Path) -> Path:
        """Write samples as CSV and the metadata as a JSON sidecar next to it."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["rescaled_free_energy"])
            for x in self.samples:
                w.writerow([repr(float(x))])
        side = path.with_suffix(".json")
        side.write_text(json.dumps(self.meta, indent=2, default=str))
        return side


def mc_free_energy_distribution(cfg: SimConfig, sc: ScalingConstants | None = None,
                                num_samples: int | None = None, threads: int | None = None) -> EmpiricalDistribution:
    """Sorted samples of (F - N f) / (c N^{1/3})."""
    if num_samples is not None:
        cfg = cfg.with_(num_samples=num_samples)
    sc = sc or scaling_constants(cfg.tau / cfg.N)
    F = sample_free_energies(cfg, threads=threads)
    x = (F - cfg.N * sc.f) / (sc.c * cfg.N ** (1.0 / 3.0))
    meta = {"config": asdict(cfg), "scaling": asdict(sc), "seed": cfg.seed}
    return EmpiricalDistribution(x, meta)


def mc_laplace(cfg: SimConfig, u: float | Sequence[float], num_samples: int | None = None,
               M_list: Sequence[int] | None = None, threads: int | None = None, free_energies=None):
    """Sample mean and standard error of e^{-u Z}.

    ``u`` may be a sequence; ``M_list`` evaluates on coupled grids.  Returns
    arrays shaped like (len(M_list), len(u)) when both are sequences.
    """
    if num_samples is not None:
        cfg = cfg.with_(num_samples=num_samples)
    us = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(us < 0):
        raise ValueError("u must be non-negative")
    F = free_energies if free_energies is not None else sample_free_energies(cfg, M_list, threads)
    F = np.atleast_2d(F)
    # e^{-u Z} = exp(-exp(ln u + F)), evaluated without overflow
    with np.errstate(divide="ignore"):
        lu = np.log(us)
    vals = np.exp(-np.exp(np.minimum(lu[None, :, None] + F[:, None, :], 700.0)))
    vals = np.where(us[None, :, None] == 0, 1.0, vals)
    n = F.shape[1]
    est = vals.mean(axis=2)
    se = vals.std(axis=2, ddof=1) / math.sqrt(n) if n > 1 else np.zeros_like(est)
    if M_list is None:
        est, se = est[0], se[0]
    if np.ndim(u) == 0:
        est, se = est[..., 0], se[..., 0]
    return est, se


def ks_statistic(emp: EmpiricalDistribution, cdf: Callable) -> float:
    """sup |F_emp - F| evaluated at the sample points from both sides."""
    x = emp.samples
    n = emp.count
    f = np.asarray([cdf(v) for v in x], dtype=float) if not _vectorized(cdf) else np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def _vectorized(cdf) -> bool:
    return getattr(cdf, "vectorized", False)
