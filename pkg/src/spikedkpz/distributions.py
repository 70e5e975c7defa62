"""Limit laws and exact Laplace transforms as Fredholm determinants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .fredholm import FredholmResult, det_contour, det_halfline
from .kernels import (
    BPKernel,
    CdrpParams,
    FiniteNParams,
    LaplaceKernel,
    SigmaKernel,
    SpikeParams,
)
from .specfun import scaling_constants


@dataclass(frozen=True)
class DistributionQuery:
    """Evaluate F_{BP, b+Y, beta+Y}(r + Y^2)."""

    r: float
    spikes: SpikeParams = field(default_factory=SpikeParams)
    Y: float = 0.0
    order: int = 64
    contour_order: int = 24

    @property
    def effective(self) -> tuple[float, SpikeParams]:
        return self.r + self.Y**2, self.spikes.shifted(self.Y)


def conjugation_shift(spikes: SpikeParams, scale: float = 1.0) -> float:
    """A point strictly between max(b) and min(beta), zero when admissible.

    Conjugating by e^{-mu (x - y)} with this mu makes the kernel decay in
    both variables on the half-line.
    """
    lo = max(spikes.b) if spikes.b else -math.inf
    hi = min(spikes.beta) if spikes.beta else math.inf
    if lo < 0.0 < hi:
        return 0.0
    if math.isinf(lo):
        return (hi - 1.0) / scale
    if math.isinf(hi):
        return (lo + 1.0) / scale
    return 0.5 * (lo + hi) / scale


def halfline_scale(spikes: SpikeParams, scale: float = 1.0) -> float:
    """Length scale of the half-line rule matched to the slowest kernel decay.

    After conjugation the kernel decays like e^{-g x} with g the distance from
    the shift to the nearest spike; the rule then spreads nodes over ~1/g.
    """
    mu = conjugation_shift(spikes)
    g = min([mu - b for b in spikes.b] + [beta - mu for beta in spikes.beta] + [1.0])
    return max(1.0, 2.0 / g) / scale


def bp_kernel(spikes: SpikeParams, order: int = 24) -> BPKernel:
    return BPKernel(spikes, order=order, conj=conjugation_shift(spikes))


def f_bp_result(q: DistributionQuery) -> FredholmResult:
    r, spikes = q.effective
    K = bp_kernel(spikes, q.contour_order)
    return det_halfline(K.matrix, r, sign=-1, order=q.order, scale=halfline_scale(spikes))


def f_bp(q: DistributionQuery | float, spikes: SpikeParams | None = None) -> float:
    """Borodin-Peche distribution function; TW-GUE with no spikes, BBP with n = 0."""
    if not isinstance(q, DistributionQuery):
        q = DistributionQuery(float(q), spikes or SpikeParams())
    return f_bp_result(q).real


def f_bp_table(r_grid: Sequence[float], spikes: SpikeParams | None = None, Y: float = 0.0,
               order: int = 64) -> list[FredholmResult]:
    """F on a grid of r, reusing one kernel discretization."""
    spikes = (spikes or SpikeParams()).shifted(Y)
    K = bp_kernel(spikes)
    h = halfline_scale(spikes)
    return [det_halfline(K.matrix, float(r) + Y**2, -1, order, scale=h) for r in r_grid]


class TabulatedCDF:
    """Piecewise-linear F_BP on a grid, clipped to [0, 1]; vectorized."""

    vectorized = True

    def __init__(self, spikes: SpikeParams | None = None, lo: float = -9.0, hi: float = 7.0, step: float = 0.05):
        self.grid = np.arange(lo, hi + 0.5 * step, step)
        self.values = np.array([res.real for res in f_bp_table(self.grid, spikes)])

    def __call__(self, x):
        return np.clip(np.interp(x, self.grid, self.values, left=0.0, right=1.0), 0.0, 1.0)


def cdrp_laplace_result(p: CdrpParams, order: int = 64, contour_order: int = 24) -> FredholmResult:
    """det(I - K^(sigma)_{b + X/T, beta + X/T}) on L^2(R_+)."""
    spikes = p.spikes.shifted(p.X / p.T)
    conj = conjugation_shift(spikes, p.sigma)
    K = SigmaKernel(p.sigma, spikes, S=p.S, order=contour_order, conj=conj)
    return det_halfline(K.matrix, 0.0, sign=-1, order=order, scale=halfline_scale(spikes, 1.0 / p.sigma))


def cdrp_laplace(p: CdrpParams, order: int = 64) -> float:
    return cdrp_laplace_result(p, order).real


@dataclass(frozen=True)
class SigmaScanRow:
    sigma: float
    value: float
    reference: float
    gap: float
    error_estimate: float


def sigma_limit_scan(spikes: SpikeParams | None, r: float, sigmas: Sequence[float],
                     order: int = 64) -> list[SigmaScanRow]:
    """det(I - K^(sigma)) with S = e^{-r/sigma} against F_BP(r), per sigma."""
    spikes = spikes or SpikeParams()
    ref = f_bp_result(DistributionQuery(r, spikes, order=order))
    rows = []
    for s in sigmas:
        K = SigmaKernel(float(s), spikes, r=r, conj=conjugation_shift(spikes))
        res = det_halfline(K.matrix, 0.0, -1, order, scale=halfline_scale(spikes))
        rows.append(SigmaScanRow(float(s), res.real, ref.real, abs(res.real - ref.real),
                                 res.error_estimate + ref.error_estimate))
    return rows


def scaled_u(N: int, r: float, kappa: float) -> float:
    """u = exp(-N f - r c N^{1/3}), the Laplace variable probing scale N^{1/3}."""
    sc = scaling_constants(kappa)
    return math.exp(-N * sc.f - r * sc.c * N ** (1.0 / 3.0))


def finite_n_laplace_result(p: FiniteNParams, varphi: float = math.pi / 8, order: int = 24,
                            check: bool = True) -> FredholmResult:
    """det(1 + K_u) on L^2(C_v, dv / 2 pi i); the error estimate halves the order."""
    K = LaplaceKernel(p, varphi, order=order)
    coarse = LaplaceKernel(p, varphi, order=order // 2).v_rule() if check else None
    return det_contour(K.matrix, K.v_rule(), sign=1, coarse=coarse)


def finite_n_laplace(p: FiniteNParams, varphi: float = math.pi / 8, order: int = 24) -> float:
    return finite_n_laplace_result(p, varphi, order, check=False).real
