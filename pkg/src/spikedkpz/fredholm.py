"""Nystrom approximation of Fredholm determinants.

Two settings are covered: kernels on the half-line (r, inf) and kernels on
a complex contour.  On a contour the reference measure is dz / (2 pi i), so
the determinant computed is det(I + sign * K W / (2 pi i)) with W the
quadrature weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .contours import QuadratureRule, gauss_legendre

TWO_PI_I = 2j * math.pi
CONVERGENCE_TOL = 1e-6


class FredholmConvergenceError(ArithmeticError):
    """Refinement did not stabilise the determinant."""


@dataclass(frozen=True)
class FredholmResult:
    value: complex
    error_estimate: float
    matrix_dim: int
    converged: bool

    @property
    def real(self) -> float:
        return float(np.real(self.value))


def _det(a: np.ndarray) -> complex:
    lu, piv = scipy.linalg.lu_factor(a, check_finite=True)
    diag = np.diag(lu)
    swaps = np.count_nonzero(piv != np.arange(len(piv)))
    return complex((-1) ** swaps * np.prod(diag))


def _gap(a: complex, b: complex) -> float:
    # overflowing or NaN determinants count as unconverged
    with np.errstate(all="ignore"):
        d = complex(a) - complex(b)
        if not (np.isfinite(d.real) and np.isfinite(d.imag)):
            return math.inf
        return math.hypot(d.real, d.imag)


def halfline_rule(r: float, order: int, scale: float = 1.0):
    """Nodes/weights on (r, inf) from x = r - scale * ln(1 - t), t in (0, 1)."""
    t, w = gauss_legendre(order)
    t = 0.5 * (t + 1.0)
    w = 0.5 * w
    x = r - scale * np.log1p(-t)
    return x, w * scale / (1.0 - t)


def det_matrix(kernel_matrix: np.ndarray, weights: np.ndarray, sign: int = -1) -> complex:
    """det(I + sign * sqrt(W) K sqrt(W)) for a Nystrom matrix K."""
    sw = np.sqrt(weights.astype(complex))
    a = sign * sw[:, None] * kernel_matrix * sw[None, :]
    a[np.diag_indices_from(a)] += 1.0
    return _det(a)


def det_halfline(kernel: Callable, r: float = 0.0, sign: int = -1, order: int = 64,
                 scale: float = 1.0, check: bool = True, raise_on_fail: bool = False) -> FredholmResult:
    """det(I + sign K) on L^2(r, inf).

    ``kernel`` must accept vectors (xs, ys) and return the full matrix.  The
    error estimate compares against a run at half the order.
    """
    x, w = halfline_rule(r, order, scale)
    value = det_matrix(kernel(x, x), w, sign)
    err = 0.0
    if check:
        xh, wh = halfline_rule(r, order // 2, scale)
        err = _gap(value, det_matrix(kernel(xh, xh), wh, sign))
    ok = bool(np.isfinite(value)) and err <= CONVERGENCE_TOL
    if raise_on_fail and not ok:
        raise FredholmConvergenceError(f"half-line determinant not converged (err={err:.2e})")
    return FredholmResult(value, err, order, ok)


def det_contour(kernel: Callable, rule: QuadratureRule, sign: int = 1,
                coarse: QuadratureRule | None = None, raise_on_fail: bool = False) -> FredholmResult:
    """det(I + sign K) on L^2(contour, dz / 2 pi i).

    When ``coarse`` is given the same determinant is recomputed on it and the
    difference is reported as the error estimate.
    """
    value = det_matrix(kernel(rule.nodes, rule.nodes), rule.weights / TWO_PI_I, sign)
    err = 0.0
    if coarse is not None:
        err = _gap(value, det_matrix(kernel(coarse.nodes, coarse.nodes), coarse.weights / TWO_PI_I, sign))
    ok = bool(np.isfinite(value)) and err <= CONVERGENCE_TOL
    if raise_on_fail and not ok:
        raise FredholmConvergenceError(f"contour determinant not converged (err={err:.2e})")
    return FredholmResult(value, err, len(rule.nodes), ok)


def series_terms(kernel_matrix: np.ndarray, weights: np.ndarray, kmax: int = 8) -> np.ndarray:
    """First ``kmax`` terms of the Fredholm series sum_k tr Lambda^k(K) / k! ... as
    elementary symmetric functions of the eigenvalues of sqrt(W) K sqrt(W)."""
    sw = np.sqrt(weights.astype(complex))
    ev = np.linalg.eigvals(sw[:, None] * kernel_matrix * sw[None, :])
    e = np.zeros(kmax + 1, dtype=complex)
    e[0] = 1.0
    for lam in ev:
        e[1:] = e[1:] + lam * e[:-1]
    return e


def hadamard_bound(kernel_matrix: np.ndarray, weights: np.ndarray, k: int) -> float:
    """Hadamard bound k^{k/2} (sum_i w_i max_j |K_ij|)^k / k! on the k-th series term."""
    col = np.max(np.abs(kernel_matrix), axis=1)
    s = float(np.sum(np.abs(weights) * col))
    return math.exp(0.5 * k * math.log(max(k, 1)) + k * math.log(max(s, 1e-300)) - math.lgamma(k + 1))


def series_bound_check(C: float, gap: float, terms: int, kmax: int = 400) -> float:
    """Tail sum_{k > terms} C^{2k} k^{k/2} / (gap^k k!) of the Hadamard majorant.

    For a kernel bounded by C^2 e^{-gap(x+y)/2}-type estimates this bounds
    the error of truncating the Fredholm series after ``terms`` terms.
    """
    if C < 0 or gap <= 0:
        raise ValueError("need C >= 0 and gap > 0")
    if C == 0:
        return 0.0
    lc, lg = math.log(C), math.log(gap)
    total = 0.0
    for k in range(terms + 1, kmax + 1):
        t = math.exp(2 * k * lc + 0.5 * k * math.log(k) - k * lg - math.lgamma(k + 1))
        total += t
        if k > 2 * terms + 10 and t < 1e-300:
            break
    return total
