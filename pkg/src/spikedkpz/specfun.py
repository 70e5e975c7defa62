"""Gamma-family special functions and the polymer scaling constants.

All routines accept scalars or numpy arrays.  ``log_gamma`` works on the
complex plane (principal branch, continuous on C minus the non-positive real
axis); the polygamma routines are real-only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

EULER_GAMMA = 0.57721566490153286061
ZETA3 = 1.2020569031595942854

# Stirling coefficients B_{2k} / (2k (2k-1)), k = 1..8
_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
)
# Bernoulli numbers B_2..B_16 for the polygamma asymptotics
_BERNOULLI = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
)
_SHIFT_RADIUS = 15.0
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


class SpecialFunctionDomainError(ValueError):
    """Argument outside the domain of a special function."""


def _stirling_series(z):
    # ln Gamma(z) for |z| >= _SHIFT_RADIUS, Re z > 0
    inv = 1.0 / z
    inv2 = inv * inv
    series = np.zeros_like(z)
    for coef in reversed(_STIRLING):
        series = series * inv2 + coef
    return (z - 0.5) * np.log(z) - z + _HALF_LOG_2PI + series * inv


def log_gamma(z):
    """Principal branch of ln Gamma(z) for complex ``z``.

    Arguments with small modulus are pushed out to ``|z| >= 15`` through
    ln Gamma(z) = ln Gamma(z + k) - sum_j ln(z + j), which keeps the result
    continuous along any path that avoids the non-positive real axis.
    """
    scalar = np.isscalar(z)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    poles = (z.imag == 0) & (z.real <= 0) & (z.real == np.round(z.real))
    if np.any(poles):
        raise SpecialFunctionDomainError("log_gamma has poles at non-positive integers")

    # shift count per entry: enough to land in the Stirling region
    far = (np.abs(z) >= _SHIFT_RADIUS) & (z.real >= 0)
    need = np.where(far, 0, np.ceil(_SHIFT_RADIUS - z.real)).astype(int)
    shifted = z + need
    acc = np.zeros_like(z)
    kmax = int(need.max()) if need.size else 0
    for j in range(kmax):
        active = need > j
        acc[active] += np.log(z[active] + j)
    out = _stirling_series(shifted) - acc
    return complex(out[0]) if scalar else out


def _check_positive(x):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise SpecialFunctionDomainError("polygamma functions are defined here for x > 0 only")
    return x


def _polygamma_real(order: int, x):
    """psi^(order)(x) for real x > 0 via recurrence and asymptotic series."""
    scalar = np.isscalar(x)
    x = np.atleast_1d(_check_positive(x)).astype(float)
    acc = np.zeros_like(x)
    y = x.copy()
    sign = -1.0 if order % 2 == 0 else 1.0
    fact = math.factorial(order)
    # psi^(m)(x) = psi^(m)(x+1) + (-1)^(m+1) m! / x^(m+1)
    small = y < 20.0
    while np.any(small):
        if order == 0:
            acc[small] -= 1.0 / y[small]
        else:
            acc[small] += sign * fact / y[small] ** (order + 1)
        y[small] += 1.0
        small = y < 20.0
    inv = 1.0 / y
    if order == 0:
        series = np.zeros_like(y)
        inv2 = inv * inv
        for k in reversed(range(len(_BERNOULLI))):
            series = series * inv2 + _BERNOULLI[k] / (2 * (k + 1))
        val = np.log(y) - 0.5 * inv - series * inv2
    else:
        # (-1)^(m+1) [ (m-1)!/y^m + m!/(2 y^(m+1)) + sum B_2k (2k+m-1)!/((2k)! y^(2k+m)) ]
        val = math.factorial(order - 1) * inv**order + fact * 0.5 * inv ** (order + 1)
        for k, b2k in enumerate(_BERNOULLI, start=1):
            coef = b2k * math.factorial(2 * k + order - 1) / math.factorial(2 * k)
            val = val + coef * inv ** (2 * k + order)
        val = sign * val
    out = val + acc
    return float(out[0]) if scalar else out


def digamma(x):
    """Psi(x) = d/dx ln Gamma(x) for real x > 0."""
    return _polygamma_real(0, x)


def trigamma(x):
    """Psi'(x) for real x > 0."""
    return _polygamma_real(1, x)


def psi2(x):
    """Psi''(x) for real x > 0 (negative on the whole domain)."""
    return _polygamma_real(2, x)


def polygamma(order: int, x):
    """Real polygamma of arbitrary non-negative order (used for Taylor expansions)."""
    return _polygamma_real(order, x)


def theta_of_kappa(kappa: float) -> float:
    """Invert trigamma: the unique theta > 0 with trigamma(theta) = kappa."""
    if not kappa > 0:
        raise SpecialFunctionDomainError("kappa must be positive")
    lo, hi = 1e-6, 1e6
    # trigamma(1e-6) ~ 1e12 and trigamma(1e6) ~ 1e-6; widen for extreme kappa
    while trigamma(lo) < kappa:
        lo *= 1e-3
    while trigamma(hi) > kappa:
        hi *= 1e3
    # bisection in log-space down to a modest bracket, then Newton
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if trigamma(mid) > kappa:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1.0 + 1e-6:
            break
    theta = math.sqrt(lo * hi)
    for _ in range(50):
        step = (trigamma(theta) - kappa) / psi2(theta)
        new = theta - step
        if not lo <= new <= hi:
            new = 0.5 * (lo + hi)
        if trigamma(new) > kappa:
            lo = new
        else:
            hi = new
        done = abs(new - theta) <= 1e-15 * max(1.0, abs(new))
        theta = new
        if done:
            break
    return theta


@dataclass(frozen=True)
class ScalingConstants:
    """Scaling data tying the polymer size to the fluctuation scale.

    kappa = tau / N, theta solves trigamma(theta) = kappa, ``f`` is the
    free-energy density and ``c`` the fluctuation coefficient.
    """

    kappa: float
    theta: float
    f: float
    c: float


def free_energy_density(theta):
    """theta * Psi'(theta) - Psi(theta)."""
    return theta * trigamma(theta) - digamma(theta)


def fluctuation_coefficient(theta):
    """(-Psi''(theta) / 2)^(1/3)."""
    return np.cbrt(-psi2(theta) / 2.0)


def scaling_constants(kappa: float, check_infimum: bool = True) -> ScalingConstants:
    theta = theta_of_kappa(kappa)
    f = float(free_energy_density(theta))
    c = float(fluctuation_coefficient(theta))
    if check_infimum:
        res = minimize_scalar(
            lambda t: kappa * t - digamma(t),
            bracket=(0.5 * theta, theta, 2.0 * theta),
            tol=1e-12,
        )
        if abs(res.fun - f) > 1e-10 * max(1.0, abs(f)):
            raise ArithmeticError(f"free energy density check failed: {res.fun} vs {f}")
    return ScalingConstants(kappa=float(kappa), theta=theta, f=f, c=c)
