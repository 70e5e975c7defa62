"""Pointwise evaluation of the four kernel families.

Every kernel object exposes ``matrix(xs, ys)`` returning the full matrix of
values ``K(xs[i], ys[j])``; Nystrom assembly only ever calls that.  The
``eval_*`` helpers wrap single-point evaluation.

Gamma ratios are always formed as exponentials of log-gamma differences.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import zeta as hurwitz_zeta

from .contours import (
    ComplexPath,
    ContourConstraintError,
    QuadratureRule,
    build_bp_contours,
    build_cs,
    build_cv,
    build_rescaled_contours,
    build_sigma_contours,
    check_cs_clearance,
    distance_to_path,
    default_cs_height,
    vertical_line,
    discretize,
)
from .specfun import ScalingConstants, digamma, log_gamma, scaling_constants

TWO_PI_I = 2j * math.pi
POLE_TOL = 1e-8
IMAG_TOL = 1e-9


class PoleProximityError(ArithmeticError):
    """A quadrature node landed on (or within 1e-8 of) a pole of the integrand."""


class NonRealKernelWarning(RuntimeWarning):
    """A kernel that should be real came out with a sizeable imaginary part."""


@dataclass(frozen=True)
class SpikeParams:
    """Spike vectors b (length m) and beta (length n) with max(b) < min(beta)."""

    b: tuple = ()
    beta: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "b", tuple(float(x) for x in self.b))
        object.__setattr__(self, "beta", tuple(float(x) for x in self.beta))
        if self.b and self.beta and max(self.b) >= min(self.beta):
            raise ContourConstraintError(
                f"spikes need max(b) < min(beta); got {max(self.b)} >= {min(self.beta)}"
            )

    @property
    def m(self) -> int:
        return len(self.b)

    @property
    def n(self) -> int:
        return len(self.beta)

    def shifted(self, y: float) -> "SpikeParams":
        return SpikeParams(tuple(x + y for x in self.b), tuple(x + y for x in self.beta))

    def scaled(self, s: float) -> "SpikeParams":
        return SpikeParams(tuple(x * s for x in self.b), tuple(x * s for x in self.beta))


@dataclass(frozen=True)
class FiniteNParams:
    """Parameters of the finite-N Laplace transform formula."""

    N: int
    tau: float
    a: tuple
    alpha: tuple = ()
    u: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(x) for x in self.a))
        object.__setattr__(self, "alpha", tuple(float(x) for x in self.alpha))
        if len(self.a) != self.N:
            raise ValueError(f"drift vector must have length N={self.N}")
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.alpha and min(self.alpha) <= max(self.a):
            raise ContourConstraintError("need alpha_k - a_l > 0 for all k, l")
        if not complex(self.u).real > 0 and self.u != 0:
            raise ValueError("u must have positive real part")

    @property
    def n(self) -> int:
        return len(self.alpha)

    @property
    def within_theorem(self) -> bool:
        """The determinant identity is stated for N >= 9 only."""
        return self.N >= 9


@dataclass(frozen=True)
class CdrpParams:
    """Continuum polymer parameters; ``sigma = (2/T)^(1/3)``."""

    T: float
    spikes: SpikeParams = field(default_factory=SpikeParams)
    X: float = 0.0
    S: complex = 1.0

    @property
    def sigma(self) -> float:
        return (2.0 / self.T) ** (1.0 / 3.0)


def _spikes(spikes) -> SpikeParams:
    if spikes is None:
        return SpikeParams()
    if isinstance(spikes, SpikeParams):
        return spikes
    b, beta = spikes
    return SpikeParams(b, beta)


def _check_nonreal(values, what: str):
    scale = max(1.0, float(np.max(np.abs(values.real), initial=0.0)))
    bad = float(np.max(np.abs(values.imag), initial=0.0))
    if bad > IMAG_TOL * scale:
        warnings.warn(f"{what}: imaginary part {bad:.2e} exceeds tolerance", NonRealKernelWarning, stacklevel=3)


def _min_gap(a, b) -> float:
    a = np.atleast_1d(a)
    b = np.atleast_1d(b)
    if a.size == 0 or b.size == 0:
        return math.inf
    return float(np.min(np.abs(a[:, None] - b[None, :])))


class BPKernel:
    """Borodin-Peche kernel as a double contour integral.

    K(x, y) = (2 pi i)^-2 int_gamma dw int_Gamma dz  e^{z^3/3 - z y} / e^{w^3/3 - w x}
              / (z - w) * prod (z - b)/(w - b) * prod (w - beta)/(z - beta)

    ``conj`` multiplies by e^{-conj (x - y)}, which leaves Fredholm
    determinants unchanged and tames growth in x when max(b) > 0.
    """

    def __init__(self, spikes=None, c: float = 1.0, order: int = 24, radius: float = 10.0,
                 conj: float = 0.0, contours=None):
        self.spikes = _spikes(spikes)
        self.c = c
        self.conj = conj
        if contours is None:
            contours = build_bp_contours(self.spikes.b, self.spikes.beta, c)
        self.gamma, self.Gamma = contours
        self.rule_w = discretize(self.gamma, order, radius)
        self.rule_z = discretize(self.Gamma, order, radius)
        w, z = self.rule_w.nodes, self.rule_z.nodes
        b = np.array(self.spikes.b)
        beta = np.array(self.spikes.beta)
        if min(_min_gap(w, b), _min_gap(z, beta), _min_gap(w, z)) < POLE_TOL:
            raise PoleProximityError("Borodin-Peche contour passes through a pole")
        log_fw = -(w**3) / 3.0
        log_gz = z**3 / 3.0
        for bl in b:
            log_fw = log_fw - np.log(w - bl)
            log_gz = log_gz + np.log(z - bl)
        for bk in beta:
            log_fw = log_fw + np.log(w - bk)
            log_gz = log_gz - np.log(z - bk)
        fw = self.rule_w.weights * np.exp(log_fw)
        gz = self.rule_z.weights * np.exp(log_gz)
        self._core = fw[:, None] * gz[None, :] / (z[None, :] - w[:, None]) / TWO_PI_I**2

    def matrix(self, xs, ys, check_real: bool = True) -> np.ndarray:
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        ys = np.atleast_1d(np.asarray(ys, dtype=float))
        w, z = self.rule_w.nodes, self.rule_z.nodes
        left = np.exp(np.outer(xs, w) - self.conj * xs[:, None])
        right = np.exp(-np.outer(z, ys) + self.conj * ys[None, :])
        out = left @ self._core @ right
        if check_real:
            _check_nonreal(out, "Borodin-Peche kernel")
        return out

    def __call__(self, x, y) -> complex:
        return complex(self.matrix([x], [y])[0, 0])


def eval_KBP(x: float, y: float, spikes=None, contours=None, c: float = 1.0, order: int = 24,
             radius: float = 10.0) -> complex:
    return BPKernel(spikes, c=c, order=order, radius=radius, contours=contours)(x, y)


class TildeBPKernel:
    """Limit kernel on C_w:

    K~(w, w') = (2 pi i)^-1 int_{C_z} dz e^{z^3/3 - r z} / e^{w^3/3 - r w}
                / ((w - z)(z - w')) * prod (z - b)/(w - b) * prod (w - beta)/(z - beta)
    """

    def __init__(self, r: float = 0.0, spikes=None, cz: ComplexPath | None = None, order: int = 24,
                 radius: float = 10.0, z_line: float = 1.0):
        self.r = float(r)
        self.spikes = _spikes(spikes)
        if cz is None:
            _, cz = build_rescaled_contours(self.spikes.b, self.spikes.beta, z_line)
        self.cz = cz
        self.rule_z = discretize(cz, order, radius)
        z = self.rule_z.nodes
        if _min_gap(z, np.array(self.spikes.beta)) < POLE_TOL:
            raise PoleProximityError("C_z passes through a beta pole")
        log_g = z**3 / 3.0 - self.r * z
        for bl in self.spikes.b:
            log_g = log_g + np.log(z - bl)
        for bk in self.spikes.beta:
            log_g = log_g - np.log(z - bk)
        self._g = self.rule_z.weights * np.exp(log_g) / TWO_PI_I

    def row_factor(self, w):
        log_a = -(w**3) / 3.0 + self.r * w
        for bl in self.spikes.b:
            log_a = log_a - np.log(w - bl)
        for bk in self.spikes.beta:
            log_a = log_a + np.log(w - bk)
        return np.exp(log_a)

    def matrix(self, ws, ws2) -> np.ndarray:
        ws = np.atleast_1d(np.asarray(ws, dtype=complex))
        ws2 = np.atleast_1d(np.asarray(ws2, dtype=complex))
        z = self.rule_z.nodes
        if np.min(distance_to_path(self.cz, np.concatenate([ws, ws2]))) < POLE_TOL:
            raise PoleProximityError("C_z passes within 1e-8 of a kernel argument")
        left = self._g[None, :] / (ws[:, None] - z[None, :])
        right = 1.0 / (z[:, None] - ws2[None, :])
        return self.row_factor(ws)[:, None] * (left @ right)

    def __call__(self, w, w2) -> complex:
        return complex(self.matrix([w], [w2])[0, 0])


def eval_tildeKBP(w: complex, w2: complex, r: float = 0.0, spikes=None, cz=None, order: int = 24,
                  radius: float = 10.0) -> complex:
    return TildeBPKernel(r, spikes, cz, order, radius)(w, w2)


class RescaledKernel:
    """Finite-N kernel K_N on C_w (rescaled around the double critical point).

    Drifts and boundary parameters are a_l = theta + b_l s, alpha_k = theta +
    beta_k s with s = 1/(c N^{1/3}).  The z-integral runs over the line
    ``z_line + iR`` (kinked between the spikes); sine poles z = w + j/s with
    j >= 1 that end up left of that line contribute explicit residues, which
    keeps the value equal to c^-1 N^-1/3 K_u(Phi(w), Phi(w')).
    """

    def __init__(self, N: int, sc: ScalingConstants | float, r: float = 0.0, spikes=None,
                 z_line: float = 1.0, order: int = 24, radius: float = 10.0, cz=None):
        if not isinstance(sc, ScalingConstants):
            sc = scaling_constants(float(sc))
        self.N = int(N)
        self.sc = sc
        self.r = float(r)
        self.spikes = _spikes(spikes)
        self.s = 1.0 / (sc.c * self.N ** (1.0 / 3.0))
        if cz is None:
            _, cz = build_rescaled_contours(self.spikes.b, self.spikes.beta, z_line)
        self.cz = cz
        self.order = order
        self.radius = radius
        # Taylor coefficients psi^(k-1)(theta)/k! = (-1)^k zeta(k, theta)/k, k >= 3
        k = np.arange(3, 64)
        self._taylor = np.where(k % 2 == 0, 1.0, -1.0) * hurwitz_zeta(k, sc.theta) / k
        self.rule_z = discretize(cz, order, radius, log_magnitude=lambda z: float(np.real(self._log_h(z)[0])))

    def phi(self, z):
        return self.sc.theta + self.s * np.asarray(z)

    def n_g(self, z):
        """N [G(Phi(z)) - G(theta)] with G(x) = ln Gamma(x) - kappa x^2/2 + f x."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        eps = self.s * z
        th, kappa = self.sc.theta, self.sc.kappa
        out = np.empty_like(eps)
        near = np.abs(eps) < 0.4 * th
        if np.any(near):
            e = eps[near]
            acc = np.zeros_like(e)
            for coef in self._taylor[::-1]:
                acc = (acc + coef) * e
            out[near] = acc * e * e
        far = ~near
        if np.any(far):
            e = eps[far]
            lg0 = math.lgamma(th)
            out[far] = log_gamma(th + e) - lg0 - float(digamma(th)) * e - 0.5 * kappa * e * e
        return self.N * out

    def _log_pq(self, z):
        # log of prod Gamma(Phi(z))/Gamma(Phi(z)-a_l) * prod Gamma(alpha_k - Phi(z))
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        out = np.zeros_like(z)
        ph = self.phi(z)
        for bl in self.spikes.b:
            out = out + log_gamma(ph) - log_gamma(self.s * (z - bl))
        for bk in self.spikes.beta:
            out = out + log_gamma(self.s * (bk - z))
        return out

    def _log_h(self, z):
        # z-dependent part of the integrand, up to the w-dependent prefactor
        return -self.n_g(z) - self.r * z + self._log_pq(z)

    def _log_row(self, w):
        # prefactor depending on w only: e^{N G(Phi(w))} e^{r w} / prod(...)
        w = np.atleast_1d(np.asarray(w, dtype=complex))
        out = self.n_g(w) + self.r * w
        ph = self.phi(w)
        for bl in self.spikes.b:
            out = out + log_gamma(self.s * (w - bl)) - log_gamma(ph)
        for bk in self.spikes.beta:
            out = out - log_gamma(self.s * (bk - w))
        return out

    def _left_of_cz(self, p: complex) -> bool:
        # C_z is a graph x = X(y); X is z_line outside the kink
        pts = self.cz.polyline(abs(p.imag) + 2.0, step=0.01)
        idx = np.argmin(np.abs(pts.imag - p.imag))
        return p.real < pts[idx].real

    def matrix(self, ws, ws2) -> np.ndarray:
        ws = np.atleast_1d(np.asarray(ws, dtype=complex))
        ws2 = np.atleast_1d(np.asarray(ws2, dtype=complex))
        z, wz = self.rule_z.nodes, self.rule_z.weights
        if np.min(distance_to_path(self.cz, np.concatenate([ws, ws2]))) < POLE_TOL:
            raise PoleProximityError("C_z passes within 1e-8 of a kernel argument")
        log_h = self._log_h(z)
        log_row = self._log_row(ws)
        arg = np.pi * self.s * (z[None, :] - ws[:, None])
        # sine poles at z - w = j/s, j != 0
        jj = np.round(arg.real / np.pi)
        near_pole = (jj != 0) & (np.abs(arg - np.pi * jj) < POLE_TOL)
        if np.any(near_pole):
            raise PoleProximityError("sine factor pole on the z contour")
        # combine w-row factor and z-column factor in log space per entry
        expo = log_row[:, None] + log_h[None, :]
        weight = -self.s / TWO_PI_I * np.pi / np.sin(arg) * wz[None, :] * np.exp(expo)
        out = weight @ (1.0 / (z[:, None] - ws2[None, :]))
        # residues of sine poles left of the contour
        for i, w in enumerate(ws):
            j = 1
            while True:
                zj = w + j / self.s
                if zj.real > self.cz.crossing + 50.0 and zj.real > 50.0:
                    break
                if not self._left_of_cz(zj):
                    break
                h = np.exp(log_row[i] + self._log_h(zj)[0])
                out[i, :] += (-1) ** j * h / (zj - ws2)
                j += 1
        return out

    def __call__(self, w, w2) -> complex:
        return complex(self.matrix([w], [w2])[0, 0])


def eval_KN(w: complex, w2: complex, r: float, N: int, sc, spikes=None, cz=None, **kw) -> complex:
    return RescaledKernel(N, sc, r, spikes, cz=cz, **kw)(w, w2)


class SigmaKernel:
    """sigma-deformed kernel on the half-line R_+.

    K(x, y) = (2 pi i)^-2 int dw int dz sigma pi S^{sigma (z - w)} / sin(sigma pi (z - w))
              e^{z^3/3 - z y} / e^{w^3/3 - w x}
              prod Gamma(sigma w - b_l)/Gamma(sigma z - b_l)
              prod Gamma(beta_k - sigma z)/Gamma(beta_k - sigma w)

    With ``r`` given (and ``S`` ignored) the shifted form is used: the
    spikes are multiplied by sigma and S = e^{-r/sigma}, so the gamma
    arguments become sigma (w - b_l) and the kernel tends to K_BP(x+r, y+r).
    """

    def __init__(self, sigma: float, spikes=None, S: complex = 1.0, r: float | None = None,
                 order: int = 24, radius: float = 10.0, height: float = 1.0, conj: float = 0.0):
        if not sigma > 0:
            raise ValueError("sigma must be positive")
        self.sigma = float(sigma)
        self.spikes = _spikes(spikes)
        self.conj = conj
        if r is not None:
            self.log_s = -float(r) / self.sigma
            gb = self.spikes.scaled(self.sigma)
            cross = self.spikes
        else:
            S = complex(S)
            if not S.real > 0:
                raise ValueError("S must have positive real part")
            self.log_s = np.log(S)
            gb = self.spikes
            cross = self.spikes.scaled(1.0 / self.sigma)
        self.gamma_b = np.array(gb.b)
        self.gamma_beta = np.array(gb.beta)
        self.w_path, self.z_path = build_sigma_contours(cross.b, cross.beta, self.sigma, height)
        self.rule_w = discretize(self.w_path, order, radius)
        self.rule_z = discretize(self.z_path, order, radius)
        w, z = self.rule_w.nodes, self.rule_z.nodes
        sw, sz = self.sigma * w, self.sigma * z
        log_fw = -(w**3) / 3.0
        log_gz = z**3 / 3.0
        for bl in self.gamma_b:
            log_fw = log_fw + log_gamma(sw - bl)
            log_gz = log_gz - log_gamma(sz - bl)
        for bk in self.gamma_beta:
            log_fw = log_fw - log_gamma(bk - sw)
            log_gz = log_gz + log_gamma(bk - sz)
        d = z[None, :] - w[:, None]
        arg = self.sigma * math.pi * d
        jj = np.round(arg.real / math.pi)
        if np.any(np.abs(arg - math.pi * jj) < POLE_TOL):
            raise PoleProximityError("sine factor pole between the sigma contours")
        sine = self.sigma * math.pi * np.exp(self.sigma * d * self.log_s) / np.sin(arg)
        fw = self.rule_w.weights * np.exp(log_fw)
        gz = self.rule_z.weights * np.exp(log_gz)
        self._core = fw[:, None] * gz[None, :] * sine / TWO_PI_I**2

    def matrix(self, xs, ys, check_real: bool = True) -> np.ndarray:
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        ys = np.atleast_1d(np.asarray(ys, dtype=float))
        w, z = self.rule_w.nodes, self.rule_z.nodes
        left = np.exp(np.outer(xs, w) - self.conj * xs[:, None])
        right = np.exp(-np.outer(z, ys) + self.conj * ys[None, :])
        out = left @ self._core @ right
        if check_real and np.isreal(self.log_s):
            _check_nonreal(out, "sigma kernel")
        return out

    def __call__(self, x, y) -> complex:
        return complex(self.matrix([x], [y])[0, 0])


def eval_Ksigma(x: float, y: float, p: CdrpParams | None = None, *, sigma: float | None = None,
                spikes=None, S: complex = 1.0, r: float | None = None, **kw) -> complex:
    if p is not None:
        sigma, spikes, S = p.sigma, p.spikes, p.S
    return SigmaKernel(sigma, spikes, S=S, r=r, **kw)(x, y)


class LaplaceKernel:
    """Finite-N kernel K_u on the wedge C_v(a; alpha; varphi).

    K_u(v, v') = (2 pi i)^-1 int_{C_s(v)} ds Gamma(-s) Gamma(1+s) u^s
                 e^{v tau s + tau s^2/2} / (v + s - v')
                 prod Gamma(v - a_l)/Gamma(s + v - a_l)
                 prod Gamma(alpha_k - v - s)/Gamma(alpha_k - v)

    ``u^s`` uses the principal logarithm of u.

    Two evaluation methods give the same number.  ``"path"`` integrates
    over C_s(v) directly.  ``"residue"`` (default) writes v + C_s(v) as the
    vertical line Re z = eta plus a closed rectangle around the poles
    s = 1, ..., floor(R) of Gamma(-s), so that

        K_u(v, v') = line integral + sum_{1 <= k < R} (-1)^k h_v(k) / (v + k - v')

    with h_v the integrand stripped of Gamma(-s)Gamma(1+s) and of 1/(v+s-v').
    The line nodes are shared by every row, which turns assembly into a
    pair of matrix products.
    """

    def __init__(self, p: FiniteNParams, varphi: float = math.pi / 8, d: float | None = None,
                 order: int = 24, max_panel: float = 0.25, drop: float = 40.0, method: str = "residue",
                 line: str = "auto", delta: float | None = None):
        if method not in ("residue", "path"):
            raise ValueError("method must be 'residue' or 'path'")
        if line not in ("auto", "default"):
            raise ValueError("line must be 'auto' or 'default'")
        self.line = line
        self.p = p
        self.varphi = varphi
        self.method = method
        self.log_u = np.log(complex(p.u)) if p.u != 0 else None
        ua, ucount = np.unique(np.array(p.a), return_counts=True)
        self._a = list(zip(ua, ucount))
        self._alpha = list(np.array(p.alpha))
        self.cv = build_cv(p.a, p.alpha, varphi, self._apex_offset() if delta is None else delta)
        self.mu = self.cv.meta["mu"]
        self.eta = self.cv.meta["eta"]
        self.d = default_cs_height(varphi) if d is None else d
        self.order = order
        self.max_panel = max_panel
        self.drop = drop
        self.min_alpha = min(p.alpha) if p.alpha else None

    def _apex_offset(self) -> float:
        """Apex offset from max(a) when alpha is empty.

        Any offset gives the same kernel determinant; placing the apex at the
        real critical point of the z-integrand keeps the entries O(1) for
        large N.
        """
        if self._alpha or self.log_u is None:
            return 0.5
        amax = max(self.p.a)
        x = amax + np.linspace(0.05, 10.0, 800)
        slope = self.log_u.real + self.p.tau * x
        for al, cnt in self._a:
            slope = slope - cnt * digamma(x - al)
        return max(0.5, float(x[int(np.argmin(np.abs(slope)))] - amax))

    # factors of the integrand written in z = v + s
    def _log_zpart(self, z, skip: int | None = None):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        out = z * self.log_u + 0.5 * self.p.tau * z * z
        for al, cnt in self._a:
            out = out - cnt * log_gamma(z - al)
        for k, ak in enumerate(self._alpha):
            if k != skip:
                out = out + log_gamma(ak - z)
        return out

    def _log_vpart(self, v):
        v = np.atleast_1d(np.asarray(v, dtype=complex))
        out = -v * self.log_u - 0.5 * self.p.tau * v * v
        for al, cnt in self._a:
            out = out + cnt * log_gamma(v - al)
        for ak in self._alpha:
            out = out - log_gamma(ak - v)
        return out

    def log_integrand(self, v: complex, s):
        """log of the s-integrand without the 1/(v + s - v') factor."""
        s = np.atleast_1d(np.asarray(s, dtype=complex))
        return (log_gamma(-s) + log_gamma(1.0 + s) + self._log_zpart(v + s) + self._log_vpart(v)[0])

    def s_rule(self, v: complex) -> QuadratureRule:
        if abs(v.imag) < self.d and self.min_alpha is not None and v.real + 0.5 >= self.min_alpha:
            raise ContourConstraintError("the s-contour detour would cross an alpha pole")
        cs = build_cs(v, self.eta, self.d)
        return discretize(
            cs, self.order, truncation_radius=2.0, max_panel=self.max_panel,
            log_magnitude=lambda s: float(np.real(self.log_integrand(v, s)[0])), drop=self.drop,
        )

    def _rows_path(self, vs, vs2):
        out = np.empty((len(vs), len(vs2)), dtype=complex)
        for i, v in enumerate(vs):
            rule = self.s_rule(v)
            s, ws = rule.nodes, rule.weights
            if np.min(np.abs(s - np.round(s.real))) < POLE_TOL:
                raise PoleProximityError("s contour passes through a pole of Gamma(-s)Gamma(1+s)")
            denom = v + s[:, None] - vs2[None, :]
            if np.min(np.abs(denom)) < POLE_TOL:
                raise PoleProximityError("s contour passes through v' - v")
            vals = ws * np.exp(self.log_integrand(v, s))
            out[i] = (vals @ (1.0 / denom)) / TWO_PI_I
        return out

    def _line_rule(self, x0: float, height: float) -> QuadratureRule:
        line = vertical_line(x0)
        return discretize(line, self.order, truncation_radius=height, max_panel=self.max_panel,
                          log_magnitude=lambda z: float(np.real(self._log_zpart(z)[0])), drop=self.drop)

    def _alpha_poles(self, x0: float):
        """(k, j, z) for the poles z = alpha_k + j of Gamma(alpha_k - z) left of x0."""
        out = []
        for k, ak in enumerate(self._alpha):
            for j in range(0, max(0, int(math.ceil(x0 - ak)))):
                if ak + j < x0:
                    out.append((k, j, ak + j))
        return out

    def _term_scale(self, x0: float) -> float:
        """Log of the largest term (line integrand or residue) for rows near the apex."""
        y = np.linspace(-60.0, 60.0, 241)
        scale = float(np.max(np.real(self._log_zpart(x0 + 1j * y)) - np.pi * np.abs(y)))
        for k, j, zj in self._alpha_poles(x0):
            scale = max(scale, float(np.real(self._log_zpart(zj, skip=k)[0])) - math.lgamma(j + 1))
        ks = np.arange(1, int(math.ceil(x0 - self.mu)))
        if ks.size:
            scale = max(scale, float(np.max(np.real(self._log_zpart(self.mu + ks)))))
        return scale

    def _lines(self) -> list[float]:
        """Two line positions for the residue method.

        The default pair sits between mu and eta.  When the s-integrand on
        those lines is much larger than the terms obtained by moving the
        line right past poles of Gamma(alpha - z) (small tau, large N), the
        pair is moved there instead, which avoids catastrophic cancellation.
        """
        default = [self.eta, self.eta - (self.eta - self.mu) / 3.0]
        if not self._alpha or self.line == "default":
            return default
        al = np.array(self._alpha)
        diff = al[:, None] - al[None, :]
        if len(al) > 1 and np.min(np.abs(diff[~np.eye(len(al), dtype=bool)] - np.round(diff[~np.eye(len(al), dtype=bool)]))) < 0.05:
            return default  # coincident or integer-spaced alphas give higher-order poles
        base = self._term_scale(self.eta)

        def clear(x):
            return (np.min(np.abs((x - al) - np.round(x - al))) > 0.1
                    and abs((x - self.mu) - round(x - self.mu)) > 0.1)

        grid = [x for x in np.arange(float(al.min()) + 0.05, float(al.max()) + 15.0, 0.1) if clear(x)]
        if not grid:
            return default
        scales = [self._term_scale(x) for x in grid]
        best = int(np.argmin(scales))
        if scales[best] > base - 2.0:
            return default
        x0 = grid[best]
        for dx in (-0.3, 0.3, -0.15, 0.15):
            if clear(x0 + dx) and x0 + dx > self.eta:
                return [x0, x0 + dx]
        return [x0, x0]

    def _rows_residue(self, vs, vs2):
        # two candidate lines; each row uses the one farther from its poles
        lines = self._lines()
        height = float(np.max(np.abs(vs.imag))) + 4.0
        dist = np.stack([np.abs((x0 - vs.real) - np.round(x0 - vs.real)) for x0 in lines])
        choice = np.argmax(dist, axis=0)
        log_v = self._log_vpart(vs)
        out = np.zeros((len(vs), len(vs2)), dtype=complex)
        for j, x0 in enumerate(lines):
            rows = np.nonzero(choice == j)[0]
            if rows.size == 0:
                continue
            rule = self._line_rule(x0, height)
            z, wz = rule.nodes, rule.weights
            if _min_gap(z, vs2) < POLE_TOL:
                raise PoleProximityError("line passes through a kernel argument")
            s = z[None, :] - vs[rows, None]
            if np.min(np.abs(s - np.round(s.real))) < POLE_TOL:
                raise PoleProximityError("line passes through a pole of Gamma(-s)Gamma(1+s)")
            expo = log_v[rows, None] + self._log_zpart(z)[None, :]
            left = wz[None, :] * np.exp(expo) * (-np.pi / np.sin(np.pi * s)) / TWO_PI_I
            out[rows] = left @ (1.0 / (z[:, None] - vs2[None, :]))
            for i in rows:
                v = vs[i]
                R = x0 - v.real
                k = np.arange(1, int(math.ceil(R)))
                k = k[k < R]
                if k.size == 0:
                    continue
                zk = v + k
                h = np.exp(log_v[i] + self._log_zpart(zk)) * np.where(k % 2 == 0, 1.0, -1.0)
                denom = zk[:, None] - vs2[None, :]
                if np.min(np.abs(denom)) < POLE_TOL:
                    raise PoleProximityError("residue point coincides with a kernel argument")
                out[i] += h @ (1.0 / denom)
            # poles of Gamma(alpha_k - z) crossed by a line right of min(alpha)
            for k, jj, zj in self._alpha_poles(x0):
                sj = zj - vs[rows]
                if np.min(np.abs(np.sin(np.pi * sj))) < POLE_TOL:
                    raise PoleProximityError("alpha pole coincides with a pole of Gamma(-s)")
                c = np.exp(log_v[rows] + self._log_zpart(zj, skip=k)[0] - math.lgamma(jj + 1))
                c = c * (-1.0) ** jj * (-np.pi / np.sin(np.pi * sj))
                out[rows] += c[:, None] / (zj - vs2[None, :])
        return out

    def matrix(self, vs, vs2) -> np.ndarray:
        vs = np.atleast_1d(np.asarray(vs, dtype=complex))
        vs2 = np.atleast_1d(np.asarray(vs2, dtype=complex))
        if self.log_u is None:
            return np.zeros((len(vs), len(vs2)), dtype=complex)
        if self.method == "path":
            return self._rows_path(vs, vs2)
        return self._rows_residue(vs, vs2)

    def v_rule(self, order: int | None = None, drop: float | None = None) -> QuadratureRule:
        """Quadrature on C_v; rays are cut where the row factor has decayed."""
        log_u = self.log_u if self.log_u is not None else 0.0

        def log_row(v):
            out = -0.5 * self.p.tau * v * v - v * log_u
            for al, cnt in self._a:
                out = out + cnt * log_gamma(v - al)
            for ak in self._alpha:
                out = out - log_gamma(ak - v)
            return float(np.real(out))

        return discretize(self.cv, order or self.order, truncation_radius=1.0, max_panel=2 * self.max_panel,
                          log_magnitude=log_row, drop=drop or self.drop)

    def __call__(self, v, v2) -> complex:
        return complex(self.matrix([v], [v2])[0, 0])


def eval_Ku(v: complex, v2: complex, p: FiniteNParams, varphi: float = math.pi / 8, **kw) -> complex:
    return LaplaceKernel(p, varphi, **kw)(v, v2)
