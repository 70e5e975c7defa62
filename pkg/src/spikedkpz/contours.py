"""Integration contours and their Gauss-Legendre discretization.

Every contour is an oriented polyline whose first and/or last piece may be an
infinite ray.  Paths are immutable; ``discretize`` turns one into nodes and
complex weights such that ``sum(weights * f(nodes))`` approximates the
contour integral of ``f``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss


class ContourConstraintError(ValueError):
    """Parameters violate an ordering constraint the contour relies on."""


class ContourGeometryError(ValueError):
    """Two contours that must stay apart come too close."""


@dataclass(frozen=True)
class Segment:
    """Straight piece ``start -> end``."""

    start: complex
    end: complex

    @property
    def length(self) -> float:
        return abs(self.end - self.start)


@dataclass(frozen=True)
class Ray:
    """Infinite straight piece attached to ``anchor``.

    ``inbound`` rays come from infinity along ``-direction`` and end at the
    anchor; outbound rays leave the anchor along ``direction``.
    """

    anchor: complex
    direction: complex
    inbound: bool = False

    def point(self, s):
        # s = distance from the anchor
        return self.anchor + self.direction * s


@dataclass(frozen=True)
class ComplexPath:
    pieces: tuple
    crossing: float | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        ends = []
        for p in self.pieces:
            if isinstance(p, Segment):
                ends.append((p.start, p.end))
            elif p.inbound:
                ends.append((None, p.anchor))
            else:
                ends.append((p.anchor, None))
        for (_, e), (s, _) in zip(ends[:-1], ends[1:]):
            if e is None or s is None or abs(e - s) > 1e-12 * max(1.0, abs(e)):
                raise ContourGeometryError("path pieces are not connected end-to-start")

    def vertices(self) -> list[complex]:
        out = []
        for p in self.pieces:
            if isinstance(p, Segment):
                if not out:
                    out.append(p.start)
                out.append(p.end)
            elif p.inbound:
                out.append(p.anchor)
            elif not out:
                out.append(p.anchor)
        return out

    def polyline(self, radius: float, step: float = 0.05) -> np.ndarray:
        """Dense sample of the path cut at distance ``radius`` along rays."""
        pts = []
        for p in self.pieces:
            if isinstance(p, Segment):
                n = max(2, int(math.ceil(p.length / step)) + 1)
                t = np.linspace(0.0, 1.0, n)
                pts.append(p.start + (p.end - p.start) * t)
            else:
                n = max(2, int(math.ceil(radius / step)) + 1)
                s = np.linspace(0.0, radius, n)
                if p.inbound:
                    s = s[::-1]
                pts.append(p.point(s))
        return np.concatenate(pts)

    def shifted(self, offset: complex) -> "ComplexPath":
        pieces = []
        for p in self.pieces:
            if isinstance(p, Segment):
                pieces.append(Segment(p.start + offset, p.end + offset))
            else:
                pieces.append(Ray(p.anchor + offset, p.direction, p.inbound))
        cross = None if self.crossing is None else self.crossing + offset.real
        return ComplexPath(tuple(pieces), cross, dict(self.meta))


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    truncation_radius: float

    def __len__(self):
        return len(self.nodes)

    def integrate(self, f: Callable) -> complex:
        return complex(np.sum(self.weights * f(self.nodes)))


def _chain(points: Sequence[complex], head: Ray | None = None, tail: Ray | None = None):
    pieces = [] if head is None else [head]
    for a, b in zip(points[:-1], points[1:]):
        if abs(b - a) > 1e-14:
            pieces.append(Segment(complex(a), complex(b)))
    if tail is not None:
        pieces.append(tail)
    return tuple(pieces)


def _barriers(low: Sequence[float], high: Sequence[float]):
    lo = max(low) if len(low) else -math.inf
    hi = min(high) if len(high) else math.inf
    if lo >= hi:
        raise ContourConstraintError(f"need max(lower) < min(upper), got {lo} >= {hi}")
    return lo, hi


def _finite_barriers(lo: float, hi: float, anchor: float = 0.0):
    # a missing barrier sits one unit beyond the other one
    if math.isinf(lo) and math.isinf(hi):
        return anchor - 1.0, anchor + 1.0
    if math.isinf(lo):
        return hi - 1.0, hi
    if math.isinf(hi):
        return lo, lo + 1.0
    return lo, hi


def _inside(x: float, lo: float, hi: float) -> bool:
    gap = hi - lo
    margin = 0.25 if math.isinf(gap) else min(0.25, gap / 8.0)
    return lo + margin < x < hi - margin


def wedge(apex: complex, varphi: float) -> ComplexPath:
    """Two rays leaving ``apex`` at angles pi +- varphi, oriented upward."""
    lower = Ray(complex(apex), complex(np.exp(1j * (math.pi + varphi))), inbound=True)
    upper = Ray(complex(apex), complex(np.exp(1j * (math.pi - varphi))), inbound=False)
    return ComplexPath((lower, upper), crossing=float(np.real(apex)))


def vertical_line(x0: float, crossing: float | None = None, height: float = 1.0) -> ComplexPath:
    """Upward line ``x0 + iR``, optionally kinked to cross the axis at ``crossing``.

    The kink is the polygon ``x0 - ih -> crossing -> x0 + ih``.
    """
    if crossing is None or abs(crossing - x0) < 1e-14:
        a = complex(x0, 0.0)
        path = _chain([a], Ray(a, -1j, inbound=True), Ray(a, 1j))
        return ComplexPath(path, crossing=float(x0))
    lo, hi = complex(x0, -height), complex(x0, height)
    path = _chain([lo, complex(crossing, 0.0), hi], Ray(lo, -1j, inbound=True), Ray(hi, 1j))
    return ComplexPath(path, crossing=float(crossing), meta={"height": height})


def cv_apex(a: Sequence[float], alpha: Sequence[float], delta: float = 0.5) -> tuple[float, float]:
    """(mu, eta) of the wedge contour; an empty alpha acts as max(a) + 2 delta."""
    a = np.asarray(a, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    if a.size == 0:
        raise ContourConstraintError("the drift vector must be non-empty")
    amax = float(a.max())
    if not delta > 0:
        raise ContourConstraintError("delta must be positive")
    amin_alpha = float(alpha.min()) if alpha.size else amax + 2.0 * delta
    if amin_alpha <= amax:
        raise ContourConstraintError("need alpha_k - a_l > 0 for all k, l")
    mu = 0.5 * amax + 0.5 * amin_alpha
    eta = 0.25 * amax + 0.75 * amin_alpha
    return mu, eta


def build_cv(a, alpha, varphi: float = math.pi / 8, delta: float = 0.5) -> ComplexPath:
    """Wedge {mu + e^{i(pi +- varphi)} y, y >= 0} between the a's and alpha's.

    With no alpha the apex sits ``delta`` to the right of max(a).
    """
    if not 0.0 < varphi < math.pi / 4:
        raise ContourConstraintError("varphi must lie in (0, pi/4)")
    mu, eta = cv_apex(a, alpha, delta)
    path = wedge(mu, varphi)
    return ComplexPath(path.pieces, crossing=mu, meta={"mu": mu, "eta": eta, "varphi": varphi})


def default_cs_height(varphi: float) -> float:
    # the horizontal leg at Im v - d meets the wedge once d >= tan(varphi)/2
    return 0.25 * math.tan(varphi)


def build_cs(v: complex, eta: float, d: float) -> ComplexPath:
    """Six-piece path R-i inf -> R-id -> 1/2-id -> 1/2+id -> R+id -> R+i inf, R = eta - Re v."""
    if not d > 0:
        raise ContourConstraintError("d must be positive")
    R = -float(np.real(v)) + eta
    lo, hi = complex(R, -d), complex(R, d)
    pts = [lo, complex(0.5, -d), complex(0.5, d), hi]
    path = _chain(pts, Ray(lo, -1j, inbound=True), Ray(hi, 1j))
    return ComplexPath(path, crossing=0.5, meta={"R": R, "d": d})


def check_cs_clearance(v: complex, cs: ComplexPath, cv: ComplexPath, radius: float = 6.0) -> float:
    """Minimum distance between v + C_s(v) and C_v near v; raises when they touch."""
    near = v + cs.polyline(radius, step=0.02)
    near = near[np.abs(near - v) < radius]
    wedge_pts = cv.polyline(abs(v - cv.crossing) + radius, step=0.02)
    dist = float(np.min(np.abs(near[:, None] - wedge_pts[None, :])))
    if not dist > 0.0:
        raise ContourGeometryError("v + C_s(v) meets C_v; decrease d")
    return dist


def bp_crossings(b, beta, c: float = 1.0) -> tuple[float, float]:
    """Real-axis crossings of the (w, z) contours for the Borodin-Peche kernel."""
    lo, hi = _barriers(b, beta)
    flo, fhi = _finite_barriers(lo, hi)
    if _inside(-c, lo, hi):
        xw = -c
    else:
        xw = flo + 0.25 * (fhi - flo)
    if _inside(c, max(lo, xw), hi) and c > xw:
        xz = c
    elif xw == -c:
        top = fhi if not math.isinf(hi) else xw + 1.0
        xz = 0.5 * (xw + top)
    else:
        xz = flo + 0.75 * (fhi - flo)
    return xw, xz


def build_bp_contours(b, beta, c: float = 1.0, height: float = 1.0):
    """Contours (gamma, Gamma) for the Borodin-Peche kernel.

    gamma is -c + iR and Gamma is c + iR, each kinked near the real axis when
    the straight line does not already pass between max(b) and min(beta).
    Both kinks use the same height, which keeps gamma strictly left of Gamma
    at every height.
    """
    if not c > 0:
        raise ContourConstraintError("c must be positive")
    xw, xz = bp_crossings(b, beta, c)
    gamma = vertical_line(-c, None if xw == -c else xw, height)
    Gamma = vertical_line(c, None if xz == c else xz, height)
    return gamma, Gamma


def rescaled_crossings(b, beta, z_line: float = 1.0) -> tuple[float, float]:
    lo, hi = _barriers(b, beta)
    flo, fhi = _finite_barriers(lo, hi)
    xw = 0.0 if _inside(0.0, lo, hi) else 0.5 * (flo + fhi)
    top = hi if not math.isinf(hi) else xw + 1.0
    xz = z_line if _inside(z_line, max(lo, xw), hi) and z_line > xw else 0.5 * (xw + top)
    return xw, xz


def build_rescaled_contours(b, beta, z_line: float = 1.0):
    """(C_w, C_z): the wedge -|y| + iy and the line z_line + iR, moved to
    cross the real axis between the b's and the beta's."""
    xw, xz = rescaled_crossings(b, beta, z_line)
    cw = wedge(xw, math.pi / 4)
    height = max(1.0, xz - z_line)
    cz = vertical_line(z_line, None if xz == z_line else xz, height)
    return cw, cz


def sigma_base(sigma: float, cap: float = 1.0) -> float:
    """Half-distance between the sigma contours: 1/(4 sigma), capped at ``cap``.

    Lines at -+1/(4 sigma) drift away from the saddle point as sigma -> 0 and
    the cubic exponentials then cancel catastrophically.  Any pair of lines
    with 0 < Re(z - w) < 1/sigma gives the same kernel, so the cap is a
    Cauchy deformation.
    """
    return min(0.25 / sigma, cap)


def sigma_crossings(b, beta, sigma: float) -> tuple[float, float]:
    """Crossings for the sigma-deformed kernel, whose base lines are -+sigma_base(sigma).

    ``b`` and ``beta`` are already expressed in the w/z variable (that is,
    divided by sigma for the unshifted kernel).
    """
    base = sigma_base(sigma)
    lo, hi = _barriers(b, beta)
    flo, fhi = _finite_barriers(lo, hi)
    xw = -base if _inside(-base, lo, hi) else flo + 0.25 * (fhi - flo)
    top = hi if not math.isinf(hi) else xw + 1.0
    if _inside(base, max(lo, xw), hi) and base > xw:
        xz = base
    elif xw == -base:
        xz = 0.5 * (xw + top)
    else:
        xz = flo + 0.75 * (fhi - flo)
    if not 0.0 < xz - xw < 1.0 / sigma:
        raise ContourGeometryError("crossings would enclose a pole of the sine factor")
    return xw, xz


def build_sigma_contours(b, beta, sigma: float, height: float = 1.0):
    xw, xz = sigma_crossings(b, beta, sigma)
    base = sigma_base(sigma)
    w_path = vertical_line(-base, None if xw == -base else xw, height)
    z_path = vertical_line(base, None if xz == base else xz, height)
    return w_path, z_path


def distance_to_path(path: ComplexPath, pts) -> np.ndarray:
    """Exact Euclidean distance from each point to the path."""
    pts = np.atleast_1d(np.asarray(pts, dtype=complex))
    best = np.full(pts.shape, np.inf)
    for piece in path.pieces:
        if isinstance(piece, Segment):
            a, d = piece.start, piece.end - piece.start
            t = np.clip(((pts - a) * np.conj(d)).real / abs(d) ** 2, 0.0, 1.0)
        else:
            a, d = piece.anchor, piece.direction
            t = np.maximum(((pts - a) * np.conj(d)).real / abs(d) ** 2, 0.0)
        best = np.minimum(best, np.abs(pts - (a + t * d)))
    return best


def min_distance(p: ComplexPath, q: ComplexPath, radius: float = 10.0, step: float = 0.02) -> float:
    """Brute-force minimum distance between two paths cut at ``radius``."""
    a = p.polyline(radius, step)
    b = q.polyline(radius, step)
    best = math.inf
    for chunk in np.array_split(a, max(1, len(a) // 512)):
        best = min(best, float(np.min(np.abs(chunk[:, None] - b[None, :]))))
    return best


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(order: int):
    if order not in _GL_CACHE:
        _GL_CACHE[order] = leggauss(order)
    return _GL_CACHE[order]


def _panel(a: complex, b: complex, order: int):
    x, w = gauss_legendre(order)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def _ray_breaks(length: float, first: float, ratio: float, cap: float) -> list[float]:
    out = [0.0]
    h = first
    while out[-1] < length:
        out.append(min(length, out[-1] + h))
        h = min(cap, h * ratio)
    return out


def discretize(
    path: ComplexPath,
    order: int = 24,
    truncation_radius: float = 10.0,
    max_panel: float = 0.5,
    first_panel: float = 0.25,
    ratio: float = 1.5,
    log_magnitude: Callable | None = None,
    drop: float = 40.0,
) -> QuadratureRule:
    """Gauss-Legendre nodes and complex weights along ``path``.

    Finite segments are split into panels no longer than ``max_panel``.
    Rays are cut where ``|z| = truncation_radius`` and split into panels of
    geometrically growing length (``first_panel * ratio**k``, capped at
    ``max_panel``).  When ``log_magnitude`` is given, a ray instead stops at
    the first panel end where ``log_magnitude(z)`` has fallen ``drop`` below
    its running maximum (never before ``truncation_radius`` is reached,
    capped at 50 times it).
    """
    if order < 4:
        raise ValueError("order must be at least 4")
    nodes, weights = [], []
    for piece in path.pieces:
        if isinstance(piece, Segment):
            n = max(1, int(math.ceil(piece.length / max_panel - 1e-12)))
            for k in range(n):
                a = piece.start + (piece.end - piece.start) * (k / n)
                b = piece.start + (piece.end - piece.start) * ((k + 1) / n)
                z, w = _panel(a, b, order)
                nodes.append(z)
                weights.append(w)
            continue
        # distance along the ray at which |anchor + direction s| = radius
        anc, d = piece.anchor, piece.direction
        proj = (np.conj(d) * anc).real
        disc = proj**2 - abs(anc) ** 2 + truncation_radius**2
        length = -proj + math.sqrt(disc) if disc > 0 else 0.0
        length = max(length, first_panel)
        if log_magnitude is None:
            breaks = _ray_breaks(length, first_panel, ratio, max_panel)
        else:
            breaks = [0.0]
            h = first_panel
            peak = -math.inf
            while True:
                s = breaks[-1] + h
                breaks.append(s)
                h = min(max_panel, h * ratio)
                val = float(log_magnitude(piece.point(s)))
                peak = max(peak, val)
                if s >= length and val < peak - drop:
                    break
                if s > 50.0 * length:
                    break
        pz, pw = [], []
        for s0, s1 in zip(breaks[:-1], breaks[1:]):
            z, w = _panel(piece.point(s0), piece.point(s1), order)
            pz.append(z)
            pw.append(w)
        if piece.inbound:
            # traverse from infinity towards the anchor
            pz = [z[::-1] for z in pz[::-1]]
            pw = [-w[::-1] for w in pw[::-1]]
        nodes.extend(pz)
        weights.extend(pw)
    return QuadratureRule(np.concatenate(nodes), np.concatenate(weights), truncation_radius)
