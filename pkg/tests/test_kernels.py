import math

import numpy as np
import pytest
from scipy.special import airy

from spikedkpz.contours import build_rescaled_contours, discretize, vertical_line
from spikedkpz.distributions import scaled_u
from spikedkpz.fredholm import det_contour
from spikedkpz.kernels import (
    BPKernel,
    CdrpParams,
    FiniteNParams,
    LaplaceKernel,
    PoleProximityError,
    RescaledKernel,
    SigmaKernel,
    SpikeParams,
    TildeBPKernel,
    eval_KBP,
    eval_KN,
    eval_Ksigma,
    eval_Ku,
    eval_tildeKBP,
)
from spikedkpz.specfun import scaling_constants

# (2 pi i)^-1 int_{C_s} ... evaluated with mpmath (40 digits, adaptive quadrature
# straight along C_s) for N=9, tau=1, a=0, alpha=(1.5,), u=1
KU_REF_APEX = -34.29202263670859844278
KU_REF_OFF = (-0.25 + 0.4j, 0.45 + 0.1j, -12884.75643480983534780 - 12359.14418892237564389j)


def airy_kernel(x, y):
    ax, apx, _, _ = airy(x)
    ay, apy, _, _ = airy(y)
    if abs(x - y) < 1e-12:
        return apx**2 - x * ax**2
    return (ax * apy - apx * ay) / (x - y)


def test_spike_params_validation():
    sp = SpikeParams([-1, -2], [1])
    assert sp.m == 2 and sp.n == 1
    assert sp.shifted(0.5).b == (-0.5, -1.5)
    with pytest.raises(ValueError):
        SpikeParams([1.0], [0.5])


def test_finite_n_params_flags():
    p = FiniteNParams(9, 9.0, (0.0,) * 9, (1.5,), 1.0)
    assert p.n == 1 and p.within_theorem
    assert not FiniteNParams(3, 1.0, (0.0,) * 3, (), 1.0).within_theorem
    with pytest.raises(ValueError):
        FiniteNParams(3, 1.0, (0.0,) * 2, (), 1.0)


def test_cdrp_sigma():
    assert CdrpParams(T=16.0).sigma == pytest.approx((2 / 16) ** (1 / 3))


def test_bp_kernel_is_airy_kernel():
    K = BPKernel()
    xs = np.linspace(-2, 2, 5)
    M = K.matrix(xs, xs)
    ref = np.array([[airy_kernel(x, y) for y in xs] for x in xs])
    assert np.abs(M - ref).max() < 1e-10


def test_bp_kernel_symmetric_without_spikes():
    xs = np.linspace(-2, 2, 5)
    M = BPKernel().matrix(xs, xs)
    assert np.abs(M - M.T).max() < 1e-9


def test_bp_kernel_contour_invariance():
    sp = SpikeParams([-1.5], [1.5])
    for x, y in [(0.3, -0.4), (1.0, 1.2)]:
        a = eval_KBP(x, y, sp, c=0.7)
        b = eval_KBP(x, y, sp, c=1.3)
        assert abs(a - b) < 1e-8


def test_bp_kernel_far_spikes_decouple():
    x, y = 0.2, -0.3
    ref = airy_kernel(x, y)
    gaps = [abs(eval_KBP(x, y, SpikeParams([-c], [c])) - ref) for c in (5, 10, 20)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_tilde_kernel_self_convergence_and_pole_guard():
    w = -0.7 + 0.7j
    a = eval_tildeKBP(w, w, 0.0, order=24)
    b = eval_tildeKBP(w, w, 0.0, order=48)
    assert np.isfinite(a) and abs(a - b) < 1e-9
    cz = vertical_line(1.0)
    with pytest.raises(PoleProximityError):
        TildeBPKernel(0.0, cz=cz).matrix([w], [1.0 + 1e-10 + 0.0j])


def test_rescaled_kernel_phi_and_sine_limit():
    sc = scaling_constants(1.0)
    K = RescaledKernel(1000, sc)
    assert K.phi(0.0) == sc.theta
    zeta = 0.3 + 0.2j
    approx = [K2.s * np.pi / np.sin(K2.s * np.pi * zeta) for K2 in (RescaledKernel(N, sc) for N in (10**3, 10**6))]
    errs = [abs(a - 1 / zeta) for a in approx]
    assert errs[1] < errs[0] < 0.05


def test_rescaled_kernel_near_limit():
    sc = scaling_constants(1.0)
    ref = eval_tildeKBP(-1.0, -1.0, 0.0)
    assert abs(eval_KN(-1.0, -1.0, 0.0, 10**4, sc) - ref) < 5e-2
    w, w2 = -0.5 + 0.5j, -1 - 1j
    assert abs(eval_KN(w, w2, 0.0, 10**6, sc) - eval_tildeKBP(w, w2, 0.0)) < 1e-2


def test_rescaled_kernel_determinant_matches_laplace_determinant():
    # det(1 + K_N) on C_w equals det(1 + K_u) at the scaled u = e^{-N f - r c N^{1/3}}
    sc = scaling_constants(1.0)
    N = 60
    for r in (-1.0, 0.0):
        K = RescaledKernel(N, sc, r)
        cw, _ = build_rescaled_contours((), ())
        lhs = det_contour(K.matrix, discretize(cw, 24, 10.0), sign=1).value
        p = FiniteNParams(N, float(N), (0.0,) * N, (), scaled_u(N, r, 1.0))
        rhs = det_contour(LaplaceKernel(p).matrix, LaplaceKernel(p).v_rule(), sign=1).value
        assert abs(lhs - rhs) < 1e-6


def test_laplace_kernel_reference_values():
    p = FiniteNParams(9, 1.0, (0.0,) * 9, (1.5,), 1.0)
    K = LaplaceKernel(p)
    assert abs(K(K.mu, K.mu) - KU_REF_APEX) < 1e-8
    v, v2, ref = KU_REF_OFF
    assert abs(eval_Ku(v, v2, p) - ref) < 1e-8 * abs(ref)


def test_laplace_kernel_methods_and_d_invariance():
    p = FiniteNParams(9, 9.0, (0.0,) * 9, (1.5,), 1.0)
    K = LaplaceKernel(p)
    vs = np.array([K.mu, K.mu - 1 + 0.4j, K.mu - 0.5 - 0.2j])
    vs2 = np.array([K.mu - 0.3 + 0.1j, K.mu - 2 - 0.8j])
    res = K.matrix(vs, vs2)
    path = LaplaceKernel(p, method="path").matrix(vs, vs2)
    half = LaplaceKernel(p, method="path", d=K.d / 2).matrix(vs, vs2)
    scale = np.abs(res).max()
    assert np.abs(res - path).max() < 1e-8 * scale
    assert np.abs(path - half).max() < 1e-8 * scale


def test_laplace_kernel_empty_alpha_and_zero_u():
    p = FiniteNParams(9, 9.0, (0.0,) * 9, (), 0.5)
    K = LaplaceKernel(p)
    val = K(K.mu - 0.2 + 0.3j, K.mu)
    assert np.isfinite(val)
    p0 = FiniteNParams(9, 9.0, (0.0,) * 9, (), 0.0)
    assert LaplaceKernel(p0)(K.mu, K.mu) == 0


def test_sigma_kernel_tends_to_bp_kernel():
    x, y = 0.3, 0.7
    ref = eval_KBP(x, y)
    gaps = [abs(eval_Ksigma(x, y, sigma=s, r=0.0) - ref) for s in (0.5, 0.25, 0.125)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_sigma_kernel_contour_invariance():
    sp = SpikeParams([-0.5], [0.5])
    a = SigmaKernel(0.5, sp, S=1.0, height=1.0)(0.2, 0.4)
    b = SigmaKernel(0.5, sp, S=1.0, height=0.5)(0.2, 0.4)
    assert abs(a - b) < 1e-8


def test_sigma_kernel_no_spikes_is_sine_weighted_airy():
    # empty products: only the sine factor distinguishes it from the Airy form
    K = SigmaKernel(0.02, r=0.0)
    assert abs(K(0.4, 0.1) - airy_kernel(0.4, 0.1)) < 1e-4


def test_sigma_kernel_params_form():
    p = CdrpParams(T=8.0, spikes=SpikeParams([-0.3], [0.3]), S=1.0)
    assert np.isfinite(eval_Ksigma(0.1, 0.2, p))
    with pytest.raises(ValueError):
        SigmaKernel(0.5, S=-1.0)


def test_sigma_kernel_decay_with_saturated_constant():
    # |K| e^{-(b x - beta y)/sigma} stays bounded on a wide grid
    sp = SpikeParams([-0.3], [0.3])
    sigma = 0.5
    K = SigmaKernel(sigma, sp)
    ratios = []
    for top in (3.0, 6.0, 12.0):
        g = np.linspace(0, top, 9)
        A = np.abs(K.matrix(g, g))
        bound = np.exp(np.add.outer(-0.3 * g, -0.3 * g) / sigma)
        ratios.append((A / bound).max() / A[0, 0])
    assert ratios[2] < 1.2 * ratios[1]
