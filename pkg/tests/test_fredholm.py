import math

import numpy as np
import pytest
from scipy.special import airy

from spikedkpz.contours import ComplexPath, Segment, discretize
from spikedkpz.distributions import bp_kernel
from spikedkpz.fredholm import (
    FredholmConvergenceError,
    det_contour,
    det_halfline,
    det_matrix,
    hadamard_bound,
    halfline_rule,
    series_bound_check,
    series_terms,
)
from spikedkpz.kernels import FiniteNParams, LaplaceKernel, SpikeParams

# GUE Tracy-Widom values from the literature
TW2 = {0.0: 0.96937282835526, -2.0: 0.41322414250512}
# direct summation with mpmath of sum_{k>terms} C^{2k} k^{k/2} / (gap^k k!)
SERIES_TAIL = {(1.0, 1.0, 10): 0.0244604326018149, (1.0, 1.0, 0): 4.68644376594158,
               (0.8, 0.5, 5): 4.3625157902212}


def airy_det(r, order=256, length=16.0):
    """det(I - K_Ai) on (r, r + length) by plain Gauss-Legendre."""
    t, w = np.polynomial.legendre.leggauss(order)
    x = r + 0.5 * length * (t + 1)
    w = 0.5 * length * w
    ai, aip, _, _ = airy(x)
    X, Y = np.meshgrid(x, x, indexing="ij")
    with np.errstate(divide="ignore", invalid="ignore"):
        K = (ai[:, None] * aip[None, :] - aip[:, None] * ai[None, :]) / (X - Y)
    K[np.diag_indices_from(K)] = aip**2 - x * ai**2
    sw = np.sqrt(w)
    return np.linalg.det(np.eye(order) - sw[:, None] * K * sw[None, :])


def test_zero_kernel_is_one():
    zero = lambda x, y: np.zeros((len(x), len(y)))
    assert det_halfline(zero, r=-3.0).value == 1.0
    rule = discretize(ComplexPath((Segment(0, 1 + 1j),)), order=8)
    assert det_contour(zero, rule).value == 1.0


def test_rank_one_halfline():
    K = lambda x, y: np.exp(-np.add.outer(x, y))
    res = det_halfline(K, 0.0, sign=-1)
    assert res.value == pytest.approx(0.5, abs=1e-12)
    assert res.converged


def test_rank_one_contour_segment():
    path = ComplexPath((Segment(0, 1 + 1j),))
    rule = discretize(path, order=16)
    K = lambda x, y: np.exp(-np.add.outer(x, y))
    exact = 1 - (1 - np.exp(-2 * (1 + 1j))) / 2 / (2j * np.pi)
    assert abs(det_contour(K, rule, sign=-1).value - exact) < 1e-12


@pytest.mark.parametrize("k", [1, 2, 3])
def test_rank_k_gram_determinant(k):
    # K(x, y) = sum_i f_i(x) g_i(y), f_i = e^{-(i+2) x}, g_i = y^i e^{-y}
    def K(x, y):
        out = np.zeros((len(x), len(y)))
        for i in range(k):
            out += np.exp(-(i + 2) * x)[:, None] * (y**i * np.exp(-y))[None, :]
        return out

    # det(I - K) = det(delta_ij - int g_i f_j)
    G = np.array([[math.factorial(i) / (j + 3) ** (i + 1) for j in range(k)] for i in range(k)])
    exact = np.linalg.det(np.eye(k) - G)
    assert det_halfline(K, 0.0, sign=-1, order=64).value == pytest.approx(exact, abs=1e-10)


def test_tracy_widom_against_literature_and_airy_oracle():
    K = bp_kernel(SpikeParams())
    for r, ref in TW2.items():
        val = det_halfline(K.matrix, r, -1, order=64, scale=2.0).real
        assert val == pytest.approx(ref, abs=1e-11)
        assert val == pytest.approx(airy_det(r), abs=1e-10)


def test_order_stability_and_geometric_decay():
    K = bp_kernel(SpikeParams())
    v40 = det_halfline(K.matrix, 0.0, order=40).real
    v80 = det_halfline(K.matrix, 0.0, order=80).real
    assert abs(v40 - v80) < 1e-7
    diffs = [abs(det_halfline(K.matrix, 0.0, order=2 * q, check=False).real
                 - det_halfline(K.matrix, 0.0, order=q, check=False).real) for q in (6, 12, 24)]
    assert diffs[0] > diffs[1] > diffs[2]


def test_laplace_determinant_order_agreement():
    p = FiniteNParams(9, 1.0, (0.0,) * 9, (1.5,), 1.0)
    vals = []
    for order in (24, 48):
        K = LaplaceKernel(p, order=order)
        vals.append(det_contour(K.matrix, K.v_rule(), sign=1).value)
    assert abs(vals[0] - vals[1]) < 1e-6


def test_non_convergence_flag_and_raise():
    K = bp_kernel(SpikeParams())
    res = det_halfline(K.matrix, -2.0, order=8)
    assert not res.converged and res.error_estimate > 1e-6
    with pytest.raises(FredholmConvergenceError):
        det_halfline(K.matrix, -2.0, order=8, raise_on_fail=True)


def test_halfline_rule_maps_to_interval():
    x, w = halfline_rule(1.5, 32)
    assert np.all(x > 1.5) and np.all(w > 0)
    assert np.sum(w * np.exp(-(x - 1.5))) == pytest.approx(1.0, abs=1e-12)


def test_det_matrix_symmetrised_weights():
    K = np.array([[0.2, 0.1], [0.3, 0.4]])
    w = np.array([0.5, 2.0])
    direct = np.linalg.det(np.eye(2) - K * w[None, :])
    assert det_matrix(K, w, -1) == pytest.approx(direct, abs=1e-14)


def test_series_terms_and_hadamard_bound():
    x, w = halfline_rule(0.0, 48)
    M = bp_kernel(SpikeParams()).matrix(x, x)
    e = series_terms(M, w, kmax=6)
    det = det_matrix(M, w, -1)
    assert abs(sum((-1) ** k * e[k] for k in range(7)) - det) < 1e-6
    for k in range(1, 7):
        assert abs(e[k]) <= hadamard_bound(M, w, k) + 1e-14


@pytest.mark.parametrize("args,expected", list(SERIES_TAIL.items()))
def test_series_bound_check_direct_summation(args, expected):
    assert series_bound_check(*args) == pytest.approx(expected, rel=1e-10)


def test_series_bound_check_edge_cases():
    assert series_bound_check(0.0, 1.0, 3) == 0.0
    assert np.isfinite(series_bound_check(1.0, 1.0, 0))
    assert series_bound_check(1.0, 1.0, 17) < 1e-4 < series_bound_check(1.0, 1.0, 16)
    with pytest.raises(ValueError):
        series_bound_check(1.0, 0.0, 3)
