import itertools
import json
import math

import numpy as np
import pytest
from scipy.special import digamma

from spikedkpz.kernels import ContourConstraintError
from spikedkpz.polymer import (
    DisorderSample,
    EmpiricalDistribution,
    SimConfig,
    ks_statistic,
    mc_free_energy_distribution,
    mc_laplace,
    sample_discrete_block,
    sample_disorder,
    sample_dual_partition_function,
    sample_free_energies,
    sample_partition_function,
    scaled_config,
)
from spikedkpz.polymer import _fallback

try:
    from spikedkpz.polymer import _core
except ImportError:  # pragma: no cover
    _core = None


def brute_force_block(omega):
    """Sum over all up-right lattice paths by explicit enumeration."""
    n, N = omega.shape
    w = omega[::-1]  # row 0 is the starting row -n
    out = np.zeros(N)
    for l in range(N):
        steps = (n - 1) + l
        for downs in itertools.combinations(range(steps), n - 1):
            i = j = 0
            total = w[0, 0]
            for s in range(steps):
                if s in downs:
                    i += 1
                else:
                    j += 1
                total += w[i, j]
            out[l] += math.exp(total)
    return out


@pytest.mark.parametrize("n,N", [(n, N) for n in range(1, 5) for N in range(1, 5)])
def test_discrete_block_matches_enumeration(n, N):
    omega = np.random.default_rng(10 * n + N).normal(size=(n, N))
    D = sample_discrete_block(omega)
    ref = brute_force_block(omega)
    assert np.all(D > 0)
    assert np.max(np.abs(D - ref) / ref) < 1e-12


def test_discrete_block_small_cases():
    omega = np.array([[0.3]])
    assert sample_discrete_block(omega)[0] == pytest.approx(math.exp(0.3), rel=1e-15)
    omega = np.array([[0.3], [-0.2]])
    assert sample_discrete_block(omega)[0] == pytest.approx(math.exp(0.1), rel=1e-15)
    D0 = sample_discrete_block(np.zeros((0, 3)))
    assert list(D0) == [1.0, 0.0, 0.0]


def test_discrete_block_log_space_no_overflow():
    omega = np.full((4, 4), 400.0)
    logD = sample_discrete_block(omega, log=True)
    assert np.all(np.isfinite(logD)) and logD[-1] > 2000


def test_inverse_gamma_boundary_mean():
    # n = N = 1: D = e^omega with e^{-omega} ~ gamma(alpha - a)
    cfg = SimConfig(N=1, tau=1.0, a=(0.0,), alpha=(3.0,), M=10, num_samples=20000)
    D = np.array([sample_discrete_block(sample_disorder(cfg, i).omega)[0] for i in range(cfg.num_samples)])
    se = D.std(ddof=1) / math.sqrt(len(D))
    assert abs(D.mean() - 1 / (3.0 - 0.0 - 1)) < 3 * se
    # log Z = omega + B(tau): E = -psi(alpha - a) + a tau
    F = sample_free_energies(cfg)
    assert abs(F.mean() + digamma(3.0)) < 3 * F.std(ddof=1) / math.sqrt(len(F))


def test_single_level_is_gaussian():
    tau = 2.0
    cfg = SimConfig(N=1, tau=tau, a=(0.0,), M=20, num_samples=10000, seed=3)
    F = sample_free_energies(cfg)
    assert abs(F.mean()) <= 3 * math.sqrt(tau / 1e4)
    assert abs(F.var(ddof=1) - tau) <= 3 * tau * math.sqrt(2 / 1e4)


def test_annealed_moment():
    tau, N = 1.0, 3
    cfg = SimConfig(N=N, tau=tau, a=(0.0,) * N, M=2000, num_samples=10000, seed=1)
    Z = np.exp(sample_free_energies(cfg))
    exact = math.exp(tau / 2) * tau ** (N - 1) / math.factorial(N - 1)
    assert abs(Z.mean() - exact) < 3 * Z.std(ddof=1) / math.sqrt(len(Z))
    assert np.all(Z > 0)


def _refinement_gaps():
    cfg = SimConfig(N=3, tau=2.0, a=(0.0,) * 3, alpha=(1.5,), M=1000, num_samples=2000)
    F = sample_free_energies(cfg, M_list=[250, 500, 1000, 2000])
    return [np.mean(np.abs(F[i + 1] - F[i])) for i in range(3)]


def test_grid_refinement_first_order():
    gaps = _refinement_gaps()
    ratios = [gaps[i + 1] / gaps[i] for i in range(2)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert all(0.4 < q < 0.6 for q in ratios)


@pytest.mark.xfail(strict=True, reason="the trapezoid rule on Brownian paths is first order, so "
                                         "M -> 2M halves the change; the ratio sits at 0.5, not below it")
def test_grid_refinement_stated_ratio():
    gaps = _refinement_gaps()
    assert all(gaps[i + 1] < 0.5 * gaps[i] for i in range(2))


def test_coarsen_keeps_paths():
    cfg = SimConfig(N=2, tau=1.0, a=(0.0, 0.0), M=40)
    d = sample_disorder(cfg, 0)
    c = d.coarsen(4)
    assert c.brownian.shape == (2, 10)
    assert np.allclose(c.brownian.sum(axis=1), d.brownian.sum(axis=1), atol=1e-13)
    with pytest.raises(ValueError):
        d.coarsen(3)


def test_dual_corner_value():
    omega = np.random.default_rng(4).normal(size=(3, 2))
    incr = np.zeros((3, 10))
    val = sample_dual_partition_function(omega, incr, 0.0, log=True)
    assert val == pytest.approx(sample_discrete_block(omega, log=True)[-1], abs=1e-12)


def test_dual_single_path():
    incr = np.random.default_rng(6).normal(size=(1, 50)) * 0.1
    val = sample_dual_partition_function(np.zeros((1, 0)), incr, 1.0, log=True)
    assert val == pytest.approx(incr.sum(), abs=1e-12)


def test_dual_is_transposed_primary():
    # transposing the lattice maps the dual recursion onto the primary one
    rng = np.random.default_rng(8)
    n, m, M = 3, 2, 60
    omega = rng.normal(size=(n, m))
    incr = rng.normal(size=(n, M)) * 0.2
    dual = sample_dual_partition_function(omega, incr, 1.5, log=True)
    omega_t = omega[::-1].T[::-1]
    cfg = SimConfig(N=n, tau=1.5, a=(0.0,) * n, alpha=(1.0,) * m, M=M)
    _, F = sample_partition_function(cfg, DisorderSample(omega_t, incr, (0, 0)))
    assert dual == pytest.approx(F, abs=1e-12)


def test_reproducible_across_threads(monkeypatch):
    cfg = SimConfig(N=4, tau=4.0, a=(0.0,) * 4, alpha=(1.2,), M=80, num_samples=40, seed=7)
    one = sample_free_energies(cfg, threads=1)
    three = sample_free_energies(cfg, threads=3)
    monkeypatch.setenv("SPIKEDKPZ_THREADS", "2")
    env = sample_free_energies(cfg)
    assert np.array_equal(one, three) and np.array_equal(one, env)
    assert not np.array_equal(one, sample_free_energies(cfg.with_(seed=8)))


@pytest.mark.skipif(_core is None, reason="compiled core not built")
def test_compiled_core_matches_fallback():
    cfg = SimConfig(N=20, tau=20.0, a=(0.0,) * 20, alpha=(1.4, 1.6), M=400)
    for i in range(5):
        d = sample_disorder(cfg, i)
        log_d = sample_discrete_block(d.omega, log=True)
        a = _core.log_partition(log_d, d.brownian, cfg.dt)
        b = _fallback.log_partition(log_d, d.brownian, cfg.dt)
        assert a == pytest.approx(b, rel=1e-13, abs=1e-12)


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(N=10, tau=1.0, a=(0.0,) * 10, M=50)
    with pytest.raises(ContourConstraintError):
        SimConfig(N=1, tau=1.0, a=(1.0,), alpha=(0.5,))
    with pytest.raises(ValueError):
        SimConfig(N=2, tau=1.0, a=(0.0,))


def test_mc_laplace_limits():
    cfg = SimConfig(N=3, tau=3.0, a=(0.0,) * 3, alpha=(1.5,), M=30, num_samples=200)
    est, se = mc_laplace(cfg, 0.0)
    assert est == 1.0 and se == 0.0
    est, _ = mc_laplace(cfg, 1e12)
    assert est < 1e-6
    est, se = mc_laplace(cfg, [0.0, 0.5, 2.0])
    assert est[0] == 1.0 and 1 > est[1] > est[2] > 0
    with pytest.raises(ValueError):
        mc_laplace(cfg, -1.0)


def test_ks_statistic_examples():
    uniform = lambda x: np.clip(x, 0.0, 1.0)
    assert ks_statistic(EmpiricalDistribution([0.5]), uniform) == pytest.approx(0.5)
    samples = np.random.default_rng(12).uniform(size=10000)
    assert ks_statistic(EmpiricalDistribution(samples), uniform) < 0.03


def test_empirical_distribution_and_dump(tmp_path):
    emp = EmpiricalDistribution([3.0, 1.0, 2.0], {"seed": 5})
    assert list(emp.samples) == [1.0, 2.0, 3.0] and emp.count == 3
    assert emp.cdf(2.0) == pytest.approx(2 / 3)
    side = emp.dump(tmp_path / "out" / "samples.csv")
    lines = (tmp_path / "out" / "samples.csv").read_text().split()
    assert lines[0] == "rescaled_free_energy" and len(lines) == 4
    assert json.loads(side.read_text())["seed"] == 5


def test_free_energy_distribution_location():
    cfg, sc = scaled_config(1.0, 50, num_samples=200, seed=2)
    emp = mc_free_energy_distribution(cfg, sc)
    assert emp.count == 200
    assert np.all(np.diff(emp.samples) >= 0)
    assert -3.0 <= emp.mean() <= 0.0
