import math

import numpy as np
import pytest

from conftest import points_near, tangent
from covfield.errors import CutLocus, ValidationError
from covfield.experiments import amplitude_bound_experiment, sample_cap
from covfield.field import (
    UNIT,
    Amplitude,
    Pmf,
    amplitude_bound_factor,
    continuity_probe,
    covariance_at,
    halving_trajectory,
    intrinsic_mean,
    operator_quadratic_form,
    optimal_amplitude,
    trace_field,
    trace_field_grid,
    z_tensor,
)
from covfield.manifolds import Euclidean, Sphere2
from covfield.tensors import Chart

S2, R2 = Sphere2(), Euclidean(2)


def random_pmf(M, rng, k=6, radius=1.0):
    return Pmf(M, points_near(M, rng, k, radius), rng.dirichlet(np.ones(k)))


# -- pmf and amplitude --------------------------------------------------------


def test_pmf_validation():
    with pytest.raises(ValidationError):
        Pmf(R2, [[0, 0], [1, 0]], [0.5, 0.6])
    with pytest.raises(ValidationError):
        Pmf(R2, [[0, 0], [1, 0]], [1.5, -0.5])
    with pytest.raises(ValidationError):
        Pmf(R2, [[0, 0], [1, 0]], [1.0])
    with pytest.raises(ValidationError):
        Pmf(S2, [[0, 0, 2.0]], [1.0])
    assert len(Pmf.uniform(R2, [[0, 0], [1, 0], [0, 1]])) == 3


@pytest.mark.parametrize("text, a", [("unit", None), ("a=0.5", 0.5), ("optimal:R=3", 1.5), ("OPTIMAL:R=2", 1.0)])
def test_amplitude_parse(text, a):
    assert Amplitude.parse(text).a == a
    assert Amplitude.parse(Amplitude.parse(text).to_tag()) == Amplitude.parse(text)


@pytest.mark.parametrize("text", ["a=-1", "a=0", "optimal:R=0", "a=x", "gauss"])
def test_amplitude_parse_errors(text):
    with pytest.raises(ValidationError):
        Amplitude.parse(text)


def test_optimal_amplitude():
    assert optimal_amplitude(math.pi).a == pytest.approx(math.pi / 2)
    assert optimal_amplitude(2.0).a == 1.0
    for R in (0.5, 1.0, 3.0):
        grid = np.linspace(R / 1000, R, 1000)
        g = R * R / 3 - grid * R + grid**2
        assert abs(grid[np.argmin(g)] - R / 2) <= R / 1000


def test_amplitude_weighted_sq_at_zero():
    amp = Amplitude(0.7)
    np.testing.assert_allclose(amp.weighted_sq([0.0, 0.7, 1.0]), [0.0, 0.0, 0.09])
    assert amplitude_bound_factor(2.0, 1.0) == pytest.approx(2 * (4 / 3 - 2 + 1))


# -- covariance tensors -------------------------------------------------------


def test_point_mass_matches_z_tensor(manifold, rng):
    q, p = points_near(manifold, rng, 2)
    T = covariance_at(manifold, q, Pmf.point_mass(manifold, p))
    np.testing.assert_allclose(T.sigma, z_tensor(manifold, q, p), atol=1e-13)
    assert T.degenerate
    d = manifold.distance(q, p)
    amp = Amplitude(0.3)
    Ta = covariance_at(manifold, q, Pmf.point_mass(manifold, p), amp)
    np.testing.assert_allclose(Ta.sigma, z_tensor(manifold, q, p) * amp(d), atol=1e-13)


def test_point_mass_at_q_is_zero(manifold, rng):
    q = points_near(manifold, rng, 1)[0]
    for amp in (UNIT, Amplitude(0.5)):
        T = covariance_at(manifold, q, Pmf.point_mass(manifold, q), amp)
        assert np.all(T.sigma == 0.0)


def test_euclidean_toy():
    pmf = Pmf(R2, [[0.0, 0.0], [1.0, 0.0]], [0.5, 0.5])
    T = covariance_at(R2, [0.0, 0.0], pmf)
    np.testing.assert_allclose(T.sigma, [[0.5, 0.0], [0.0, 0.0]], atol=1e-15)


def test_euclidean_moment_decomposition(rng):
    for n in (2, 3):
        M = Euclidean(n)
        for _ in range(10):
            pmf = random_pmf(M, rng, 8)
            mu = pmf.weights @ pmf.support
            D = pmf.support - mu
            S_mu = (D * pmf.weights[:, None]).T @ D
            q = rng.normal(size=n) * 2
            T = covariance_at(M, q, pmf)
            np.testing.assert_allclose(T.sigma, S_mu + np.outer(q - mu, q - mu), atol=1e-10)


def test_psd_and_trace_identity(manifold, rng):
    for amp in (UNIT, Amplitude(0.8)):
        pmf = random_pmf(manifold, rng)
        for q in points_near(manifold, rng, 10):
            T = covariance_at(manifold, q, pmf, amp)
            assert np.linalg.eigvalsh(T.sigma)[0] >= -1e-12
            assert trace_field(manifold, q, pmf, amp) == pytest.approx(np.trace(T.sigma), abs=1e-12)


def test_trace_field_grid_matches(manifold, rng):
    pmf = random_pmf(manifold, rng)
    Q = points_near(manifold, rng, 7)
    np.testing.assert_allclose(trace_field_grid(manifold, Q, pmf), [trace_field(manifold, q, pmf) for q in Q],
                               rtol=1e-14)


def test_cut_locus_in_support():
    q = np.array([0.0, 0.0, 1.0])
    pmf = Pmf(S2, [[0.0, 0.0, -1.0], [1.0, 0.0, 0.0]], [0.5, 0.5])
    with pytest.raises(CutLocus):
        covariance_at(S2, q, pmf)
    with pytest.raises(CutLocus):
        trace_field(S2, q, pmf)


def test_quadratic_form(manifold, rng):
    q = points_near(manifold, rng, 1)[0]
    chart = Chart.default(manifold, q)
    pmf = random_pmf(manifold, rng)
    T = covariance_at(manifold, q, pmf)
    v, w = tangent(manifold, q, rng), tangent(manifold, q, rng)
    zero = np.zeros(manifold.ambient_dim)
    assert operator_quadratic_form(T, zero, zero) == 0.0
    assert operator_quadratic_form(T, v, w) == pytest.approx(operator_quadratic_form(T, w, v), abs=1e-13)
    assert operator_quadratic_form(T, v, v) > 0
    from covfield.field import CovarianceTensor

    ident = CovarianceTensor(chart, np.eye(manifold.dim))
    assert operator_quadratic_form(ident, v, w) == pytest.approx(manifold.inner(v, w), abs=1e-12)


def test_small_example_sphere_pair_trace():
    # frozen Monte Carlo value of the mean pairwise tr(G Z) for 400 points
    from covfield.experiments import demo_s2

    rep = demo_s2(400, seed=3)
    assert abs(rep["unit"]["z"]) < 3 and abs(rep["amplitude"]["z"]) < 3


# -- intrinsic mean -----------------------------------------------------------


def test_mean_euclidean(rng):
    pmf = random_pmf(Euclidean(3), rng, 9)
    res = intrinsic_mean(pmf)
    np.testing.assert_allclose(res.point, pmf.weights @ pmf.support, atol=1e-12)
    assert res.iterations <= 2


def test_mean_two_masses():
    pmf = Pmf(S2, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], [0.5, 0.5])
    res = intrinsic_mean(pmf)
    np.testing.assert_allclose(res.point, [1 / math.sqrt(2), 1 / math.sqrt(2), 0.0], atol=1e-10)


def test_mean_against_grid(rng):
    pmf = Pmf(S2, sample_cap(rng, 7, 0.8), rng.dirichlet(np.ones(7)))
    res = intrinsic_mean(pmf)
    G = sample_cap(np.random.default_rng(1), 40000, 1.0)
    rho = trace_field_grid(S2, G, pmf)
    best = G[np.argmin(rho)]
    # 40000 points on a cap of radius 1 leave gaps of about 0.02
    assert S2.distance(res.point, best) <= 0.03
    assert trace_field(S2, res.point, pmf) <= rho.min() + 1e-12
    assert res.grad_norm <= 1e-10


# -- continuity ---------------------------------------------------------------


def test_constant_trajectory(manifold, rng):
    pmf = random_pmf(manifold, rng)
    q0 = points_near(manifold, rng, 1, 0.5)[0]
    rep = continuity_probe(pmf, q0, [q0] * 5)
    assert rep.final_deviation() == 0.0


def test_euclidean_trace_rate(rng):
    pmf = random_pmf(R2, rng)
    q0 = np.array([0.3, -0.2])
    v = np.array([0.6, 0.8])
    rep = continuity_probe(pmf, q0, halving_trajectory(R2, q0, v, 20))
    mu = pmf.weights @ pmf.support
    rho = lambda q: trace_field(R2, mu, pmf) + float(np.sum((q - mu) ** 2))  # noqa: E731
    np.testing.assert_allclose(rep.traces, [rho(q0 + v * 0.5**k) for k in range(20)], rtol=1e-12)
    # first-order rate: deviation / distance stays bounded
    ratio = rep.trace_dev / rep.distances
    assert ratio[-1] <= 1.1 * ratio[-5]


def test_sphere_eigen_gaps_shrink(rng):
    pmf = Pmf(S2, sample_cap(rng, 6, 1.0), rng.dirichlet(np.ones(6)))
    q0 = sample_cap(rng, 1, 0.5)[0]
    v = tangent(S2, q0, rng, 0.5)
    rep = continuity_probe(pmf, q0, halving_trajectory(S2, q0, v, 30), amplitude=Amplitude(0.4))
    assert np.all(np.diff(rep.eig_dev[5:]) <= 1e-15)
    assert rep.final_deviation() < 1e-6


# -- amplitude bound ----------------------------------------------------------


def test_amplitude_bound_small():
    rep = amplitude_bound_experiment(1.5, n_samples=5000, n_q=60, grid=10, seed=2)
    assert np.all(rep["empirical_max"] <= rep["bound"] + 4 * rep["stderr"])
    assert abs(rep["argmin_a"] - 0.75) <= rep["grid_step"] + 1e-12


def test_mean_no_convergence(rng):
    from covfield.errors import NoConvergence

    pmf = Pmf(S2, sample_cap(rng, 5, 1.0), rng.dirichlet(np.ones(5)))
    with pytest.raises(NoConvergence):
        intrinsic_mean(pmf, max_iter=1, tol=1e-14)
