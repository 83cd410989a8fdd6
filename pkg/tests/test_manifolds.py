import math

import numpy as np
import pytest

from conftest import MANIFOLDS, points_near, tangent
from covfield.errors import ChartOverflow, CutLocus, MismatchedBase, ValidationError
from covfield.geodesic_ode import geodesic_ode
from covfield.manifolds import (
    CutLocusWarning,
    Euclidean,
    Hyperbolic2,
    Sphere2,
    TangentVector,
    distance,
    exp_map,
    log_map,
    manifold_from_tag,
    sample_hyperbolic_ball,
)

S2, H2 = Sphere2(), Hyperbolic2()


def test_dimensions():
    assert [M.dim for M in MANIFOLDS] == [2, 3, 2, 2]
    assert S2.injectivity_radius == math.pi
    assert math.isinf(H2.injectivity_radius) and math.isinf(Euclidean(4).injectivity_radius)


@pytest.mark.parametrize("tag", ["euclidean:2", "euclidean:5", "sphere2", "hyperbolic2"])
def test_tag_round_trip(tag):
    assert manifold_from_tag(tag).tag == tag


@pytest.mark.parametrize("tag", ["torus", "euclidean:x", "euclidean:0"])
def test_bad_tags(tag):
    with pytest.raises(ValidationError):
        manifold_from_tag(tag)


def test_point_validation():
    with pytest.raises(ValidationError):
        S2.check_point([1.0, 1.0, 0.0])
    with pytest.raises(ValidationError):
        H2.check_point([0.0, 0.0, -1.0])
    with pytest.raises(ValidationError):
        Euclidean(2).check_point([1.0, 2.0, 3.0])
    with pytest.raises(ValidationError):
        Euclidean(2).check_point([np.nan, 0.0])
    # relative tolerance far out on the hyperboloid
    x = H2.project_point([30.0, -40.0, 0.0])
    assert H2.check_point(x) is not None


def test_sphere_known_values():
    q = np.array([0.0, 0.0, 1.0])
    p = np.array([1.0, 0.0, 0.0])
    assert distance(S2, q, p) == pytest.approx(math.pi / 2, abs=1e-15)
    np.testing.assert_allclose(S2.log(q, p), [math.pi / 2, 0, 0], atol=1e-15)
    np.testing.assert_allclose(S2.exp(q, [math.pi / 2, 0, 0]), p, atol=1e-15)


def test_hyperbolic_known_values():
    q = np.array([0.0, 0.0, 1.0])
    p = np.array([math.sinh(1.5), 0.0, math.cosh(1.5)])
    assert distance(H2, q, p) == pytest.approx(1.5, rel=1e-14)
    np.testing.assert_allclose(H2.log(q, p), [1.5, 0, 0], atol=1e-14)
    np.testing.assert_allclose(H2.exp(q, [1.5, 0, 0]), p, rtol=1e-14)


def test_round_trip(manifold, rng):
    for _ in range(50):
        q = manifold.random_point(rng) if not isinstance(manifold, Euclidean) else rng.normal(size=manifold.dim)
        r = 0.9 * manifold.injectivity_radius if isinstance(manifold, Sphere2) else 3.0
        v = tangent(manifold, q, rng, rng.uniform(0, r))
        p = manifold.exp(q, v)
        manifold.check_point(p)
        assert np.linalg.norm(manifold.log(q, p) - v) <= 1e-9
        assert manifold.distance(q, p) == pytest.approx(manifold.norm(v), abs=1e-10)


def test_distance_symmetry_and_triangle(manifold, rng):
    X = points_near(manifold, rng, 30, radius=1.4)
    D = manifold.dist_matrix(X, X)
    np.testing.assert_allclose(D, D.T, atol=1e-12)
    assert np.all(np.abs(np.diag(D)) <= 1e-7)
    for i, j, k in rng.integers(0, 30, size=(200, 3)):
        assert D[i, k] <= D[i, j] + D[j, k] + 1e-12


def test_frames_are_orthonormal(manifold, rng):
    for _ in range(20):
        q = points_near(manifold, rng, 1)[0]
        E = manifold.frame(q)
        G = np.array([[manifold.inner(a, b) for b in E] for a in E])
        np.testing.assert_allclose(G, np.eye(manifold.dim), atol=1e-12)
        for e in E:
            manifold.check_tangent(q, e)


def test_sphere_cut_locus():
    q = np.array([0.0, 0.0, 1.0])
    with pytest.raises(CutLocus) as info:
        S2.log_many(q, [[1.0, 0.0, 0.0], [0.0, 0.0, -1.0]])
    assert list(info.value.indices) == [1]
    with pytest.raises(CutLocus):
        S2.exp(q, [math.pi, 0.0, 0.0])
    # wrap=True allows crossing the cut locus
    np.testing.assert_allclose(S2.exp(q, [2 * math.pi, 0, 0], wrap=True), q, atol=1e-12)
    with pytest.warns(CutLocusWarning):
        v = S2.log(q, [0.0, 0.0, -1.0], strict=False)
    assert np.linalg.norm(v) == pytest.approx(math.pi)


def test_tangent_vector_base_mismatch():
    q = np.array([0.0, 0.0, 1.0])
    v = TangentVector(np.array([1.0, 0.0, 0.0]), [0.0, 0.1, 0.0])
    with pytest.raises(MismatchedBase):
        exp_map(S2, q, v)
    w = log_map(S2, q, [0.0, 1.0, 0.0])
    assert isinstance(w, TangentVector)
    np.testing.assert_allclose(exp_map(S2, q, w), [0.0, 1.0, 0.0], atol=1e-15)


def test_non_tangent_rejected():
    with pytest.raises(ValidationError):
        S2.exp([0.0, 0.0, 1.0], [0.0, 0.0, 0.5])
    with pytest.raises(ValidationError):
        H2.exp([0.0, 0.0, 1.0], [0.0, 0.0, 0.5])


def test_stable_log_small_distances(manifold, rng):
    q = points_near(manifold, rng, 1)[0]
    v = tangent(manifold, q, rng, 1e-9)
    p = manifold.exp(q, v)
    np.testing.assert_allclose(manifold.log(q, p), v, atol=1e-16 + 1e-7 * 1e-9)


@pytest.mark.parametrize("M", [Euclidean(3), S2, H2], ids=lambda m: m.tag)
def test_geodesic_oracle(M, rng):
    for _ in range(5):
        q = points_near(M, rng, 1)[0]
        v = tangent(M, q, rng, rng.uniform(0.1, 2.5))
        x = geodesic_ode(M, q, v, steps=1000)
        assert np.linalg.norm(x - M.exp(q, v)) <= 1e-8


def test_geodesic_oracle_north_pole():
    # a chart singular at the pole would fail here
    q = np.array([0.0, 0.0, 1.0])
    x = geodesic_ode(S2, q, [0.0, 1.0, 0.0])
    np.testing.assert_allclose(x, [0.0, math.sin(1.0), math.cos(1.0)], atol=1e-10)


def test_geodesic_oracle_overflow():
    with pytest.raises(ChartOverflow):
        geodesic_ode(H2, np.array([0.0, 0.0, 1.0]), [40.0, 0.0, 0.0], steps=50)


def test_hyperbolic_ball_sampler(rng):
    X = sample_hyperbolic_ball(rng, 2000, 2.0)
    d = H2.dist_matrix([[0.0, 0.0, 1.0]], X)[0]
    assert d.max() <= 2.0
    # area measure puts the median radius at arccosh(1 + (cosh 2 - 1) / 2)
    assert np.median(d) == pytest.approx(math.acosh(1 + (math.cosh(2) - 1) / 2), abs=0.05)
