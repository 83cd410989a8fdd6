import numpy as np
import pytest

from covfield.experiments import random_points, sample_cap
from covfield.manifolds import Euclidean, Hyperbolic2, Sphere2

MANIFOLDS = [Euclidean(2), Euclidean(3), Sphere2(), Hyperbolic2()]


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture(params=MANIFOLDS, ids=lambda m: m.tag)
def manifold(request):
    return request.param


def tangent(M, q, rng, length=None):
    """Random tangent vector at q, optionally rescaled to a given length."""
    v = M.project_tangent(q, rng.normal(size=M.ambient_dim))
    if length is not None:
        v = v * (length / M.norm(v))
    return v


def points_near(M, rng, k, radius=1.0):
    """Points safely inside every log-map domain (a cap on the sphere)."""
    if isinstance(M, Sphere2):
        return sample_cap(rng, k, radius)
    return random_points(M, rng, k)


# -- acceptance summary ---------------------------------------------------------

ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, line = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {line}")
