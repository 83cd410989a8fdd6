"""Closed-form geometry of the three model manifolds.

Points and tangent vectors are stored in ambient coordinates: R^n for the
Euclidean space, unit vectors of R^3 for the sphere, and the upper sheet of
the hyperboloid x3^2 - x1^2 - x2^2 = 1 for the hyperbolic plane. Tangent
vectors at q are ambient vectors orthogonal to q under the manifold's inner
product (Euclidean dot product, or the Minkowski form with signature ++-).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import CutLocus, MismatchedBase, ValidationError

#: Sphere log maps raise when the angle to p exceeds pi - CUT_TOL.
CUT_TOL = 1e-6


class CutLocusWarning(UserWarning):
    """Lenient log map evaluated at (or next to) the cut locus."""


@dataclass(frozen=True)
class TangentVector:
    """A tangent vector together with its base point."""

    base: np.ndarray
    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "base", np.asarray(self.base, dtype=float))
        object.__setattr__(self, "components", np.asarray(self.components, dtype=float))


def _unwrap(q, v):
    if isinstance(v, TangentVector):
        if v.base.shape != q.shape or not np.allclose(v.base, q, rtol=0.0, atol=1e-12):
            raise MismatchedBase("tangent vector is based at a different point")
        return v.components
    return np.asarray(v, dtype=float)


class Manifold:
    """Common interface; concrete geometry lives in the subclasses."""

    kind: int
    dim: int
    ambient_dim: int
    tag: str
    injectivity_radius: float = math.inf
    point_tol = 1e-12
    tangent_tol = 1e-10

    def __eq__(self, other):
        return isinstance(other, Manifold) and self.tag == other.tag

    def __hash__(self):
        return hash(self.tag)

    def __repr__(self):
        return f"{type(self).__name__}({self.tag!r})"

    # inner products -------------------------------------------------------

    def inner(self, u, v):
        return float(np.dot(u, v))

    def norm(self, v):
        return math.sqrt(max(self.inner(v, v), 0.0))

    # validation -----------------------------------------------------------

    def check_point(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.ambient_dim,):
            raise ValidationError(
                f"{self.tag} point needs {self.ambient_dim} coordinates, got shape {x.shape}"
            )
        if not np.all(np.isfinite(x)):
            raise ValidationError("point has non-finite coordinates")
        return x

    def check_points(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        for i, x in enumerate(X):
            try:
                self.check_point(x)
            except ValidationError as exc:
                raise ValidationError(f"point {i}: {exc}") from None
        return X

    def project_point(self, x):
        return np.asarray(x, dtype=float)

    def project_tangent(self, q, v):
        return np.asarray(v, dtype=float)

    def check_tangent(self, q, v):
        v = np.asarray(v, dtype=float)
        if v.shape != (self.ambient_dim,):
            raise ValidationError(f"tangent vector has shape {v.shape}")
        return v

    # geometry -------------------------------------------------------------

    def distance(self, q, p):
        return float(kernels.dist_matrix(self.kind, np.atleast_2d(q), np.atleast_2d(p))[0, 0])

    def dist_matrix(self, Q, P):
        return kernels.dist_matrix(self.kind, np.atleast_2d(Q), np.atleast_2d(P))

    def exp(self, q, v, *, wrap=False):
        raise NotImplementedError

    def log_many(self, q, P, *, strict=True):
        q = np.asarray(q, dtype=float)
        return kernels.log_batch(self.kind, q, np.atleast_2d(P))

    def log(self, q, p, *, strict=True):
        return self.log_many(q, np.atleast_2d(p), strict=strict)[0]

    def frame(self, q):
        """Orthonormal basis of the tangent space at q, one vector per row."""
        raise NotImplementedError

    def random_point(self, rng):
        raise NotImplementedError


class Euclidean(Manifold):
    kind = kernels.EUCLIDEAN

    def __init__(self, n=2):
        if int(n) < 1:
            raise ValidationError("Euclidean dimension must be positive")
        self.dim = self.ambient_dim = int(n)
        self.tag = f"euclidean:{self.dim}"

    def exp(self, q, v, *, wrap=False):
        q = self.check_point(q)
        return q + _unwrap(q, v)

    def frame(self, q):
        return np.eye(self.dim)

    def random_point(self, rng, scale=1.0):
        return rng.normal(scale=scale, size=self.dim)


class Sphere2(Manifold):
    """The round unit sphere in R^3."""

    kind = kernels.SPHERE
    dim = 2
    ambient_dim = 3
    tag = "sphere2"
    injectivity_radius = math.pi

    def check_point(self, x):
        x = super().check_point(x)
        if abs(np.linalg.norm(x) - 1.0) > self.point_tol:
            raise ValidationError(f"sphere point has norm {np.linalg.norm(x)!r}, expected 1")
        return x

    def project_point(self, x):
        x = np.asarray(x, dtype=float)
        return x / np.linalg.norm(x, axis=-1, keepdims=True)

    def project_tangent(self, q, v):
        v = np.asarray(v, dtype=float)
        return v - np.dot(v, q) * q

    def check_tangent(self, q, v):
        v = super().check_tangent(q, v)
        if abs(np.dot(v, q)) > self.tangent_tol * max(1.0, np.linalg.norm(v)):
            raise ValidationError("vector is not tangent to the sphere at the base point")
        return v

    def exp(self, q, v, *, wrap=False):
        q = self.check_point(q)
        v = self.check_tangent(q, _unwrap(q, v))
        t = np.linalg.norm(v)
        if t >= math.pi and not wrap:
            raise CutLocus(f"|v| = {t:.6g} reaches the injectivity radius pi")
        if t == 0.0:
            return q.copy()
        x = math.cos(t) * q + (math.sin(t) / t) * v
        return x / np.linalg.norm(x)

    def log_many(self, q, P, *, strict=True, cut_tol=CUT_TOL):
        q = np.asarray(q, dtype=float)
        P = np.atleast_2d(np.asarray(P, dtype=float))
        L = kernels.log_batch(self.kind, q, P)
        near = np.flatnonzero(P @ q < math.cos(math.pi - cut_tol))
        if near.size:
            if strict:
                raise CutLocus(
                    f"{near.size} point(s) within {cut_tol:g} of the antipode of the base",
                    indices=near,
                )
            warnings.warn("log map evaluated next to the antipode", CutLocusWarning, stacklevel=2)
            e = self.frame(q)[0]
            for i in near:
                u = P[i] - np.dot(P[i], q) * q
                nu = np.linalg.norm(u)
                direction = u / nu if nu > 1e-8 else e
                L[i] = self.distance(q, P[i]) * direction
        return L

    def frame(self, q):
        q = np.asarray(q, dtype=float)
        a = np.zeros(3)
        a[int(np.argmin(np.abs(q)))] = 1.0
        e1 = a - np.dot(a, q) * q
        e1 /= np.linalg.norm(e1)
        return np.vstack([e1, np.cross(q, e1)])

    def random_point(self, rng):
        x = rng.normal(size=3)
        return x / np.linalg.norm(x)


class Hyperbolic2(Manifold):
    """Hyperboloid model: x3^2 - x1^2 - x2^2 = 1, x3 > 0."""

    kind = kernels.HYPERBOLIC
    dim = 2
    ambient_dim = 3
    tag = "hyperbolic2"

    def inner(self, u, v):
        return float(u[0] * v[0] + u[1] * v[1] - u[2] * v[2])

    def check_point(self, x):
        x = super().check_point(x)
        form = x[2] ** 2 - x[0] ** 2 - x[1] ** 2
        if x[2] <= 0.0 or abs(form - 1.0) > self.point_tol * max(1.0, x[2] ** 2):
            raise ValidationError("point is not on the upper sheet of the hyperboloid")
        return x

    def project_point(self, x):
        x = np.array(x, dtype=float)
        x[..., 2] = np.sqrt(1.0 + x[..., 0] ** 2 + x[..., 1] ** 2)
        return x

    def project_tangent(self, q, v):
        v = np.asarray(v, dtype=float)
        return v + self.inner(v, q) * q

    def check_tangent(self, q, v):
        v = super().check_tangent(q, v)
        scale = max(1.0, float(np.linalg.norm(v) * np.linalg.norm(q)))
        if abs(self.inner(v, q)) > self.tangent_tol * scale:
            raise ValidationError("vector is not tangent to the hyperboloid at the base point")
        return v

    def exp(self, q, v, *, wrap=False):
        q = self.check_point(q)
        v = self.check_tangent(q, _unwrap(q, v))
        t = self.norm(v)
        if t == 0.0:
            return q.copy()
        return self.project_point(math.cosh(t) * q + (math.sinh(t) / t) * v)

    def frame(self, q):
        # first two columns of the boost taking (0, 0, 1) to q
        q = np.asarray(q, dtype=float)
        s, g = q[:2], q[2]
        E = np.zeros((2, 3))
        E[:, :2] = np.eye(2) + np.outer(s, s) / (g + 1.0)
        E[:, 2] = s
        return E

    def random_point(self, rng, radius=2.0):
        return sample_hyperbolic_ball(rng, 1, radius)[0]


def sample_hyperbolic_ball(rng, k, radius):
    """Uniform (hyperbolic area) sample from the ball of given radius at (0,0,1)."""
    u = rng.uniform(size=k)
    r = np.arccosh(1.0 + u * (math.cosh(radius) - 1.0))
    phi = rng.uniform(0.0, 2.0 * math.pi, size=k)
    return np.column_stack([np.sinh(r) * np.cos(phi), np.sinh(r) * np.sin(phi), np.cosh(r)])


def sample_sphere(rng, k):
    """Uniform sample on S^2 via normalised Gaussian triples."""
    x = rng.normal(size=(k, 3))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def manifold_from_tag(tag):
    """Parse ``euclidean:n``, ``sphere2`` or ``hyperbolic2``."""
    tag = str(tag).strip().lower()
    if tag == "sphere2":
        return Sphere2()
    if tag == "hyperbolic2":
        return Hyperbolic2()
    if tag.startswith("euclidean"):
        _, _, n = tag.partition(":")
        try:
            return Euclidean(int(n) if n else 2)
        except ValueError:
            raise ValidationError(f"bad Euclidean dimension in manifold tag {tag!r}") from None
    raise ValidationError(f"unknown manifold tag {tag!r}")


# functional spellings ------------------------------------------------------


def exp_map(manifold, q, v, **kw):
    return manifold.exp(q, v, **kw)


def log_map(manifold, q, p, **kw):
    q = manifold.check_point(q)
    p = manifold.check_point(p)
    return TangentVector(q, manifold.log(q, p, **kw))


def distance(manifold, q, p):
    return manifold.distance(manifold.check_point(q), manifold.check_point(p))
