"""Charts as tangent frames, and the coordinate-change rules for tensors.

A :class:`Chart` at q is a basis of the tangent space (rows of ``frame``).
Coordinates x of a tangent vector v solve v = sum_i x_i e_i. Changing
coordinates by a nonsingular A (y = A x) moves

* vectors:                v_y = A v_x
* the metric (covariant): G_y = A^-T G_x A^-1
* contravariant 2-tensors: W_y = A W_x A^T
* (1,1) operators such as G Sigma: L_y = A^-T L_x A^T
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularJacobian, ValidationError

#: Jacobians with a larger 2-norm condition number are rejected.
MAX_CONDITION = 1e12


@dataclass(frozen=True)
class Chart:
    """Coordinates at ``base`` given by the tangent basis ``frame``."""

    manifold: object
    base: np.ndarray
    frame: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "base", np.asarray(self.base, dtype=float))
        frame = np.atleast_2d(np.asarray(self.frame, dtype=float))
        if frame.shape != (self.manifold.dim, self.manifold.ambient_dim):
            raise ValidationError(f"frame has shape {frame.shape}")
        object.__setattr__(self, "frame", frame)

    @classmethod
    def default(cls, manifold, q):
        """Orthonormal chart used throughout the library unless told otherwise."""
        q = manifold.check_point(q)
        return cls(manifold, q, manifold.frame(q))

    def gram(self):
        E = self.frame
        return np.array([[self.manifold.inner(a, b) for b in E] for a in E])

    def is_orthonormal(self, tol=1e-10):
        return bool(np.allclose(self.gram(), np.eye(self.manifold.dim), atol=tol))

    def components(self, v):
        """Coordinates of ambient tangent vector(s) ``v`` (rows) in this chart."""
        v = np.asarray(v, dtype=float)
        rhs = np.array([[self.manifold.inner(e, row) for e in self.frame] for row in np.atleast_2d(v)])
        x = np.linalg.solve(self.gram(), rhs.T).T
        return x[0] if v.ndim == 1 else x

    def vector(self, x):
        return np.asarray(x, dtype=float) @ self.frame

    def transformed(self, A):
        """Chart whose coordinates are y = A x."""
        A = chart_jacobian(A)
        return Chart(self.manifold, self.base, np.linalg.inv(A).T @ self.frame)


def chart_jacobian(A):
    """Validate a coordinate-change Jacobian (square, well conditioned)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"Jacobian must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValidationError("Jacobian has non-finite entries")
    if np.linalg.cond(A) > MAX_CONDITION:
        raise SingularJacobian("chart Jacobian is numerically singular")
    return A


def metric_at(chart):
    """Coordinate matrix G_x of the metric in ``chart``."""
    return chart.gram()


def transform_vector(v_x, A):
    return chart_jacobian(A) @ np.asarray(v_x, dtype=float)


def transform_metric(G_x, A):
    Ainv = np.linalg.inv(chart_jacobian(A))
    G = Ainv.T @ np.asarray(G_x, dtype=float) @ Ainv
    return 0.5 * (G + G.T)


def transform_contravariant(W_x, A):
    A = chart_jacobian(A)
    W = A @ np.asarray(W_x, dtype=float) @ A.T
    return 0.5 * (W + W.T)


def transform_operator(L_x, A):
    """Similarity L_y = A L_x A^-1, for linear maps acting on vector coordinates."""
    A = chart_jacobian(A)
    return A @ np.asarray(L_x, dtype=float) @ np.linalg.inv(A)


def transform_mixed(T_x, A):
    """Rule for the product of a covariant and a contravariant tensor, e.g. G Sigma.

    (G W)_y = A^-T (G W)_x A^T, a similarity by A^-T, so the spectrum is
    chart invariant.
    """
    A = chart_jacobian(A)
    return np.linalg.inv(A).T @ np.asarray(T_x, dtype=float) @ A.T
