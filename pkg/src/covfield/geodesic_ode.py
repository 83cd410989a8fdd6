"""Fixed-step RK4 integration of the geodesic equations.

This is a verification oracle for the closed-form exponential maps, not a
production path. Curved models are integrated in conformal charts
g = lambda(y)^2 * I (stereographic for the sphere, Poincare disk for the
hyperbolic plane), whose Christoffel symbols give

    y'' = -2 (grad phi . y') y' + |y'|^2 grad phi,    phi = log lambda.
"""

import math

import numpy as np

from .errors import ChartOverflow
from .manifolds import Euclidean, Hyperbolic2, Sphere2, _unwrap


class _StereographicChart:
    """Stereographic projection of S^2 from a pole chosen off the geodesic."""

    limit = 1e6

    def __init__(self, q, v):
        q = np.asarray(q, dtype=float)
        nv = np.linalg.norm(v)
        if nv > 0:
            w = np.cross(q, v / nv)
        else:
            a = np.zeros(3)
            a[int(np.argmin(np.abs(q)))] = 1.0
            w = np.cross(q, a)
            w /= np.linalg.norm(w)
        # pole at distance >= pi/4 from every point of the great circle
        s = -(w + q) / math.sqrt(2.0)
        s /= np.linalg.norm(s)
        e1 = w - np.dot(w, s) * s
        e1 /= np.linalg.norm(e1)
        self.s = s
        self.E = np.vstack([e1, np.cross(s, e1)])

    def to_chart(self, x, v):
        den = 1.0 - np.dot(x, self.s)
        y = self.E @ x / den
        dy = self.E @ v / den + (self.E @ x) * np.dot(v, self.s) / den**2
        return y, dy

    def from_chart(self, y):
        r2 = float(y @ y)
        return (2.0 * (y @ self.E) + (r2 - 1.0) * self.s) / (r2 + 1.0)

    @classmethod
    def grad_phi(cls, Y):
        r2 = np.sum(Y * Y, axis=-1, keepdims=True)
        if not np.all(np.isfinite(r2)) or np.any(r2 > cls.limit**2):
            raise ChartOverflow("geodesic reached the stereographic pole")
        return -2.0 * Y / (1.0 + r2)


class _PoincareChart:
    """Poincare disk after a fixed boost, so typical geodesics are curved."""

    margin = 1e-9

    def __init__(self):
        t = 0.5
        self.B = np.array(
            [[math.cosh(t), 0.0, math.sinh(t)], [0.0, 1.0, 0.0], [math.sinh(t), 0.0, math.cosh(t)]]
        )
        self.Binv = np.array(
            [[math.cosh(t), 0.0, -math.sinh(t)], [0.0, 1.0, 0.0], [-math.sinh(t), 0.0, math.cosh(t)]]
        )

    def to_chart(self, x, v):
        x = self.B @ x
        v = self.B @ v
        den = 1.0 + x[2]
        return x[:2] / den, v[:2] / den - x[:2] * v[2] / den**2

    def from_chart(self, y):
        r2 = float(y @ y)
        x = np.array([2.0 * y[0], 2.0 * y[1], 1.0 + r2]) / (1.0 - r2)
        return self.Binv @ x

    @classmethod
    def grad_phi(cls, Y):
        r2 = np.sum(Y * Y, axis=-1, keepdims=True)
        if not np.all(np.isfinite(r2)) or np.any(r2 >= 1.0 - cls.margin):
            raise ChartOverflow("geodesic reached the boundary of the Poincare disk")
        return 2.0 * Y / (1.0 - r2)


def _rhs(grad_phi, Y, dY):
    G = grad_phi(Y)
    acc = -2.0 * np.sum(G * dY, axis=1, keepdims=True) * dY + np.sum(dY * dY, axis=1, keepdims=True) * G
    return dY, acc


def _rk4(grad_phi, Y, dY, t, steps):
    """Integrate all rows at once; the chart equations are the same for every row."""
    h = float(t) / int(steps)
    for _ in range(int(steps)):
        a1, b1 = _rhs(grad_phi, Y, dY)
        a2, b2 = _rhs(grad_phi, Y + 0.5 * h * a1, dY + 0.5 * h * b1)
        a3, b3 = _rhs(grad_phi, Y + 0.5 * h * a2, dY + 0.5 * h * b2)
        a4, b4 = _rhs(grad_phi, Y + h * a3, dY + h * b3)
        Y = Y + (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        dY = dY + (h / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
    return Y


def geodesic_ode(manifold, q, v, t=1.0, steps=1000):
    """Point at time ``t`` on the geodesic from ``q`` with velocity ``v``.

    Classical RK4 with ``steps`` equal steps; the global error is O(steps^-4).

    Raises
    ------
    ChartOverflow
        If the trajectory leaves the chart (the stereographic pole on S^2,
        the disk boundary on H^2).
    """
    q = manifold.check_point(q)
    v = manifold.check_tangent(q, _unwrap(q, v))
    return geodesic_ode_batch(manifold, q[None, :], v[None, :], t, steps)[0]


def geodesic_ode_batch(manifold, Q, V, t=1.0, steps=1000):
    """``geodesic_ode`` for many (q, v) rows, integrated together."""
    if int(steps) < 1:
        raise ValueError("steps must be >= 1")
    Q = manifold.check_points(Q)
    V = np.atleast_2d(np.asarray(V, dtype=float))
    if V.shape != Q.shape:
        raise ValueError(f"{len(Q)} base points but velocity array of shape {V.shape}")
    for q, v in zip(Q, V):
        manifold.check_tangent(q, v)
    if isinstance(manifold, Euclidean):
        return Q + t * V
    if isinstance(manifold, Sphere2):
        charts = [_StereographicChart(q, v) for q, v in zip(Q, V)]
        grad_phi = _StereographicChart.grad_phi
    elif isinstance(manifold, Hyperbolic2):
        charts = [_PoincareChart()] * len(Q)
        grad_phi = _PoincareChart.grad_phi
    else:
        raise TypeError(f"no geodesic chart for {manifold!r}")
    Y0, dY0 = zip(*(c.to_chart(q, v) for c, q, v in zip(charts, Q, V)))
    Y = _rk4(grad_phi, np.array(Y0), np.array(dY0), t, steps)
    return np.array([manifold.project_point(c.from_chart(y)) for c, y in zip(charts, Y)])
