"""Partition of a spherical cap into cells of bounded geodesic diameter.

Cells are a polar cap plus latitude bands (in colatitude measured from the
cap centre) cut into equal longitude sectors. Each cell is checked
numerically against the diameter bound by sampling its boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .manifolds import Sphere2


def rotation_to(center):
    """Rotation matrix R with R @ (0, 0, 1) = center."""
    c = np.asarray(center, dtype=float)
    c = c / np.linalg.norm(c)
    z = np.array([0.0, 0.0, 1.0])
    v = np.cross(z, c)
    s, cos = np.linalg.norm(v), float(c @ z)
    if s < 1e-15:
        return np.eye(3) if cos > 0 else np.diag([1.0, -1.0, -1.0])
    K = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    return np.eye(3) + K + K @ K * ((1 - cos) / s**2)


def _polar(t, phi):
    st = np.sin(t)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(t) * np.ones_like(phi)], axis=-1)


@dataclass(frozen=True)
class Cell:
    """{t0 <= colatitude < t1, phi0 <= longitude < phi1} in the cap's frame."""

    t0: float
    t1: float
    phi0: float
    phi1: float
    rotation: np.ndarray

    @property
    def area(self):
        return (self.phi1 - self.phi0) * (math.cos(self.t0) - math.cos(self.t1))

    def center(self):
        if self.t0 == 0.0:
            return self.rotation @ np.array([0.0, 0.0, 1.0])
        t = 0.5 * (self.t0 + self.t1)
        return self.rotation @ _polar(t, np.array(0.5 * (self.phi0 + self.phi1)))

    def sample(self, rng, size=None):
        n = 1 if size is None else size
        z = rng.uniform(math.cos(self.t1), math.cos(self.t0), n)
        phi = rng.uniform(self.phi0, self.phi1, n)
        s = np.sqrt(1.0 - z * z)
        X = np.column_stack([s * np.cos(phi), s * np.sin(phi), z]) @ self.rotation.T
        return X[0] if size is None else X

    def contains(self, X):
        Y = np.atleast_2d(X) @ self.rotation
        t = np.arccos(np.clip(Y[:, 2], -1.0, 1.0))
        phi = np.mod(np.arctan2(Y[:, 1], Y[:, 0]), 2 * math.pi)
        return (t >= self.t0) & (t < self.t1) & (phi >= self.phi0) & (phi < self.phi1)

    def boundary(self, n=64):
        phis = np.linspace(self.phi0, self.phi1, n)
        ts = np.linspace(self.t0, self.t1, n)
        pts = [_polar(self.t1, phis), _polar(self.t0, phis)]
        if self.phi1 - self.phi0 < 2 * math.pi - 1e-12:
            pts += [_polar(ts, np.full(n, self.phi0)), _polar(ts, np.full(n, self.phi1))]
        return np.vstack(pts) @ self.rotation.T

    def diameter(self, n=64):
        """Numerical diameter: max pairwise geodesic distance of boundary samples."""
        B = self.boundary(n)
        return float(np.max(Sphere2().dist_matrix(B, B)))


def cap_partition(radius, m, center=(0.0, 0.0, 1.0), *, verify=True):
    """Cells of geodesic diameter <= 1/m covering the cap of given radius."""
    if not (0 < radius < math.pi):
        raise ValidationError("cap radius must lie in (0, pi)")
    h = 1.0 / m
    R = rotation_to(center)
    c0 = min(0.475 * h, radius)
    cells = [Cell(0.0, c0, 0.0, 2 * math.pi, R)]
    if c0 < radius:
        nb = max(1, math.ceil((radius - c0) / (0.7 * h)))
        edges = np.linspace(c0, radius, nb + 1)
        for t0, t1 in zip(edges[:-1], edges[1:]):
            widest = 1.0 if t0 <= math.pi / 2 <= t1 else max(math.sin(t0), math.sin(t1))
            nl = max(1, math.ceil(2 * math.pi * widest / (0.7 * h)))
            while True:
                band = [
                    Cell(float(t0), float(t1), 2 * math.pi * i / nl, 2 * math.pi * (i + 1) / nl, R)
                    for i in range(nl)
                ]
                if not verify or band[0].diameter() <= h:
                    break
                nl += 1
            cells.extend(band)
    if verify:
        worst = max(c.diameter() for c in cells)
        if worst > h + 1e-12:
            raise AssertionError(f"partition cell diameter {worst} exceeds {h}")
    return cells


def assign_cells(cells, X):
    """Index of the cell containing each row of X (-1 when outside all cells)."""
    X = np.atleast_2d(X)
    idx = np.full(len(X), -1)
    for j, c in enumerate(cells):
        idx[c.contains(X) & (idx < 0)] = j
    return idx
