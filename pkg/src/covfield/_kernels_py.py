"""Pure-numpy implementations of the hot kernels.

Every function here has a compiled twin in ``_kernels.pyx`` with the same
signature and the same arithmetic; ``covfield.kernels`` picks one at import.
Manifold kinds are encoded as small integers: 0 Euclidean, 1 unit sphere,
2 hyperboloid (signature + + -).
"""

import numpy as np

EUCLIDEAN, SPHERE, HYPERBOLIC = 0, 1, 2


def _inner(kind, x, y):
    if kind == HYPERBOLIC:
        return x[..., 0] * y[..., 0] + x[..., 1] * y[..., 1] - x[..., 2] * y[..., 2]
    return np.sum(x * y, axis=-1)


def _dist_from_delta(kind, x, y):
    if kind == SPHERE:
        cross = np.linalg.norm(np.cross(x, y), axis=-1)
        return np.arctan2(cross, np.sum(x * y, axis=-1))
    delta = y - x
    if kind == HYPERBOLIC:
        s = np.maximum(_inner(kind, delta, delta), 0.0)
        return 2.0 * np.arcsinh(0.5 * np.sqrt(s))
    return np.sqrt(np.sum(delta * delta, axis=-1))


def dist_matrix(kind, Q, P):
    Q = np.ascontiguousarray(Q, dtype=float)
    P = np.ascontiguousarray(P, dtype=float)
    return _dist_from_delta(kind, Q[:, None, :], P[None, :, :])


def log_batch(kind, q, P):
    """Ambient log-map vectors log_q(p_i), one row per p_i."""
    q = np.asarray(q, dtype=float)
    P = np.atleast_2d(np.asarray(P, dtype=float))
    return _log_rows(kind, q[None, :], P)


def _log_rows(kind, q, P):
    delta = P - q
    if kind == EUCLIDEAN:
        return delta
    if kind == SPHERE:
        half = 0.5 * np.sum(delta * delta, axis=1)
        u = delta + half[:, None] * q
        sin_t = np.linalg.norm(u, axis=1)
        theta = np.arctan2(sin_t, 1.0 - half)
        safe = np.where(sin_t > 1e-300, sin_t, 1.0)
        scale = np.where(theta > 1e-8, theta / safe, 1.0 + theta * theta / 6.0)
        return u * scale[:, None]
    s = np.maximum(_inner(kind, delta, delta), 0.0)
    d = 2.0 * np.arcsinh(0.5 * np.sqrt(s))
    u = delta - (0.5 * s)[:, None] * q
    sinh_d = np.sinh(d)
    safe = np.where(sinh_d > 1e-300, sinh_d, 1.0)
    scale = np.where(d > 1e-8, d / safe, 1.0 - d * d / 6.0)
    return u * scale[:, None]


def weighted_covariance(kind, q, P, w, a, frame):
    """Frame components of sum_i w_i r(d_i) log_i log_i'.

    ``a == 0`` selects r = 1, otherwise r(t) = (1 - a/t)^2; points with
    d = 0 contribute nothing.
    """
    L = log_batch(kind, q, P)
    C = _inner(kind, L[:, None, :], np.asarray(frame, dtype=float)[None, :, :])
    w = np.asarray(w, dtype=float)
    if a != 0.0:
        d = np.sqrt(np.maximum(_inner(kind, L, L), 0.0))
        safe = np.where(d > 0.0, d, 1.0)
        w = np.where(d > 0.0, w * (1.0 - a / safe) ** 2, 0.0)
    return (C * w[:, None]).T @ C


def covariance_moments(kind, q, P, a, frame):
    """Unit-weight covariance sum with the first two moments of r(d) d^2."""
    L = log_batch(kind, q, P)
    C = _inner(kind, L[:, None, :], np.asarray(frame, dtype=float)[None, :, :])
    d = np.sqrt(np.maximum(_inner(kind, L, L), 0.0))
    if a != 0.0:
        w = np.where(d > 0.0, (1.0 - a / np.where(d > 0.0, d, 1.0)) ** 2, 0.0)
    else:
        w = np.ones_like(d)
    tr = w * d * d
    return (C * w[:, None]).T @ C, float(tr.sum()), float((tr * tr).sum())


def pair_trace_sums(kind, X, a):
    """Row sums over j != i of d^2 and (d - a)^2 plus totals of their squares."""
    D = dist_matrix(kind, X, X)
    np.fill_diagonal(D, 0.0)
    sq = D * D
    amp = (D - a) ** 2
    np.fill_diagonal(amp, 0.0)
    return sq.sum(axis=1), amp.sum(axis=1), float(np.sum(sq * sq)), float(np.sum(amp * amp))


def log_chord_ratios(kind, Q, P1, P2):
    """|log_q p1 - log_q p2| / d(p1, p2) for aligned rows of Q, P1, P2."""
    Q, P1, P2 = (np.asarray(x, dtype=float) for x in (Q, P1, P2))
    diff = _log_rows(kind, Q, P1) - _log_rows(kind, Q, P2)
    num = np.sqrt(np.maximum(_inner(kind, diff, diff), 0.0))
    return num / _dist_from_delta(kind, P1, P2)
