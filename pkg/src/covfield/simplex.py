"""Euclidean projection onto the probability simplex and a small simplex QP."""

import numpy as np


def project_simplex(y):
    """Closest point of {x >= 0, sum x = 1} to ``y`` (sort-based, O(k log k))."""
    y = np.asarray(y, dtype=float)
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, y.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    x = np.maximum(y - theta, 0.0)
    # exact renormalisation keeps iterates on the simplex to machine precision
    return x / x.sum()


def simplex_tangent_basis(k):
    """Orthonormal basis (k x (k-1)) of {d : sum d = 0}."""
    A = np.eye(k) - 1.0 / k
    U, s, _ = np.linalg.svd(A)
    return U[:, : k - 1]


def simplex_qp(H, c, x0, *, max_iter=None, tol=1e-13):
    """Minimise 0.5 x'Hx + c'x over the simplex by a primal active-set method.

    ``H`` must be symmetric positive semidefinite. The equality-constrained
    subproblems are solved by least squares, so a singular H gives the
    minimum-norm KKT solution; no ridge is added because on ill-conditioned
    problems it biases the minimiser. ``x0`` must be feasible.
    """
    k = len(c)
    H = 0.5 * (H + H.T)
    x = np.array(x0, dtype=float)
    active = x <= 0.0
    x[active] = 0.0
    max_iter = max_iter or 50 * k + 100
    for _ in range(max_iter):
        free = np.flatnonzero(~active)
        nf = free.size
        K = np.zeros((nf + 1, nf + 1))
        K[:nf, :nf] = H[np.ix_(free, free)]
        K[:nf, nf] = 1.0
        K[nf, :nf] = 1.0
        rhs = np.concatenate([-c[free], [1.0]])
        sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
        y, nu = sol[:nf], sol[nf]
        if np.all(y >= -tol):
            x = np.zeros(k)
            x[free] = np.maximum(y, 0.0)
            x /= x.sum()
            mu = H @ x + c + nu
            blocked = np.flatnonzero(active)
            if blocked.size == 0:
                return x
            j = blocked[int(np.argmin(mu[blocked]))]
            if mu[j] >= -tol * max(1.0, float(np.max(np.abs(mu)))):
                return x
            active[j] = False
            continue
        # step towards y until the first free coordinate hits zero
        xf = x[free]
        step = xf - y
        neg = step > 0
        ratios = np.where(neg, xf / np.where(neg, step, 1.0), np.inf)
        t = float(np.min(ratios))
        j = free[int(np.argmin(ratios))]
        x[free] = xf - t * step
        x[j] = 0.0
        x = np.maximum(x, 0.0)
        x /= x.sum()
        active[j] = True
    return x
