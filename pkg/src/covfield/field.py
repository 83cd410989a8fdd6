"""Covariance tensors of discrete distributions and derived scalar fields.

For a pmf with support p_i and weights f_i the (extended) covariance at q is

    Sigma(q; r) = sum_i f_i r(d_i) log_q(p_i) log_q(p_i)',   d_i = d(q, p_i),

expressed in the coordinates of a chart at q. With r = 1 this is the plain
covariance field; tr(G Sigma) is then the "variance" rho(q) = E d^2(q, p).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import CutLocus, NoConvergence, ValidationError
from .manifolds import Manifold, _unwrap
from .tensors import Chart

WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class Pmf:
    """Probability mass function on a finite support set."""

    manifold: Manifold
    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        support = self.manifold.check_points(self.support)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if w.size != len(support):
            raise ValidationError(f"{w.size} weights for {len(support)} support points")
        if np.any(w < -WEIGHT_TOL) or abs(w.sum() - 1.0) > WEIGHT_TOL * max(1, w.size):
            raise ValidationError("weights must be non-negative and sum to 1")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "weights", np.clip(w, 0.0, None))

    @classmethod
    def point_mass(cls, manifold, p):
        return cls(manifold, np.atleast_2d(p), np.ones(1))

    @classmethod
    def uniform(cls, manifold, points):
        points = np.atleast_2d(points)
        return cls(manifold, points, np.full(len(points), 1.0 / len(points)))

    def __len__(self):
        return len(self.weights)


@dataclass(frozen=True)
class Amplitude:
    """Amplitude function r: ``a is None`` means r = 1, else r(t) = (1 - a/t)^2."""

    a: float | None = None

    def __post_init__(self):
        if self.a is not None and not (math.isfinite(self.a) and self.a > 0):
            raise ValidationError("amplitude parameter a must be a positive finite number")

    @property
    def is_unit(self):
        return self.a is None

    @property
    def kernel_param(self):
        return 0.0 if self.a is None else float(self.a)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.a is None:
            return np.ones_like(t)
        with np.errstate(divide="ignore"):
            return (1.0 - self.a / t) ** 2

    def weighted_sq(self, d):
        """d^2 r(d), with the d = 0 contribution defined as 0."""
        d = np.asarray(d, dtype=float)
        if self.a is None:
            return d * d
        return np.where(d > 0.0, (d - self.a) ** 2, 0.0)

    @classmethod
    def parse(cls, text):
        """``unit``, ``a=<v>`` or ``optimal:R=<v>``."""
        text = str(text).strip().lower()
        try:
            if text in ("unit", "1", ""):
                return cls()
            if text.startswith("a="):
                return cls(float(text[2:]))
            if text.startswith("optimal:r="):
                return optimal_amplitude(float(text[len("optimal:r="):]))
        except ValueError:
            pass
        raise ValidationError(f"bad amplitude spec {text!r}; use unit, a=<v> or optimal:R=<v>")

    def to_tag(self):
        return "unit" if self.a is None else f"a={self.a!r}"


UNIT = Amplitude()


def optimal_amplitude(R):
    """Member of the (1 - a/t)^2 family minimising the trace bound: a = R/2."""
    if not (R > 0):
        raise ValidationError("geodesic radius R must be positive")
    return Amplitude(R / 2.0)


def amplitude_bound_factor(R, a):
    """R (R^2/3 - aR + a^2) = integral over [0, R] of (t - a)^2 dt."""
    return R * (R * R / 3.0 - a * R + a * a)


@dataclass(frozen=True)
class CovarianceTensor:
    """Sigma(q) in the coordinates of ``chart``; ``degenerate`` flags rank loss."""

    chart: Chart
    sigma: np.ndarray
    amplitude: Amplitude = UNIT
    degenerate: bool = False

    @property
    def at(self):
        return self.chart.base

    def operator(self):
        """Matrix of the (1,1) operator G Sigma in chart coordinates."""
        return self.chart.gram() @ self.sigma

    def operator_eigenvalues(self):
        """Spectrum of G Sigma, ascending.

        Computed from the symmetric matrix L' Sigma L with G = L L', which is
        similar to G Sigma and keeps the eigenvalues real.
        """
        L = np.linalg.cholesky(self.chart.gram())
        S = L.T @ self.sigma @ L
        return np.linalg.eigvalsh(0.5 * (S + S.T))


def _support_logs(manifold, q, P, strict=True):
    try:
        return manifold.log_many(q, P, strict=strict)
    except CutLocus as exc:
        raise CutLocus(f"support points {list(exc.indices)} outside U(q)", exc.indices) from None


def z_tensor(manifold, q, p, chart=None):
    """Rank-one tensor log_q(p) log_q(p)' in chart coordinates."""
    q = manifold.check_point(q)
    chart = chart or Chart.default(manifold, q)
    x = chart.components(_support_logs(manifold, q, np.atleast_2d(manifold.check_point(p)))[0])
    return np.outer(x, x)


def _is_degenerate(S, tol=1e-12):
    w = np.linalg.eigvalsh(S)
    return bool(w[-1] <= 0 or w[0] <= tol * w[-1])


def covariance_at(manifold, q, pmf, amplitude=UNIT, chart=None):
    """Covariance tensor of ``pmf`` at ``q``."""
    q = manifold.check_point(q)
    P = pmf.support
    chart = chart or Chart.default(manifold, q)
    if manifold.kind == kernels.SPHERE:
        _support_logs(manifold, q, P)  # cut-locus check only
    if chart.is_orthonormal():
        S = kernels.weighted_covariance(
            manifold.kind, q, P, pmf.weights, amplitude.kernel_param, chart.frame
        )
    else:
        L = chart.components(_support_logs(manifold, q, P))
        d = manifold.dist_matrix(q, P)[0]
        w = pmf.weights * np.where(d > 0, amplitude.weighted_sq(d) / np.where(d > 0, d * d, 1), 0)
        S = (L * w[:, None]).T @ L
    S = 0.5 * (S + S.T)
    return CovarianceTensor(chart, S, amplitude, _is_degenerate(S))


def operator_quadratic_form(tensor, v, w):
    """<w, (G Sigma)(v)> = w_x' G Sigma G v_x for ambient tangent vectors v, w."""
    chart = tensor.chart
    q = chart.base
    vx = chart.components(_unwrap(q, v))
    wx = chart.components(_unwrap(q, w))
    G = chart.gram()
    return float(wx @ G @ tensor.sigma @ G @ vx)


def trace_field(manifold, q, pmf, amplitude=UNIT):
    """rho(q; r) = sum_i f_i d_i^2 r(d_i) = tr(G Sigma(q; r))."""
    q = manifold.check_point(q)
    if manifold.kind == kernels.SPHERE:
        _support_logs(manifold, q, pmf.support)
    d = manifold.dist_matrix(q, pmf.support)[0]
    return float(pmf.weights @ amplitude.weighted_sq(d))


def trace_field_grid(manifold, Q, pmf, amplitude=UNIT):
    """Vectorised ``trace_field`` over the rows of Q (no cut-locus check)."""
    D = manifold.dist_matrix(Q, pmf.support)
    return amplitude.weighted_sq(D) @ pmf.weights


@dataclass
class MeanResult:
    point: np.ndarray
    iterations: int
    grad_norm: float
    history: list = field(default_factory=list)


def intrinsic_mean(pmf, init=None, *, tol=1e-10, max_iter=500, step=1.0):
    """Local minimiser of rho(q) = E d^2(q, p) by Riemannian gradient steps.

    Iterates q <- exp_q(tau * sum_i f_i log_q(p_i)), halving tau whenever
    rho fails to decrease. Returns once the gradient norm is <= ``tol``.
    """
    M = pmf.manifold
    q = M.check_point(pmf.support[int(np.argmax(pmf.weights))] if init is None else init)
    rho = trace_field(M, q, pmf)
    history = [rho]
    g = pmf.weights @ _support_logs(M, q, pmf.support)
    gnorm = M.norm(g)
    for it in range(1, max_iter + 1):
        if gnorm <= tol:
            return MeanResult(q, it - 1, gnorm, history)
        tau = step
        while True:
            cand = M.exp(q, M.project_tangent(q, tau * g), wrap=True)
            rho_c = trace_field(M, cand, pmf)
            g_c = pmf.weights @ _support_logs(M, cand, pmf.support)
            if rho_c < rho:
                break
            # at the rounding floor of rho, a smaller gradient is still progress
            if rho_c - rho <= 4 * np.finfo(float).eps * abs(rho) and M.norm(g_c) < gnorm:
                break
            if tau < 1e-12:
                raise NoConvergence(f"intrinsic mean stalled with gradient norm {gnorm:.3e}")
            tau *= 0.5
        q, rho, g, gnorm = cand, rho_c, g_c, M.norm(g_c)
        history.append(rho)
    if gnorm <= tol:
        return MeanResult(q, max_iter, gnorm, history)
    raise NoConvergence(f"intrinsic mean did not converge in {max_iter} iterations")


@dataclass
class ContinuityReport:
    """Field values along q_k -> q0 and their deviations from the values at q0."""

    distances: np.ndarray
    traces: np.ndarray
    forms: np.ndarray
    eigenvalues: np.ndarray
    trace_dev: np.ndarray
    form_dev: np.ndarray
    eig_dev: np.ndarray

    def final_deviation(self):
        return max(self.trace_dev[-1], self.form_dev[-1], self.eig_dev[-1])

    def tail_max(self, tail=3):
        return max(
            float(np.max(self.trace_dev[-tail:])),
            float(np.max(self.form_dev[-tail:])),
            float(np.max(self.eig_dev[-tail:])),
        )


def halving_trajectory(manifold, q0, v, n):
    """Points exp_{q0}(2^-k v) for k = 0..n-1, converging to q0."""
    q0 = manifold.check_point(q0)
    v = manifold.project_tangent(q0, v)
    return [manifold.exp(q0, v * 0.5**k, wrap=True) for k in range(n)]


def continuity_probe(pmf, q0, trajectory, amplitude=UNIT, v=None, w=None):
    """Evaluate trace, quadratic form and spectrum of G Sigma along a trajectory.

    The probe vectors ``v``, ``w`` are fixed ambient vectors projected onto
    each tangent space, so they vary continuously with q_k.
    """
    M = pmf.manifold
    q0 = M.check_point(q0)
    rng = np.random.default_rng(0)
    v = M.project_tangent(q0, rng.normal(size=M.ambient_dim) if v is None else v)
    w = M.project_tangent(q0, rng.normal(size=M.ambient_dim) if w is None else w)

    def evaluate(q):
        T = covariance_at(M, q, pmf, amplitude)
        form = operator_quadratic_form(T, M.project_tangent(q, v), M.project_tangent(q, w))
        return trace_field(M, q, pmf, amplitude), form, T.operator_eigenvalues()

    t0, f0, e0 = evaluate(q0)
    dists, traces, forms, eigs = [], [], [], []
    for q in trajectory:
        t, f, e = evaluate(q)
        dists.append(M.distance(q0, q))
        traces.append(t)
        forms.append(f)
        eigs.append(e)
    traces, forms, eigs = np.array(traces), np.array(forms), np.array(eigs)
    return ContinuityReport(
        np.array(dists),
        traces,
        forms,
        eigs,
        np.abs(traces - t0),
        np.abs(forms - f0),
        np.max(np.abs(eigs - e0), axis=1),
    )
