"""Recovering a pmf on a known support from covariance tensors.

Given support points p_1..p_k, observation points q_1..q_k and tensors C_j,
the recovered weights minimise

    H(f) = (1/k) sum_j h(Sigma[f]_j, C_j),   Sigma[f]_j = sum_i f_i Y_ji,

over the probability simplex, where Y_ji = r(d_ji) log_{q_j}(p_i) log_{q_j}(p_i)'
in an orthonormal frame at q_j.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import NotSpd, RankDeficientWarning, ValidationError
from .field import UNIT, Amplitude, Pmf, covariance_at
from .manifolds import Manifold
from .simplex import project_simplex, simplex_qp
from .spd import CONVEX_KINDS, InvariantKind, as_symmetric, invariant, numerical_rank
from .tensors import Chart

log = logging.getLogger(__name__)

ARMIJO = 1e-4


@dataclass(frozen=True)
class ObservationSet:
    """Observation points, each with the library's default orthonormal chart."""

    manifold: Manifold
    points: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", self.manifold.check_points(self.points))

    def __len__(self):
        return len(self.points)

    def chart(self, j):
        return Chart.default(self.manifold, self.points[j])


@dataclass(frozen=True)
class CovarianceSet:
    observations: ObservationSet
    tensors: np.ndarray
    amplitude: Amplitude = UNIT

    def __post_init__(self):
        T = np.asarray(self.tensors, dtype=float)
        n = self.observations.manifold.dim
        if T.shape != (len(self.observations), n, n):
            raise ValidationError(
                f"expected {len(self.observations)} tensors of shape {n}x{n}, got {T.shape}"
            )
        sym = []
        for j, C in enumerate(T):
            try:
                sym.append(as_symmetric(C, name=f"tensor {j}"))
            except ValidationError as exc:
                raise ValidationError(f"tensor {j}: {exc}") from None
        object.__setattr__(self, "tensors", np.array(sym))

    @property
    def manifold(self):
        return self.observations.manifold


def forward_covariance_set(pmf, observations, amplitude=UNIT):
    """Covariance tensors of ``pmf`` at every observation point."""
    tensors = [
        covariance_at(pmf.manifold, q, pmf, amplitude, observations.chart(j)).sigma
        for j, q in enumerate(observations.points)
    ]
    return CovarianceSet(observations, np.array(tensors), amplitude)


def build_y_matrix(manifold, P, observations, amplitude=UNIT):
    """Matrix of d^2(q_j, p_i) r(d(q_j, p_i)); rows index observations."""
    Q = observations.points if isinstance(observations, ObservationSet) else observations
    D = manifold.dist_matrix(Q, manifold.check_points(P))
    return amplitude.weighted_sq(D)


def y_tensors(manifold, P, observations, amplitude=UNIT):
    """Array Y[j, i] of the n x n tensors r(d) log log' at q_j."""
    P = manifold.check_points(P)
    out = np.empty((len(observations), len(P), manifold.dim, manifold.dim))
    for j, q in enumerate(observations.points):
        L = observations.chart(j).components(manifold.log_many(q, P))
        d = manifold.dist_matrix(q, P)[0]
        scale = np.where(d > 0, amplitude.weighted_sq(d) / np.where(d > 0, d * d, 1.0), 0.0)
        out[j] = scale[:, None, None] * L[:, :, None] * L[:, None, :]
    return out


@dataclass
class RankReport:
    rank: int
    singular_values: np.ndarray
    full_rank: bool


def rank_diagnostic(Y, rel_tol=1e-9):
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    s = np.linalg.svd(Y, compute_uv=False)
    rank = numerical_rank(Y, rel_tol)
    return RankReport(rank, s, rank == min(Y.shape))


class RecoveryProblem:
    """Objective H(f), its gradient and Hessian for one covariance set."""

    def __init__(self, cset, P, kind=InvariantKind.TRDIFSQ):
        M = cset.manifold
        self.kind = InvariantKind.parse(kind)
        self.cset = cset
        self.P = M.check_points(P)
        self.k = len(cset.observations)
        if len(self.P) != self.k:
            raise ValidationError(
                f"square systems only: {len(self.P)} support points vs {self.k} observations"
            )
        self.n = M.dim
        self.Y = y_tensors(M, self.P, cset.observations, cset.amplitude)
        self.Ytr = np.trace(self.Y, axis1=2, axis2=3)
        self.C = cset.tensors
        self.Ctr = np.trace(self.C, axis1=1, axis2=2)
        self.shifted = set()
        self._Cinv = None

    # helpers ---------------------------------------------------------------

    def sigma(self, f):
        return np.einsum("i,jiab->jab", np.asarray(f, dtype=float), self.Y)

    @property
    def Cinv(self):
        if self._Cinv is None:
            out = []
            for j, C in enumerate(self.C):
                w, V = np.linalg.eigh(C)
                if w[0] <= 1e-12 * max(w[-1], 0.0) or w[-1] <= 0:
                    raise NotSpd(f"observed tensor {j} is not positive definite", index=j)
                out.append((V / w) @ V.T)
            self._Cinv = np.array(out)
        return self._Cinv

    def _spd_sigma(self, S, j):
        """Sigma_j, ridge-shifted if it is (numerically) singular."""
        w = np.linalg.eigvalsh(S)
        if w[-1] > 0 and w[0] > 1e-12 * w[-1]:
            return S
        tr = float(np.trace(S))
        if tr <= 0:
            raise NotSpd(f"Sigma[f]_{j} vanishes", index=j)
        self.shifted.add(j)
        return S + (1e-12 * tr / self.n) * np.eye(self.n)

    # objective -------------------------------------------------------------

    def value(self, f):
        f = np.asarray(f, dtype=float)
        if self.kind is InvariantKind.TRDIFSQ:
            r = self.Ytr @ f - self.Ctr
            return float(r @ r) / self.k
        if self.kind is InvariantKind.TRDIF:
            return float(np.sum(np.abs(self.Ytr @ f - self.Ctr))) / self.k
        S = self.sigma(f)
        total = 0.0
        for j in range(self.k):
            X = self._spd_sigma(S[j], j)
            if self.kind is InvariantKind.LIK:
                A = X @ self.Cinv[j]
                sign, logdet = np.linalg.slogdet(A)
                if sign <= 0:
                    raise NotSpd(f"Sigma[f]_{j} C_{j}^-1 has non-positive determinant", index=j)
                total += float(np.trace(A)) - logdet - self.n
            elif self.kind is InvariantKind.TRSQ:
                A = X @ self.Cinv[j] - self.C[j] @ np.linalg.inv(X)
                total += float(np.trace(A @ A))
            else:
                total += invariant(self.kind, X, self.C[j])
        return total / self.k

    def gradient(self, f):
        f = np.asarray(f, dtype=float)
        if self.kind is InvariantKind.TRDIFSQ:
            r = self.Ytr @ f - self.Ctr
            return 2.0 * (self.Ytr.T @ r) / self.k
        if self.kind is InvariantKind.LIK:
            S = self.sigma(f)
            g = np.zeros(self.k)
            for j in range(self.k):
                Xi = np.linalg.inv(self._spd_sigma(S[j], j))
                g += np.einsum("iab,ba->i", self.Y[j], self.Cinv[j] - Xi)
            return g / self.k
        if self.kind is InvariantKind.TRSQ:
            S = self.sigma(f)
            g = np.zeros(self.k)
            for j in range(self.k):
                X = self._spd_sigma(S[j], j)
                Xi = np.linalg.inv(X)
                Ci, C = self.Cinv[j], self.C[j]
                A = X @ Ci - C @ Xi
                dA = self.Y[j] @ Ci + C @ Xi @ self.Y[j] @ Xi
                g += 2.0 * np.einsum("ab,iba->i", A, dA)
            return g / self.k
        return self._fd_gradient(f)

    def _fd_gradient(self, f, h=1e-6):
        g = np.empty(self.k)
        for s in range(self.k):
            e = np.zeros(self.k)
            e[s] = h
            g[s] = (self.value(f + e) - self.value(f - e)) / (2 * h)
        return g

    def hessian(self, f):
        f = np.asarray(f, dtype=float)
        if self.kind is InvariantKind.TRDIFSQ:
            return 2.0 * (self.Ytr.T @ self.Ytr) / self.k
        if self.kind is InvariantKind.LIK:
            S = self.sigma(f)
            Hs = np.zeros((self.k, self.k))
            for j in range(self.k):
                Xi = np.linalg.inv(self._spd_sigma(S[j], j))
                B = Xi @ self.Y[j]  # B[i] = X^-1 Y_ji
                Hs += np.einsum("sab,lba->sl", B, B)
            return Hs / self.k
        if self.kind is InvariantKind.TRSQ:
            S = self.sigma(f)
            Hs = np.zeros((self.k, self.k))
            for j in range(self.k):
                X = self._spd_sigma(S[j], j)
                Xi = np.linalg.inv(X)
                Ci, C = self.Cinv[j], self.C[j]
                Yj = self.Y[j]
                A = X @ Ci - C @ Xi
                dA = Yj @ Ci + C @ Xi @ Yj @ Xi
                Hs += 2.0 * np.einsum("sab,lba->sl", dA, dA)
                # second derivative of A: -C X^-1 (Y_l X^-1 Y_s + Y_s X^-1 Y_l) X^-1
                # 2 tr(A d2A) = -2 tr(A C U_l Y_s X^-1) - (s <-> l), U_l = X^-1 Y_l X^-1
                U = Xi @ Yj @ Xi
                W = A @ C
                V = Yj @ Xi
                cross = np.einsum("ab,lbc,sca->sl", W, U, V)
                Hs -= 2.0 * (cross + cross.T)
            return Hs / self.k
        return self._fd_hessian(f)

    def _fd_hessian(self, f, h=1e-5):
        Hs = np.empty((self.k, self.k))
        for s in range(self.k):
            e = np.zeros(self.k)
            e[s] = h
            Hs[s] = (self.gradient(f + e) - self.gradient(f - e)) / (2 * h)
        return 0.5 * (Hs + Hs.T)


def objective(f, cset, P, kind=InvariantKind.TRDIFSQ):
    return RecoveryProblem(cset, P, kind).value(f)


def objective_gradient(f, cset, P, kind=InvariantKind.TRDIFSQ):
    return RecoveryProblem(cset, P, kind).gradient(f)


def objective_hessian(f, cset, P, kind=InvariantKind.TRDIFSQ):
    return RecoveryProblem(cset, P, kind).hessian(f)


def projected_gradient_norm(f, g):
    """Stationarity measure |f - Proj(f - g)| for the simplex-constrained problem."""
    return float(np.linalg.norm(f - project_simplex(f - g)))


@dataclass
class SolverOptions:
    invariant_kind: InvariantKind | str = InvariantKind.TRDIFSQ
    max_iter: int = 5000
    grad_tol: float = 1e-10
    step_init: float = 1.0
    seed: int = 0
    method: str = "newton"
    rank_tol: float = 1e-9

    def __post_init__(self):
        self.invariant_kind = InvariantKind.parse(self.invariant_kind)
        if self.max_iter < 1 or self.grad_tol <= 0 or self.step_init <= 0:
            raise ValidationError("solver tolerances and limits must be positive")
        if self.method not in ("newton", "pgd"):
            raise ValidationError(f"unknown solver method {self.method!r}")


@dataclass
class RecoveryResult:
    weights: np.ndarray
    value: float
    iterations: int
    converged: bool
    grad_norm: float
    rank: RankReport
    history: list = field(default_factory=list)
    shifted: list = field(default_factory=list)


def _safe_value(problem, f):
    try:
        v = problem.value(f)
    except NotSpd:
        return math.inf
    return v if math.isfinite(v) else math.inf


def _psd_part(Hs):
    w, V = np.linalg.eigh(0.5 * (Hs + Hs.T))
    return (V * np.maximum(w, 0.0)) @ V.T


def recover_pmf(cset, P, opts=None, *, init=None):
    """Minimise H over the simplex.

    ``method="newton"`` solves the quadratic model of H exactly over the
    simplex (active-set QP) at each step and backtracks along the segment to
    the model minimiser; ``method="pgd"`` is plain projected gradient with
    Armijo backtracking. Both start from uniform weights unless ``init`` is
    given. Non-convergence is reported through ``converged=False``.
    """
    opts = opts or SolverOptions()
    problem = RecoveryProblem(cset, P, opts.invariant_kind)
    k = problem.k
    rank = rank_diagnostic(problem.Ytr, opts.rank_tol)
    if not rank.full_rank:
        warnings.warn(
            f"Y matrix has numerical rank {rank.rank} < {k}; the minimiser may not be unique",
            RankDeficientWarning,
            stacklevel=2,
        )
    if opts.invariant_kind not in CONVEX_KINDS:
        log.info("invariant %s is not convex; the result may be a local minimum", opts.invariant_kind.value)

    f = np.full(k, 1.0 / k) if init is None else project_simplex(np.asarray(init, dtype=float))
    value = _safe_value(problem, f)
    history = [value]
    step = opts.step_init
    converged = False
    gnorm = math.inf
    it = 0
    for it in range(1, opts.max_iter + 1):
        g = problem.gradient(f)
        gnorm = projected_gradient_norm(f, g)
        if gnorm <= opts.grad_tol:
            converged = True
            it -= 1
            break
        if opts.method == "newton":
            Hs = problem.hessian(f)
            if opts.invariant_kind not in CONVEX_KINDS:
                Hs = _psd_part(Hs)
            target = simplex_qp(Hs, g - Hs @ f, f)
            d = target - f
            slope = float(g @ d)
            predicted = -(slope + 0.5 * float(d @ Hs @ d))
            if predicted <= 1e-15 * max(abs(history[0]), abs(value)):
                # Newton decrement below rounding level of the objective
                converged = True
                it -= 1
                break
            if slope >= 0:
                # model gives no descent direction; fall back to a projected gradient step
                d = project_simplex(f - step * g) - f
                slope = float(g @ d)
            alpha = 1.0
            while True:
                cand = f + alpha * d
                cand = np.maximum(cand, 0.0)
                cand /= cand.sum()
                cv = _safe_value(problem, cand)
                if cv <= value + ARMIJO * alpha * slope or alpha < 1e-12:
                    break
                alpha *= 0.5
        else:
            while True:
                cand = project_simplex(f - step * g)
                cv = _safe_value(problem, cand)
                if cv <= value + ARMIJO * float(g @ (cand - f)) or step < 1e-16:
                    break
                step *= 0.5
        if cv > value or np.array_equal(cand, f):
            # no further decrease representable in floating point
            converged = gnorm <= math.sqrt(opts.grad_tol)
            break
        f, value = cand, cv
        history.append(value)
        if opts.method == "pgd":
            step *= 2.0
    else:
        g = problem.gradient(f)
        gnorm = projected_gradient_norm(f, g)
        converged = gnorm <= opts.grad_tol
    if not converged:
        log.warning("recovery stopped after %d iterations (projected gradient %.3e)", it, gnorm)
    return RecoveryResult(f, value, it, converged, gnorm, rank, history, sorted(problem.shifted))
