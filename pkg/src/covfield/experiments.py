"""Numerical experiments built on the library: S^2 amplitude demo, rank
scans, consistency under noise, continuous recovery on a cap, Lipschitz and
amplitude-bound probes. Every experiment is a deterministic function of its
seed."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import RankDeficientWarning, ValidationError
from .field import UNIT, Amplitude, Pmf, amplitude_bound_factor
from .manifolds import Euclidean, Hyperbolic2, Sphere2, sample_hyperbolic_ball, sample_sphere
from .partition import assign_cells, cap_partition, rotation_to
from .recovery import (
    CovarianceSet,
    ObservationSet,
    RecoveryProblem,
    SolverOptions,
    build_y_matrix,
    forward_covariance_set,
    rank_diagnostic,
    recover_pmf,
)
from .spd import InvariantKind

#: radius of the hyperbolic ball used for random draws on H^2
HYPERBOLIC_RADIUS = 2.0

PAIR_TRACE_UNIT = math.pi**2 / 2 - 2
PAIR_TRACE_AMPLITUDE = math.pi**2 / 4 - 2


def trial_rng(seed, *index):
    """Generator for one trial; independent of the order trials are run in."""
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, *map(int, index)])


def random_points(manifold, rng, k):
    if isinstance(manifold, Sphere2):
        return sample_sphere(rng, k)
    if isinstance(manifold, Hyperbolic2):
        return sample_hyperbolic_ball(rng, k, HYPERBOLIC_RADIUS)
    return rng.normal(size=(k, manifold.dim))


def sample_cap(rng, n, radius, center=(0.0, 0.0, 1.0)):
    """Uniform (area) sample from a spherical cap."""
    z = rng.uniform(math.cos(radius), 1.0, n)
    phi = rng.uniform(0.0, 2 * math.pi, n)
    s = np.sqrt(1.0 - z * z)
    X = np.column_stack([s * np.cos(phi), s * np.sin(phi), z])
    return X @ rotation_to(center).T


# -- Example: amplitude on the uniform sphere -------------------------------


def _u_statistic(row_sums, sum_sq, k):
    pairs = k * (k - 1)
    mean = float(np.sum(row_sums)) / pairs
    zeta2 = max(sum_sq / pairs - mean * mean, 0.0)
    zeta1 = float(np.var(row_sums / (k - 1), ddof=1))
    var = 2.0 / pairs * (2.0 * (k - 2) * zeta1 + zeta2)
    return mean, math.sqrt(var)


def demo_s2(k=2000, seed=0):
    """Per-pair trace statistics of k uniform points on S^2.

    Estimates E d^2 (r = 1) and E (d - pi/2)^2 (r(t) = (1 - pi/(2t))^2) over
    distinct pairs, with U-statistic standard errors.
    """
    if k < 3:
        raise ValidationError("demo-s2 needs k >= 3")
    X = sample_sphere(trial_rng(seed, 0), k)
    rows_sq, rows_amp, ss_sq, ss_amp = kernels.pair_trace_sums(kernels.SPHERE, X, math.pi / 2)
    est1, se1 = _u_statistic(rows_sq, ss_sq, k)
    est2, se2 = _u_statistic(rows_amp, ss_amp, k)
    ratio = est1 / est2
    return {
        "k": k,
        "seed": seed,
        "unit": {"estimate": est1, "stderr": se1, "target": PAIR_TRACE_UNIT,
                 "z": (est1 - PAIR_TRACE_UNIT) / se1},
        "amplitude": {"estimate": est2, "stderr": se2, "target": PAIR_TRACE_AMPLITUDE,
                      "z": (est2 - PAIR_TRACE_AMPLITUDE) / se2},
        "per_pair_ratio": ratio,
        "target_ratio": PAIR_TRACE_UNIT / PAIR_TRACE_AMPLITUDE,
        # the sum-level inequality with an extra (k - 1) factor on the right
        "sum_inequality_with_k_factor_holds": bool(ratio > 6 * (k - 1)),
    }


# -- rank scans -------------------------------------------------------------


def rank_scan(manifold, k=10, trials=100, amplitude=UNIT, seed=0, rel_tol=1e-9, same_points=True):
    """Numerical rank of the Y matrix for random point sets, one row per trial."""
    rows = []
    for t in range(trials):
        rng = trial_rng(seed, t)
        P = random_points(manifold, rng, k)
        Q = P if same_points else random_points(manifold, rng, k)
        rep = rank_diagnostic(build_y_matrix(manifold, P, Q, amplitude), rel_tol)
        s = rep.singular_values
        rows.append({
            "trial": t,
            "rank": rep.rank,
            "smallest_retained": float(s[rep.rank - 1]) if rep.rank else 0.0,
            "relative_smallest": float(s[-1] / s[0]) if s[0] > 0 else 0.0,
            "singular_values": s.tolist(),
        })
    return rows


# -- consistency ------------------------------------------------------------


def random_symmetric(rng, n, norm):
    """Symmetric matrix of spectral norm ``norm``."""
    A = rng.normal(size=(n, n))
    S = 0.5 * (A + A.T)
    return S * (norm / np.max(np.abs(np.linalg.eigvalsh(S))))


def perturb_spd(C, S):
    """E C E' with E = exp(S); stays symmetric positive (semi)definite."""
    w, V = np.linalg.eigh(S)
    E = (V * np.exp(w)) @ V.T
    out = E @ C @ E.T
    return 0.5 * (out + out.T)


def trdifsq_sup_gap(problem0, problem_m):
    """sup over the simplex of |H_m - H_0| for the trace-difference-squared objective.

    The difference is affine in f, so the supremum sits at a vertex.
    """
    gaps = [abs(problem_m.value(e) - problem0.value(e)) for e in np.eye(problem0.k)]
    return max(gaps)


def trdifsq_gap_bound(problem0, problem_m):
    """alpha * gamma * max_j ||C_j^m - C_j^0|| with alpha = 2 n (n + 1) (spectral norms)."""
    n = problem0.n
    norms = [np.linalg.norm(B, 2) for B in problem0.Y.reshape(-1, n, n)]
    norms += [np.linalg.norm(C, 2) for C in problem0.C] + [np.linalg.norm(C, 2) for C in problem_m.C]
    gamma = max(norms)
    delta = max(np.linalg.norm(a - b, 2) for a, b in zip(problem_m.C, problem0.C))
    return 2 * n * (n + 1) * gamma * delta


@dataclass
class ConsistencyReport:
    eps: np.ndarray
    errors: np.ndarray
    values: np.ndarray
    sup_gaps: np.ndarray | None = None
    gap_bounds: np.ndarray | None = None
    rate_constant: float = math.nan
    rate_ok: bool = False

    def as_rows(self):
        rows = []
        for i, e in enumerate(self.eps):
            row = {"m": i + 1, "eps": float(e), "error": float(self.errors[i]), "H": float(self.values[i])}
            if self.sup_gaps is not None:
                row["sup_gap"] = float(self.sup_gaps[i])
                row["gap_bound"] = float(self.gap_bounds[i])
            rows.append(row)
        return rows


def consistency_experiment(pmf, observations, kind=InvariantKind.LIK, eps_schedule=None,
                           seed=0, amplitude=UNIT, solver=None):
    """Recover f from covariance sets perturbed by noise of decreasing size.

    C_j^m = E C_j^0 E' with E = exp(S_jm) and ||S_jm|| = eps_m.
    """
    eps_schedule = np.asarray(
        [2.0**-m for m in range(1, 9)] if eps_schedule is None else eps_schedule, dtype=float
    )
    kind = InvariantKind.parse(kind)
    solver = solver or SolverOptions(kind)
    c0 = forward_covariance_set(pmf, observations, amplitude)
    P = pmf.support
    p0 = RecoveryProblem(c0, P, kind) if kind is InvariantKind.TRDIFSQ else None
    errors, values, gaps, bounds = [], [], [], []
    n = pmf.manifold.dim
    for m, eps in enumerate(eps_schedule, start=1):
        rng = trial_rng(seed, m)
        tensors = np.array([perturb_spd(C, random_symmetric(rng, n, eps)) if eps > 0 else C
                            for C in c0.tensors])
        cm = CovarianceSet(observations, tensors, amplitude)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RankDeficientWarning)
            res = recover_pmf(cm, P, solver)
        errors.append(float(np.linalg.norm(res.weights - pmf.weights)))
        values.append(res.value)
        if p0 is not None:
            pm = RecoveryProblem(cm, P, kind)
            gaps.append(trdifsq_sup_gap(p0, pm))
            bounds.append(trdifsq_gap_bound(p0, pm))
    errors = np.array(errors)
    pos = eps_schedule > 0
    c = float(np.median(errors[pos] / eps_schedule[pos])) if pos.any() else 0.0
    tail = np.flatnonzero(pos)[len(np.flatnonzero(pos)) // 2:]
    rate_ok = bool(np.all(errors[tail] <= 4.0 * c * eps_schedule[tail] + 1e-9))
    return ConsistencyReport(
        eps_schedule, errors, np.array(values),
        np.array(gaps) if p0 is not None else None,
        np.array(bounds) if p0 is not None else None,
        c, rate_ok,
    )


# -- continuous recovery on a cap -------------------------------------------


def uniform_cap_masses(cells):
    a = np.array([c.area for c in cells])
    return a / a.sum()


@dataclass
class ContinuousRecoveryResult:
    cells: list
    representatives: np.ndarray
    recovered: np.ndarray
    true_masses: np.ndarray
    tv: float
    reference_recovered: np.ndarray | None = None
    reference_true: np.ndarray | None = None
    reference_tv: float = math.nan
    mc_samples: int = 0
    mc_stderr: float = 0.0
    rank: int = 0
    info: dict = field(default_factory=dict)


def _mc_field(sampler, rng, Q, frames, amplitude, mc_tol, n_min, n_max):
    """Monte Carlo covariance tensors at each q, doubling the sample until the
    largest standard error of tr(G Sigma) drops below ``mc_tol``."""
    k, n = len(Q), frames[0].shape[0]
    sigma_sum = np.zeros((k, n, n))
    tr_sum = np.zeros(k)
    tr_sq = np.zeros(k)
    batches = []
    total, batch = 0, n_min
    while True:
        S = sampler(rng, batch)
        batches.append(S)
        for j, (q, E) in enumerate(zip(Q, frames)):
            sig, t1, t2 = kernels.covariance_moments(kernels.SPHERE, q, S, amplitude.kernel_param, E)
            sigma_sum[j] += sig
            tr_sum[j] += t1
            tr_sq[j] += t2
        total += len(S)
        mean = tr_sum / total
        var = np.maximum(tr_sq / total - mean * mean, 0.0)
        se = float(np.sqrt(var.max() / total))
        if se <= mc_tol or total >= n_max:
            return sigma_sum / total, np.vstack(batches), se
        batch = total


def continuous_recovery(sampler, m, *, radius=1.0, center=(0.0, 0.0, 1.0), kind=InvariantKind.TRDIFSQ,
                        seed=0, placement="uniform", mass_fn=None, reference_cells=None,
                        amplitude=UNIT, mc_tol=None, n_min=50000, n_max=800000, solver=None):
    """Approximate a distribution on a cap by a pmf on cell representatives.

    The cap is cut into cells of diameter <= 1/m, one representative q_j is
    placed per cell (uniformly at random, or at the cell centre), the field
    at each q_j is estimated by Monte Carlo from ``sampler(rng, n)``, and the
    cell masses are recovered with P = Q = {q_j}.

    ``mass_fn(cells)`` gives the true masses F(U); by default they are the
    fractions of the Monte Carlo sample falling in each cell. When
    ``reference_cells`` is given, recovered mass is also aggregated onto that
    fixed partition (by the cell containing each representative) and
    compared with its true masses.
    """
    M = Sphere2()
    kind = InvariantKind.parse(kind)
    rng = trial_rng(seed, m)
    cells = cap_partition(radius, m, center)
    if placement == "uniform":
        Q = np.array([c.sample(rng) for c in cells])
    elif placement == "center":
        Q = np.array([c.center() for c in cells])
    else:
        raise ValidationError(f"unknown placement {placement!r}")
    obs = ObservationSet(M, Q)
    frames = [M.frame(q) for q in Q]
    mc_tol = 1e-2 / m if mc_tol is None else mc_tol
    tensors, sample, se = _mc_field(sampler, rng, Q, frames, amplitude, mc_tol, n_min, n_max)
    cset = CovarianceSet(obs, tensors, amplitude)
    solver = solver or SolverOptions(kind)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankDeficientWarning)
        res = recover_pmf(cset, Q, solver)

    def masses(cs):
        if mass_fn is not None:
            return np.asarray(mass_fn(cs), dtype=float)
        idx = assign_cells(cs, sample)
        return np.bincount(idx[idx >= 0], minlength=len(cs)) / len(sample)

    true = masses(cells)
    out = ContinuousRecoveryResult(
        cells, Q, res.weights, true, 0.5 * float(np.abs(res.weights - true).sum()),
        mc_samples=len(sample), mc_stderr=se, rank=res.rank.rank,
        info={"iterations": res.iterations, "converged": res.converged, "H": res.value},
    )
    if reference_cells is not None:
        idx = assign_cells(reference_cells, Q)
        agg = np.bincount(idx[idx >= 0], weights=res.weights[idx >= 0], minlength=len(reference_cells))
        ref_true = masses(reference_cells)
        out.reference_recovered = agg
        out.reference_true = ref_true
        out.reference_tv = 0.5 * float(np.abs(agg - ref_true).sum())
    return out


def point_mass_sampler(p):
    p = np.asarray(p, dtype=float)
    return lambda rng, n: np.tile(p, (n, 1))


def uniform_cap_sampler(radius, center=(0.0, 0.0, 1.0)):
    return lambda rng, n: sample_cap(rng, n, radius, center)


# -- Lipschitz constant of the log map ---------------------------------------


def lipschitz_probe(rho, samples=100_000, seed=0):
    """Largest |log_q p1 - log_q p2| / d(p1, p2) over random triples in a cap of diameter rho."""
    if not (0 < rho < math.pi):
        raise ValidationError("cap diameter must lie in (0, pi)")
    rng = trial_rng(seed, 0)
    X = sample_cap(rng, 3 * samples, rho / 2)
    Q, P1, P2 = X[:samples], X[samples:2 * samples], X[2 * samples:]
    keep = np.any(P1 != P2, axis=1)
    ratios = kernels.log_chord_ratios(kernels.SPHERE, Q[keep], P1[keep], P2[keep])
    return {
        "rho": rho,
        "samples": int(keep.sum()),
        "empirical_beta": float(np.max(ratios)),
        "bound": rho / math.sin(rho),
    }


def log_differential_norm(q, p, direction, h=1e-6):
    """|d/ds log_q(exp_p(s u))| at s = 0 by central differences, u a unit tangent at p."""
    M = Sphere2()
    u = M.project_tangent(p, direction)
    u = u / np.linalg.norm(u)
    a = M.log(q, M.exp(p, h * u))
    b = M.log(q, M.exp(p, -h * u))
    return float(np.linalg.norm(a - b) / (2 * h))


# -- amplitude bound --------------------------------------------------------


def amplitude_bound_experiment(R, n_samples=20000, n_q=300, grid=20, seed=0):
    """Empirical max_q tr(G Sigma(q; a)) against the bound 2 pi C R (R^2/3 - aR + a^2).

    The distribution is uniform on a cap of radius R/2 (so its geodesic
    radius is R), with density bound C = 1 / area. q ranges over the cap
    centre and ``n_q`` support points. ``a`` ranges over R/grid, ..., R.
    """
    if not (0 < R < math.pi):
        raise ValidationError("R must lie in (0, pi)")
    rng = trial_rng(seed, 0)
    cap = R / 2
    S = sample_cap(rng, n_samples, cap)
    Qs = np.vstack([[0.0, 0.0, 1.0], S[:n_q]])
    a_grid = R * np.arange(1, grid + 1) / grid
    C = 1.0 / (2 * math.pi * (1 - math.cos(cap)))
    emp = np.full(len(a_grid), -np.inf)
    se = np.zeros(len(a_grid))
    for q in Qs:
        d = kernels.dist_matrix(kernels.SPHERE, q[None, :], S)[0]
        for i, a in enumerate(a_grid):
            v = (d - a) ** 2
            mean = float(v.mean())
            if mean > emp[i]:
                emp[i] = mean
                se[i] = float(v.std()) / math.sqrt(len(v))
    bound = 2 * math.pi * C * np.array([amplitude_bound_factor(R, a) for a in a_grid])
    i_min = int(np.argmin(emp))
    return {
        "R": R,
        "a_grid": a_grid,
        "empirical_max": emp,
        "stderr": se,
        "bound": bound,
        "density_bound": C,
        "argmin_a": float(a_grid[i_min]),
        "grid_step": float(R / grid),
    }
