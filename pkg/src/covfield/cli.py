"""Command line interface.

Exit codes: 0 success, 2 validation error, 3 numerical failure. Verbosity is
set by the ``COVFIELD_LOG`` environment variable (debug, info, warning,
error; default warning). Logs go to stderr, results to ``--out`` or stdout.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import math
import os
import sys
import warnings

import numpy as np

from . import io
from .errors import CovFieldError, RankDeficientWarning, ValidationError
from .experiments import (
    consistency_experiment,
    continuous_recovery,
    demo_s2,
    lipschitz_probe,
    point_mass_sampler,
    random_points,
    rank_scan,
    trial_rng,
    uniform_cap_masses,
    uniform_cap_sampler,
)
from .field import Amplitude, Pmf, covariance_at, trace_field
from .manifolds import manifold_from_tag
from .partition import cap_partition
from .recovery import ObservationSet, SolverOptions, recover_pmf
from .spd import InvariantKind

log = logging.getLogger("covfield")

INVARIANT_CHOICES = ["trdifsq", "lik", "trsq", "trln2", "lntr", "lnpr"]


_LEVELS = {"debug": logging.DEBUG, "info": logging.INFO, "warning": logging.WARNING,
           "error": logging.ERROR, "quiet": logging.CRITICAL}


def _configure_logging():
    name = os.environ.get("COVFIELD_LOG", "warning").strip().lower()
    level = _LEVELS.get(name, logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s",
                        force=True)
    logging.captureWarnings(True)


def _file_digest(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()[:16]


def _emit(args, text):
    if args.out and args.out != "-":
        try:
            io.write_text(args.out, text)
        except OSError as exc:
            raise ValidationError(f"cannot write {args.out}: {exc.strerror}") from None
        log.info("wrote %s", args.out)
    else:
        sys.stdout.write(text)


def _format(args, default):
    if args.format:
        return args.format
    if args.out and args.out.lower().endswith(".csv"):
        return "csv"
    if args.out and args.out.lower().endswith(".json"):
        return "json"
    return default


def _config(args, **extra):
    cfg = {k: v for k, v in vars(args).items() if k not in ("out", "format", "func")}
    cfg.update(extra)
    return cfg


def _record(args, payload, **extra):
    return io.dumps(io.result_record(args.command, _config(args, **extra), payload))


# -- subcommands ----------------------------------------------------------------


def cmd_field(args):
    pmf = io.pmf_from_json(io.read_json(args.pmf), "pmf")
    M = pmf.manifold
    amp = Amplitude.parse(args.amplitude)
    extra = {"pmf": _file_digest(args.pmf)}
    if args.grid:
        GM, Q = io.points_from_json(io.read_json(args.grid), "grid")
        if GM != M:
            raise ValidationError(f"grid manifold {GM.tag} differs from pmf manifold {M.tag}")
        extra["grid"] = _file_digest(args.grid)
    else:
        Q = random_points(M, trial_rng(args.seed, 0), args.k)
    n = M.dim
    rows = []
    for q in Q:
        T = covariance_at(M, q, pmf, amp)
        rows.append({
            "q": q,
            "trace": trace_field(M, q, pmf, amp),
            "eigenvalues": T.operator_eigenvalues(),
            "sigma": T.sigma.reshape(-1),
        })
    if _format(args, "csv") == "csv":
        header = ([f"q{i}" for i in range(M.ambient_dim)] + ["trace"]
                  + [f"eig{i}" for i in range(n)]
                  + [f"sigma{r}{c}" for r in range(n) for c in range(n)])
        body = [[*r["q"], r["trace"], *r["eigenvalues"], *r["sigma"]] for r in rows]
        return io.to_csv(header, body)
    return _record(args, {"manifold": M.tag, "amplitude": amp.to_tag(), "rows": rows}, **extra)


def cmd_demo_s2(args):
    rep = demo_s2(args.k, args.seed)
    log.info("unit z=%.3f amplitude z=%.3f ratio=%.4f", rep["unit"]["z"], rep["amplitude"]["z"],
             rep["per_pair_ratio"])
    if not rep["sum_inequality_with_k_factor_holds"]:
        log.info("the inequality with an extra (k-1) factor does not hold; the per-pair ratio is reported")
    return _record(args, rep)


def cmd_rank_scan(args):
    M = manifold_from_tag(args.manifold)
    amp = Amplitude.parse(args.amplitude)
    rows = rank_scan(M, args.k, args.trials, amp, args.seed, args.tol)
    for r in rows:
        if r["rank"] < args.k:
            log.warning("trial %d: rank %d < %d, singular values %s", r["trial"], r["rank"], args.k,
                        " ".join(io.fmt(s) for s in r["singular_values"]))
    if _format(args, "csv") == "csv":
        return io.to_csv(
            ["trial", "rank", "smallest_retained", "relative_smallest"],
            [[r["trial"], r["rank"], r["smallest_retained"], r["relative_smallest"]] for r in rows],
        )
    summary = {"max_rank": max(r["rank"] for r in rows), "min_rank": min(r["rank"] for r in rows),
               "full_rank_trials": sum(r["rank"] == args.k for r in rows)}
    return _record(args, {"manifold": M.tag, "summary": summary, "trials": rows})


def cmd_recover(args):
    problem = io.problem_from_json(io.read_json(args.problem), "problem")
    kind = args.invariant or problem.invariant or "trdifsq"
    opts = SolverOptions(kind, max_iter=args.max_iter, grad_tol=args.tol, method=args.method)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RankDeficientWarning)
        res = recover_pmf(problem.cset, problem.P, opts)
    notes = [str(w.message) for w in caught if issubclass(w.category, RankDeficientWarning)]
    for msg in notes:
        log.warning("%s", msg)
    payload = {
        "manifold": problem.manifold.tag,
        "invariant": opts.invariant_kind.value,
        "weights": res.weights,
        "H": res.value,
        "history": res.history,
        "iterations": res.iterations,
        "converged": res.converged,
        "projected_gradient": res.grad_norm,
        "rank": res.rank.rank,
        "singular_values": res.rank.singular_values,
        "warnings": notes,
        "shifted": res.shifted,
    }
    if problem.ground_truth is not None:
        payload["error_l2"] = float(np.linalg.norm(res.weights - problem.ground_truth))
    return _record(args, payload, problem=_file_digest(args.problem))


def cmd_consistency(args):
    M = manifold_from_tag(args.manifold)
    rng = trial_rng(args.seed, 0)
    P = random_points(M, rng, args.k)
    f0 = rng.dirichlet(np.ones(args.k))
    pmf = Pmf(M, P, f0)
    eps = [2.0**-m for m in range(1, args.levels + 1)]
    solver = SolverOptions(args.invariant, grad_tol=args.tol)
    rep = consistency_experiment(pmf, ObservationSet(M, P), args.invariant, eps, args.seed,
                                 Amplitude.parse(args.amplitude), solver)
    rows = rep.as_rows()
    if _format(args, "csv") == "csv":
        keys = list(rows[0])
        return io.to_csv(keys, [[r[k] for k in keys] for r in rows])
    return _record(args, {"rows": rows, "rate_constant": rep.rate_constant, "rate_ok": rep.rate_ok,
                          "ground_truth": f0})


def cmd_continuous_recover(args):
    try:
        ms = [int(x) for x in args.m.split(",") if x.strip()]
    except ValueError:
        raise ValidationError(f"bad resolution list {args.m!r}") from None
    if not ms or min(ms) < 1:
        raise ValidationError("resolutions must be positive integers")
    ref = cap_partition(args.radius, ms[0])
    rows = []
    for t in range(args.trials):
        seed = args.seed + t
        for m in ms:
            if args.target == "uniform":
                res = continuous_recovery(uniform_cap_sampler(args.radius), m, radius=args.radius,
                                          kind=args.invariant, seed=seed, reference_cells=ref,
                                          mass_fn=uniform_cap_masses)
                best = math.nan
            else:
                cells = cap_partition(args.radius, m)
                target = cells[trial_rng(seed, m, 1).integers(len(cells))].center()
                res = continuous_recovery(point_mass_sampler(target), m, radius=args.radius,
                                          kind=args.invariant, seed=seed, placement="center",
                                          reference_cells=ref, n_min=1, n_max=1)
                best = float(res.recovered[int(np.argmax(res.true_masses))])
            rows.append([seed, m, len(res.cells), res.tv, res.reference_tv, best, res.mc_samples])
            log.info("seed %d m %d: tv %.4g reference tv %.4g", seed, m, res.tv, res.reference_tv)
    header = ["seed", "m", "cells", "tv", "reference_tv", "target_mass", "mc_samples"]
    if _format(args, "csv") == "csv":
        return io.to_csv(header, rows)
    return _record(args, {"rows": [dict(zip(header, r)) for r in rows]})


def cmd_lipschitz(args):
    return _record(args, lipschitz_probe(args.rho, args.samples, args.seed))


# -- parser ---------------------------------------------------------------------


def _common(p, *, manifold=None, k=None, trials=False, amplitude=False, invariant=None, tol=None):
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=["json", "csv"], help="override the output format")
    if manifold is not None:
        p.add_argument("--manifold", default=manifold, help="euclidean:<n>, sphere2 or hyperbolic2")
    if k is not None:
        p.add_argument("--k", type=int, default=k, help=f"number of points (default {k})")
    if trials:
        p.add_argument("--trials", type=int, default=trials, help=f"number of trials (default {trials})")
    if amplitude:
        p.add_argument("--amplitude", default="unit", help="unit, a=<v> or optimal:R=<v>")
    if invariant is not None:
        p.add_argument("--invariant", choices=INVARIANT_CHOICES, default=invariant)
    if tol is not None:
        p.add_argument("--tol", type=float, default=tol)


def build_parser():
    parser = argparse.ArgumentParser(prog="covfield", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("field", help="covariance field of a pmf over a grid of points")
    p.add_argument("--pmf", required=True, help="pmf JSON file")
    p.add_argument("--grid", help="points JSON file (default: --k random points)")
    _common(p, k=20, amplitude=True)
    p.set_defaults(func=cmd_field)

    p = sub.add_parser("demo-s2", help="trace statistics of uniform points on S^2")
    _common(p, k=2000)
    p.set_defaults(func=cmd_demo_s2)

    p = sub.add_parser("rank-scan", help="numerical rank of the Y matrix over random trials")
    _common(p, manifold="sphere2", k=10, trials=100, amplitude=True, tol=1e-9)
    p.set_defaults(func=cmd_rank_scan)

    p = sub.add_parser("recover", help="recover a pmf from a problem file")
    p.add_argument("problem", help="problem JSON file")
    p.add_argument("--max-iter", type=int, default=5000)
    p.add_argument("--method", choices=["newton", "pgd"], default="newton")
    p.add_argument("--invariant", choices=INVARIANT_CHOICES, default=None,
                   help="objective (default: the problem's, else trdifsq)")
    _common(p, tol=1e-10)
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("consistency", help="recovery error under shrinking noise")
    p.add_argument("--levels", type=int, default=8, help="noise levels 2^-1 .. 2^-levels")
    _common(p, manifold="sphere2", k=10, amplitude=True, invariant="lik", tol=1e-10)
    p.set_defaults(func=cmd_consistency)

    p = sub.add_parser("continuous-recover", help="cell-mass recovery on an S^2 cap")
    p.add_argument("--m", default="1,2,4", help="comma-separated resolutions")
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--target", choices=["uniform", "point"], default="uniform")
    _common(p, trials=1, invariant="trdifsq")
    p.set_defaults(func=cmd_continuous_recover)

    p = sub.add_parser("lipschitz", help="empirical Lipschitz constant of the log map on a cap")
    p.add_argument("--rho", type=float, default=math.pi / 2, help="cap diameter")
    p.add_argument("--samples", type=int, default=100_000)
    _common(p)
    p.set_defaults(func=cmd_lipschitz)
    return parser


def _validate(args):
    for name in ("k", "trials", "samples", "levels", "max_iter"):
        v = getattr(args, name, None)
        if v is not None and v < 1:
            raise ValidationError(f"--{name.replace('_', '-')} must be positive")
    tol = getattr(args, "tol", None)
    if tol is not None and not (tol > 0 and math.isfinite(tol)):
        raise ValidationError("--tol must be a positive number")
    if getattr(args, "invariant", None):
        InvariantKind.parse(args.invariant)


def main(argv=None):
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _validate(args)
        with np.errstate(all="ignore"):
            text = args.func(args)
        _emit(args, text)
    except ValidationError as exc:
        log.error("%s", exc)
        return 2
    except CovFieldError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 3
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        log.error("numerical failure: %s", exc)
        return 3
    except Exception as exc:  # last resort: report instead of a traceback
        log.error("unexpected %s: %s", type(exc).__name__, exc)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
