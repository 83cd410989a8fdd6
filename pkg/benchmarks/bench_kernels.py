"""Compare the compiled kernels with the numpy fallback.

Run with ``python benchmarks/bench_kernels.py``. Prints one line per kernel
with the best-of-N wall time of each backend and the speedup.
"""

import argparse
import math
import timeit

import numpy as np

from covfield import _kernels_py as pure
from covfield.kernels import SPHERE

try:
    from covfield import _kernels as compiled
except ImportError:  # extension not built
    compiled = None


def _cases(n):
    rng = np.random.default_rng(0)
    X = rng.normal(size=(n, 3))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    q = np.array([0.0, 0.0, 1.0])
    E = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    w = np.full(n, 1.0 / n)
    m = int(math.sqrt(n))
    return {
        "dist_matrix": lambda k: k.dist_matrix(SPHERE, X[:m], X[:m]),
        "log_batch": lambda k: k.log_batch(SPHERE, q, X),
        "weighted_covariance": lambda k: k.weighted_covariance(SPHERE, q, X, w, 0.5, E),
        "covariance_moments": lambda k: k.covariance_moments(SPHERE, q, X, 0.5, E),
        "pair_trace_sums": lambda k: k.pair_trace_sums(SPHERE, X[: 4 * m], math.pi / 2),
        "log_chord_ratios": lambda k: k.log_chord_ratios(SPHERE, X, np.roll(X, 1, 0), np.roll(X, 2, 0)),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200_000, help="points per call")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"{'kernel':<22}{'python [ms]':>14}{'compiled [ms]':>16}{'speedup':>10}")
    for name, fn in _cases(args.n).items():
        tp = min(timeit.repeat(lambda: fn(pure), number=1, repeat=args.repeat)) * 1e3
        if compiled is None:
            print(f"{name:<22}{tp:>14.2f}{'n/a':>16}{'':>10}")
            continue
        tc = min(timeit.repeat(lambda: fn(compiled), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<22}{tp:>14.2f}{tc:>16.2f}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
