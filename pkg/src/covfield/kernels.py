"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy
fallback is used. Setting ``COVFIELD_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _kernels_py

EUCLIDEAN = _kernels_py.EUCLIDEAN
SPHERE = _kernels_py.SPHERE
HYPERBOLIC = _kernels_py.HYPERBOLIC

_impl = _kernels_py
BACKEND = "python"
if os.environ.get("COVFIELD_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # noqa: F811
        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py

dist_matrix = _impl.dist_matrix
log_batch = _impl.log_batch
weighted_covariance = _impl.weighted_covariance
pair_trace_sums = _impl.pair_trace_sums
covariance_moments = _impl.covariance_moments
log_chord_ratios = _impl.log_chord_ratios

__all__ = [
    "BACKEND",
    "EUCLIDEAN",
    "SPHERE",
    "HYPERBOLIC",
    "dist_matrix",
    "log_batch",
    "weighted_covariance",
    "pair_trace_sums",
    "covariance_moments",
    "log_chord_ratios",
]
