"""SPD matrix utilities and similarity-invariant functions on Sym_n^+.

Eigendecomposition is the only backend: inverses, logs and determinants of
SPD matrices are all read off ``numpy.linalg.eigh``.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from .errors import DomainError, NotSpd, ValidationError

ASYMMETRY_TOL = 1e-8
EIG_REL_TOL = 1e-12


class InvariantKind(str, enum.Enum):
    TRDIF = "trdif"
    TRDIFSQ = "trdifsq"
    TRLN2 = "trln2"
    LIK = "lik"
    LNTR = "lntr"
    LNPR = "lnpr"
    TRSQ = "trsq"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            names = ", ".join(k.value for k in cls)
            raise ValidationError(f"unknown invariant {value!r}; expected one of {names}") from None


#: kinds with analytic gradients and a convex recovery objective
CONVEX_KINDS = frozenset({InvariantKind.TRDIFSQ, InvariantKind.LIK, InvariantKind.TRSQ})


def as_symmetric(M, *, tol=ASYMMETRY_TOL, name="matrix"):
    """Symmetrise ``M``; reject it if it was visibly asymmetric to begin with."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValidationError(f"{name} has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M - M.T)) > tol * scale:
        raise ValidationError(f"{name} is not symmetric")
    return 0.5 * (M + M.T)


def as_spd(M, *, semidefinite=False, name="matrix"):
    """Validated symmetric copy of ``M``; raises :class:`NotSpd` on failure."""
    S = as_symmetric(M, name=name)
    w = np.linalg.eigvalsh(S)
    scale = max(float(np.max(np.abs(w))), np.finfo(float).tiny) if w.size else 1.0
    floor = -EIG_REL_TOL * scale if semidefinite else EIG_REL_TOL * scale
    if w.size and (w[0] < floor or (not semidefinite and w[0] <= floor)):
        raise NotSpd(f"{name} has eigenvalue {w[0]:.3e}")
    return S


def _eig_spd(X, name):
    X = 0.5 * (np.asarray(X, dtype=float) + np.asarray(X, dtype=float).T)
    w, V = np.linalg.eigh(X)
    if w[-1] <= 0 or w[0] <= EIG_REL_TOL * abs(w[-1]):
        raise NotSpd(f"{name} is not strictly positive definite (min eigenvalue {w[0]:.3e})")
    return w, V


def spd_inv(X, name="matrix"):
    w, V = _eig_spd(X, name)
    return (V / w) @ V.T


def spd_inv_sqrt(X, name="matrix"):
    w, V = _eig_spd(X, name)
    return (V / np.sqrt(w)) @ V.T


def whiten_log(X, Y):
    """Logs of the eigenvalues of Y^-1/2 X Y^-1/2 (the spectrum of X Y^-1), ascending."""
    _eig_spd(X, "X")
    R = spd_inv_sqrt(Y, "Y")
    W = R @ np.asarray(X, dtype=float) @ R
    w = np.linalg.eigvalsh(0.5 * (W + W.T))
    if w[0] <= 0:
        raise NotSpd("whitened matrix lost positive definiteness")
    return np.log(w)


def invariant(kind, X, Y, Z=None):
    """Similarity-invariant discrepancy h(X, Y).

    ``Z`` is only used by the trace-difference kinds and defaults to the
    identity (the inverse metric in an orthonormal frame).
    """
    kind = InvariantKind.parse(kind)
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n = X.shape[0]
    if kind in (InvariantKind.TRDIF, InvariantKind.TRDIFSQ):
        _eig_spd(X, "X")
        _eig_spd(Y, "Y")
        Zi = np.eye(n) if Z is None else spd_inv(Z, "Z")
        t = float(np.trace(Zi @ (X - Y)))
        return abs(t) if kind is InvariantKind.TRDIF else t * t
    if kind is InvariantKind.TRLN2:
        return math.sqrt(float(np.sum(whiten_log(X, Y) ** 2)))
    if kind is InvariantKind.LIK:
        logs = whiten_log(X, Y)
        return float(np.sum(np.exp(logs)) - np.sum(logs) - n)
    if kind in (InvariantKind.TRSQ, InvariantKind.LNTR):
        # eigenvalues l of XY^-1 give tr((XY^-1 - YX^-1)^2) = sum (l - 1/l)^2
        logs = whiten_log(X, Y)
        value = float(np.sum((2.0 * np.sinh(logs)) ** 2))
        if kind is InvariantKind.TRSQ:
            return value
        if value <= 0.0:
            raise DomainError("lntr is undefined for X = Y")
        return math.log(value)
    if kind is InvariantKind.LNPR:
        lam = np.exp(whiten_log(X, Y))
        return math.log(float(np.sum(lam) * np.sum(1.0 / lam)))
    raise AssertionError(kind)


def numerical_rank(M, rel_tol=1e-9):
    """Number of singular values above ``rel_tol`` times the largest one."""
    s = np.linalg.svd(np.atleast_2d(np.asarray(M, dtype=float)), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rel_tol * s[0]))
