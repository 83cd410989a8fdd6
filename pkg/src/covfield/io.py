"""JSON and CSV serialisation for points, SPD matrices, pmfs and problems.

Schemas
-------
point      ``{"manifold": tag, "coords": [...]}``
points     ``{"manifold": tag, "points": [[...], ...]}``
spd        ``{"dim": n, "data": [row-major entries]}``
pmf        ``{"manifold": tag, "support": [[...], ...], "weights": [...]}``
problem    ``{"manifold": tag, "P": [[...]], "Q": [[...]], "amplitude": "unit",
              "tensors": [spd, ...]}`` or ``"ground_truth": [weights]`` in
           place of (or alongside) ``tensors``.

Floats are written with ``repr`` (shortest string that round-trips), so every
emitted document re-parses to bit-identical values. CSV uses 12 significant
digits.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
from dataclasses import dataclass

import numpy as np

from . import __version__
from .errors import ValidationError
from .field import Amplitude, Pmf
from .manifolds import manifold_from_tag
from .recovery import CovarianceSet, ObservationSet, forward_covariance_set
from .spd import as_symmetric

CSV_DIGITS = 12


class ParseError(ValidationError):
    """Malformed input document; ``location`` names the offending element."""

    def __init__(self, message, location=None):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


# -- generic helpers ----------------------------------------------------------


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def dumps(obj):
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(_plain(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def loads(text, source="<input>"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}", source) from None


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    return loads(text, str(path))


def write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def config_hash(config):
    return hashlib.sha256(dumps(config).encode()).hexdigest()[:16]


def _require(doc, key, where):
    if not isinstance(doc, dict):
        raise ParseError("expected a JSON object", where)
    if key not in doc:
        raise ParseError(f"missing field {key!r}", where)
    return doc[key]


def _matrix(value, where, cols=None):
    try:
        A = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ParseError("expected a list of numeric rows", where) from None
    if A.ndim != 2 or (cols is not None and A.shape[1] != cols):
        raise ParseError(f"expected rows of length {cols}, got shape {A.shape}", where)
    if not np.all(np.isfinite(A)):
        raise ParseError("non-finite coordinates", where)
    return A


def _manifold(doc, where):
    try:
        return manifold_from_tag(_require(doc, "manifold", where))
    except ParseError:
        raise
    except ValidationError as exc:
        raise ParseError(str(exc), f"{where}.manifold") from None


def _points(M, value, where):
    A = _matrix(value, where, M.ambient_dim)
    for i, x in enumerate(A):
        try:
            M.check_point(x)
        except ValidationError as exc:
            raise ParseError(str(exc), f"{where}[{i}]") from None
    return A


# -- points -------------------------------------------------------------------


def point_to_json(M, x):
    return {"manifold": M.tag, "coords": np.asarray(x, dtype=float)}


def point_from_json(doc, where="point"):
    M = _manifold(doc, where)
    x = _points(M, [_require(doc, "coords", where)], f"{where}.coords")[0]
    return M, x


def points_to_json(M, X):
    return {"manifold": M.tag, "points": np.asarray(X, dtype=float)}


def points_from_json(doc, where="points"):
    M = _manifold(doc, where)
    return M, _points(M, _require(doc, "points", where), f"{where}.points")


# -- SPD matrices -------------------------------------------------------------


def spd_to_json(S):
    S = np.asarray(S, dtype=float)
    return {"dim": int(S.shape[0]), "data": S.reshape(-1)}


def spd_from_json(doc, where="spd", dim=None):
    n = _require(doc, "dim", where)
    data = _require(doc, "data", where)
    if not isinstance(n, int) or n < 1 or (dim is not None and n != dim):
        raise ParseError(f"bad dim {n!r}" + (f", expected {dim}" if dim else ""), where)
    try:
        a = np.array(data, dtype=float)
    except (TypeError, ValueError):
        raise ParseError("data must be a flat list of numbers", where) from None
    if a.shape != (n * n,):
        raise ParseError(f"data must hold {n * n} entries, got shape {a.shape}", where)
    try:
        return as_symmetric(a.reshape(n, n), name="matrix")
    except ValidationError as exc:
        raise ParseError(str(exc), where) from None


# -- pmfs and problems --------------------------------------------------------


def pmf_to_json(pmf):
    return {"manifold": pmf.manifold.tag, "support": pmf.support, "weights": pmf.weights}


def pmf_from_json(doc, where="pmf"):
    M = _manifold(doc, where)
    P = _points(M, _require(doc, "support", where), f"{where}.support")
    w = _weights(_require(doc, "weights", where), len(P), f"{where}.weights")
    try:
        return Pmf(M, P, w)
    except ValidationError as exc:
        raise ParseError(str(exc), where) from None


def _weights(value, k, where):
    try:
        w = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ParseError("expected a list of numbers", where) from None
    if w.shape != (k,):
        raise ParseError(f"expected {k} weights, got shape {w.shape}", where)
    return w


@dataclass
class Problem:
    """A recovery problem: support P, covariance set C and optional ground truth."""

    cset: CovarianceSet
    P: np.ndarray
    ground_truth: np.ndarray | None = None
    invariant: str | None = None

    @property
    def manifold(self):
        return self.cset.manifold


def problem_to_json(problem, include_tensors=True):
    doc = {
        "manifold": problem.manifold.tag,
        "P": problem.P,
        "Q": problem.cset.observations.points,
        "amplitude": problem.cset.amplitude.to_tag(),
    }
    if include_tensors:
        doc["tensors"] = [spd_to_json(C) for C in problem.cset.tensors]
    if problem.ground_truth is not None:
        doc["ground_truth"] = problem.ground_truth
    if problem.invariant is not None:
        doc["invariant"] = problem.invariant
    return doc


def problem_from_json(doc, where="problem"):
    M = _manifold(doc, where)
    P = _points(M, _require(doc, "P", where), f"{where}.P")
    Q = _points(M, _require(doc, "Q", where), f"{where}.Q")
    try:
        amp = Amplitude.parse(doc.get("amplitude", "unit"))
    except ValidationError as exc:
        raise ParseError(str(exc), f"{where}.amplitude") from None
    truth = doc.get("ground_truth")
    if truth is not None:
        truth = _weights(truth, len(P), f"{where}.ground_truth")
    obs = ObservationSet(M, Q)
    if "tensors" in doc:
        raw = doc["tensors"]
        if not isinstance(raw, list) or len(raw) != len(Q):
            raise ParseError(f"expected a list of {len(Q)} tensors", f"{where}.tensors")
        T = np.array([spd_from_json(t, f"{where}.tensors[{j}]", M.dim) for j, t in enumerate(raw)])
        cset = CovarianceSet(obs, T, amp)
    elif truth is not None:
        try:
            cset = forward_covariance_set(Pmf(M, P, truth), obs, amp)
        except ValidationError as exc:
            raise ParseError(str(exc), f"{where}.ground_truth") from None
    else:
        raise ParseError("need 'tensors' or 'ground_truth'", where)
    inv = doc.get("invariant")
    return Problem(cset, P, truth, inv)


# -- records and CSV ----------------------------------------------------------


def result_record(command, config, payload):
    """Run metadata plus payload; the hash covers the canonical config."""
    return {
        "command": command,
        "config": config,
        "config_hash": config_hash(config),
        "version": __version__,
        "payload": payload,
    }


def fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), f".{CSV_DIGITS}g")
    return str(x)


def to_csv(header, rows):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    return buf.getvalue()


def read_csv(text):
    rows = list(csv.reader(_io.StringIO(text)))
    return rows[0], rows[1:]
