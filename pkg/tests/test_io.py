import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covfield import io
from covfield.field import Amplitude, Pmf
from covfield.manifolds import Euclidean, Hyperbolic2, Sphere2, sample_sphere
from covfield.recovery import ObservationSet, forward_covariance_set

S2, H2 = Sphere2(), Hyperbolic2()

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=100, deadline=None)
@given(st.lists(finite, min_size=1, max_size=20))
def test_float_round_trip(xs):
    assert json.loads(io.dumps({"x": xs}))["x"] == xs


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.data())
def test_spd_round_trip(n, data):
    vals = data.draw(st.lists(st.floats(-1e6, 1e6), min_size=n * n, max_size=n * n))
    A = np.array(vals).reshape(n, n)
    S = A + A.T
    doc = json.loads(io.dumps(io.spd_to_json(S)))
    assert doc["dim"] == n
    assert np.array_equal(io.spd_from_json(doc), S)


def test_spd_row_major():
    doc = io.spd_to_json(np.array([[1.0, 2.0], [2.0, 5.0]]))
    assert json.loads(io.dumps(doc)) == {"data": [1.0, 2.0, 2.0, 5.0], "dim": 2}


@pytest.mark.parametrize(
    "doc, match",
    [
        ({"dim": 2, "data": [1, 0, 0]}, "4 entries"),
        ({"dim": 2, "data": [1, 0.5, 0, 1]}, "not symmetric"),
        ({"dim": 0, "data": []}, "bad dim"),
        ({"data": [1]}, "missing field 'dim'"),
        ({"dim": 1, "data": ["x"]}, "flat list"),
    ],
)
def test_spd_parse_errors(doc, match):
    with pytest.raises(io.ParseError, match=match):
        io.spd_from_json(doc)


def test_point_round_trip():
    x = sample_sphere(np.random.default_rng(0), 1)[0]
    M, y = io.point_from_json(json.loads(io.dumps(io.point_to_json(S2, x))))
    assert M == S2 and np.array_equal(x, y)
    doc = json.loads(io.dumps(io.points_to_json(H2, H2.project_point([[1.0, 2.0, 0.0], [0.0, 0.0, 0.0]]))))
    assert doc["manifold"] == "hyperbolic2"
    M, X = io.points_from_json(doc)
    assert X.shape == (2, 3)


def test_point_errors():
    with pytest.raises(io.ParseError, match=r"points.points\[1\]"):
        io.points_from_json({"manifold": "sphere2", "points": [[0, 0, 1], [0, 0, 2]]})
    with pytest.raises(io.ParseError, match="manifold"):
        io.point_from_json({"manifold": "klein", "coords": [0, 0, 1]})
    with pytest.raises(io.ParseError, match="rows of length 3"):
        io.points_from_json({"manifold": "sphere2", "points": [[0, 1]]})


def test_pmf_round_trip():
    pmf = Pmf(Euclidean(3), np.random.default_rng(1).normal(size=(4, 3)), [0.1, 0.2, 0.3, 0.4])
    back = io.pmf_from_json(json.loads(io.dumps(io.pmf_to_json(pmf))))
    assert np.array_equal(back.support, pmf.support) and np.array_equal(back.weights, pmf.weights)
    with pytest.raises(io.ParseError, match="weights"):
        io.pmf_from_json({"manifold": "euclidean:1", "support": [[0.0], [1.0]], "weights": [1.0]})


def _problem(amplitude=Amplitude()):
    rng = np.random.default_rng(2)
    P = sample_sphere(rng, 5)
    f0 = rng.dirichlet(np.ones(5))
    cs = forward_covariance_set(Pmf(S2, P, f0), ObservationSet(S2, P), amplitude)
    return io.Problem(cs, P, f0, "lik")


@pytest.mark.parametrize("amp", [Amplitude(), Amplitude(0.3), Amplitude(math.pi / 4)])
def test_problem_round_trip(amp):
    pr = _problem(amp)
    text = io.dumps(io.problem_to_json(pr))
    back = io.problem_from_json(json.loads(text))
    assert np.array_equal(back.cset.tensors, pr.cset.tensors)
    assert back.cset.amplitude == amp
    assert back.invariant == "lik"
    assert io.dumps(io.problem_to_json(back)) == text


def test_problem_from_ground_truth():
    pr = _problem()
    doc = json.loads(io.dumps(io.problem_to_json(pr, include_tensors=False)))
    back = io.problem_from_json(doc)
    np.testing.assert_allclose(back.cset.tensors, pr.cset.tensors, atol=1e-15)


def test_problem_errors():
    doc = json.loads(io.dumps(io.problem_to_json(_problem())))
    bad = json.loads(json.dumps(doc))
    bad["tensors"][2]["data"][1] += 1.0
    with pytest.raises(io.ParseError, match=r"tensors\[2\]"):
        io.problem_from_json(bad)
    bad = json.loads(json.dumps(doc))
    bad["tensors"] = bad["tensors"][:3]
    with pytest.raises(io.ParseError, match="list of 5 tensors"):
        io.problem_from_json(bad)
    bad = {k: v for k, v in doc.items() if k not in ("tensors", "ground_truth")}
    with pytest.raises(io.ParseError, match="tensors"):
        io.problem_from_json(bad)
    with pytest.raises(io.ParseError, match="amplitude"):
        io.problem_from_json(dict(doc, amplitude="a=-2"))


def test_json_syntax_error_has_line():
    with pytest.raises(io.ParseError, match="line 3"):
        io.loads('{\n "a": 1,\n oops\n}')


def test_csv_precision():
    text = io.to_csv(["x", "n", "flag"], [[math.pi, 3, True]])
    header, rows = io.read_csv(text)
    assert header == ["x", "n", "flag"]
    assert rows == [["3.14159265359", "3", "1"]]
    assert len(rows[0][0].replace(".", "")) == 12


def test_result_record_hash_stable():
    a = io.result_record("x", {"b": 1, "a": [1.0, 2.0]}, {"v": np.float64(1.5)})
    b = io.result_record("x", {"a": [1.0, 2.0], "b": 1}, {"v": 1.5})
    assert io.dumps(a) == io.dumps(b)
    assert json.loads(io.dumps(a))["payload"] == {"v": 1.5}
