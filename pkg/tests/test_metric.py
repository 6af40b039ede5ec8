import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ultraskel.errors import (
    AsymmetryError,
    DisconnectedGraph,
    ParseError,
    SinglePointSpace,
    TriangleViolation,
    ZeroOffDiagonal,
)
from ultraskel.metric import (
    ball_members,
    counting_measure,
    graph_metric,
    ingest,
    normalize_diameter,
    points_metric,
    validate_metric,
)

from conftest import random_planar_metric


def test_validate_path_metric():
    ms = validate_metric([[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    assert ms.n == 3
    assert ms.diameter() == 2.0


def test_validate_triangle_violation():
    with pytest.raises(TriangleViolation) as exc:
        validate_metric([[0, 1, 3], [1, 0, 1], [3, 1, 0]])
    x, y, z = exc.value.triple
    assert z == 1 and {x, y} == {0, 2}


def test_validate_equilateral():
    validate_metric(np.ones((4, 4)) - np.eye(4))


def test_validate_rejects_asymmetry_and_zeros():
    with pytest.raises(AsymmetryError):
        validate_metric([[0, 1], [2, 0]])
    with pytest.raises(ZeroOffDiagonal):
        validate_metric([[0, 0], [0, 0]])


def test_normalize_diameter_path():
    ms = validate_metric([[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    norm, scale = normalize_diameter(ms)
    assert scale == 2.0
    assert sorted(set(norm.dist[np.triu_indices(3, 1)])) == [0.5, 1.0]


def test_normalize_diameter_identity_and_scale():
    ms = validate_metric(np.ones((3, 3)) - np.eye(3))
    norm, scale = normalize_diameter(ms)
    assert scale == 1.0
    assert np.array_equal(norm.dist, ms.dist)
    ms7 = validate_metric(7 * (np.ones((3, 3)) - np.eye(3)))
    norm7, scale7 = normalize_diameter(ms7)
    assert scale7 == 7.0
    assert norm7.diameter() == 1.0
    # rescaling reproduces the input within one rounding step
    assert np.allclose(norm7.dist * scale7, ms7.dist, rtol=1e-15, atol=0)


def test_normalize_single_point():
    with pytest.raises(SinglePointSpace):
        normalize_diameter(validate_metric([[0.0]]))


def test_ball_members():
    ms = validate_metric([[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    assert ball_members(ms, 1, 1.0) == [0, 1, 2]
    assert ball_members(ms, 0, 0.0) == [0]
    eq = validate_metric(np.ones((4, 4)) - np.eye(4))
    assert ball_members(eq, 0, 0.5) == [0]


@given(st.integers(0, 6), st.integers(0, 6), st.floats(0, 2))
@settings(max_examples=50, deadline=None)
def test_ball_symmetry_property(x, y, r):
    ms = random_planar_metric(7, seed=5)
    assert (y in ball_members(ms, x, r)) == (x in ball_members(ms, y, r))


def test_ball_monotone_and_full():
    ms = random_planar_metric(9, seed=3)
    prev = set()
    for r in np.linspace(0, ms.diameter(), 12):
        cur = set(ball_members(ms, 2, r))
        assert prev <= cur
        prev = cur
    assert prev == set(range(9))


def test_ingest_edge_list_cycle():
    text = "a b 1\nb c 1\nc d 1\nd a 1\n"
    X = ingest(io.StringIO(text), fmt="edges")
    d = X.space.dist
    la = X.space.labels
    ia, ic = la.index("a"), la.index("c")
    assert d[ia, ic] == 2.0
    # shortest-path optimality is exact
    n = X.n
    for w in range(n):
        assert np.all(d <= d[:, [w]] + d[[w], :])


def test_ingest_json_points_l1():
    X = ingest(io.StringIO('{"points": [[0],[1],[3]], "metric": "l1"}'), fmt="json")
    vals = sorted(X.space.dist[np.triu_indices(3, 1)].tolist())
    assert vals == [1.0, 2.0, 3.0]


def test_ingest_csv_equilateral():
    X = ingest(io.StringIO("0,1,1\n1,0,1\n1,1,0\n"), fmt="csv")
    assert X.n == 3
    assert np.all(X.mu == 1.0)


def test_ingest_rejects_nan_and_disconnected():
    with pytest.raises(ParseError):
        ingest(io.StringIO('{"distances": [[0, null], [null, 0]]}'), fmt="json")
    with pytest.raises(DisconnectedGraph):
        graph_metric([("a", "b", 1), ("c", "d", 1)])


def test_ingest_json_measure():
    X = ingest(
        io.StringIO('{"distances": [[0,1],[1,0]], "measure": [2.0, 3.0]}'),
        fmt="json",
    )
    assert X.mass() == 5.0


def test_counting_measure_default():
    ms = random_planar_metric(5, seed=1)
    X = counting_measure(ms)
    assert X.mass() == 5.0


def test_points_metric_linf():
    ms = points_metric([[0, 0], [1, 2]], rule="linf")
    assert ms.dist[0, 1] == 2.0
