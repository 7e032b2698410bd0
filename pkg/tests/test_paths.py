import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randflight.paths import (
    PathSample,
    Polyline,
    pairwise_sup_distance,
    read_paths_jsonl,
    sup_distance,
    sup_norm,
    write_paths_csv,
    write_paths_jsonl,
)


def random_polyline(rng, knots=10, d=1, scale=1.0):
    inner = np.sort(rng.uniform(0, 1, knots - 2))
    t = np.concatenate(([0.0], inner, [1.0]))
    return Polyline(t, scale * rng.standard_normal((knots, d)))


def grid_sup(a, b, points=100_001):
    # dense-grid oracle, independent of the breakpoint union
    ts = np.linspace(0, 1, points)
    va = np.column_stack([np.interp(ts, a.t, a.v[:, j]) for j in range(a.d)])
    vb = np.column_stack([np.interp(ts, b.t, b.v[:, j]) for j in range(b.d)])
    return np.linalg.norm(va - vb, axis=1).max()


def test_eval_examples():
    line = Polyline([0, 1], [0, 1])
    assert line.eval(0.5)[0] == 0.5
    bent = Polyline([0, 0.25, 1], [0, 1, 1])
    assert bent.eval(0.125)[0] == pytest.approx(0.5)


def test_eval_at_breakpoints_returns_stored_values():
    p = random_polyline(np.random.default_rng(0), 12, 3)
    for t, v in zip(p.t, p.v):
        np.testing.assert_array_equal(p.eval(t), v)


def test_eval_outside_unit_interval():
    with pytest.raises(ValueError):
        Polyline([0, 1], [0, 1]).eval(1.5)


@pytest.mark.parametrize(
    "t,v",
    [([0.1, 1], [0, 1]), ([0, 0.9], [0, 1]), ([0, 0.5, 0.5, 1], [0, 1, 2, 3]), ([0, 1], [0, np.nan])],
)
def test_polyline_validation(t, v):
    with pytest.raises(ValueError):
        Polyline(t, v)


def test_from_knots_merges_ties_keeping_later_value():
    p = Polyline.from_knots([0, 0, 0.5, 1, 1], [0, 5, 1, 2, 3])
    np.testing.assert_array_equal(p.t, [0, 0.5, 1])
    np.testing.assert_array_equal(p.v[:, 0], [5, 1, 3])


def test_sup_distance_examples():
    line = Polyline([0, 1], [0, 1])
    zero = Polyline.zero(1)
    assert sup_distance(line, line) == 0
    assert sup_distance(line, zero) == 1
    assert sup_norm(zero) == 0


def test_sup_norm_of_linear_unit_path():
    eps = np.array([0.6, -0.8])
    p = Polyline([0, 1], [np.zeros(2), eps])
    assert p.sup_norm() == pytest.approx(1.0)
    assert p.sup_norm() == sup_distance(p, Polyline.zero(2))


@pytest.mark.parametrize("d", [1, 2])
def test_breakpoint_union_brackets_dense_grid(d):
    # off-grid knots: the grid under-estimates by at most (max slope) * step
    rng = np.random.default_rng(2024 + d)
    points = 100_001
    for _ in range(300):
        a, b = random_polyline(rng, 10, d), random_polyline(rng, 10, d)
        exact = sup_distance(a, b)
        approx = grid_sup(a, b, points)
        slope = max(
            (np.linalg.norm(np.diff(p.v, axis=0), axis=1) / np.diff(p.t)).max() for p in (a, b)
        )
        assert approx <= exact + 1e-12
        assert exact - approx <= 2 * slope / (points - 1) + 1e-12


def test_breakpoint_union_equals_dense_grid_on_grid_knots():
    # knots on the grid make the grid maximum exact
    rng = np.random.default_rng(7)
    grid = np.linspace(0, 1, 100_001)
    for _ in range(1000):
        ta = np.sort(rng.choice(grid[1:-1], 8, replace=False))
        tb = np.sort(rng.choice(grid[1:-1], 8, replace=False))
        a = Polyline(np.r_[0, ta, 1], rng.standard_normal(10))
        b = Polyline(np.r_[0, tb, 1], rng.standard_normal(10))
        assert abs(grid_sup(a, b) - sup_distance(a, b)) <= 1e-9


@given(seed=st.integers(0, 10_000), d=st.integers(1, 3))
@settings(max_examples=60, deadline=None)
def test_metric_axioms(seed, d):
    rng = np.random.default_rng(seed)
    a, b, c = (random_polyline(rng, int(rng.integers(2, 15)), d) for _ in range(3))
    assert sup_distance(a, b) == sup_distance(b, a)
    assert sup_distance(a, c) <= sup_distance(a, b) + sup_distance(b, c) + 1e-12
    assert sup_distance(a, Polyline(a.t.copy(), a.v.copy())) == 0


@given(seed=st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_eval_lipschitz_with_max_slope(seed):
    rng = np.random.default_rng(seed)
    p = random_polyline(rng, 8, 2)
    slope = (np.linalg.norm(np.diff(p.v, axis=0), axis=1) / np.diff(p.t)).max()
    ts = np.sort(rng.uniform(0, 1, 50))
    vals = p.values_at(ts)
    steps = np.linalg.norm(np.diff(vals, axis=0), axis=1)
    assert np.all(steps <= slope * np.diff(ts) * (1 + 1e-9) + 1e-15)


def test_pairwise_matches_scalar_route():
    rng = np.random.default_rng(3)
    A = [random_polyline(rng, int(rng.integers(2, 12)), 2) for _ in range(7)]
    B = [random_polyline(rng, int(rng.integers(2, 12)), 2) for _ in range(5)]
    D = pairwise_sup_distance(A, B)
    ref = np.array([[sup_distance(a, b) for b in B] for a in A])
    np.testing.assert_allclose(D, ref, rtol=0, atol=1e-14)


def test_path_sample_validation():
    with pytest.raises(ValueError):
        PathSample([])
    with pytest.raises(ValueError):
        PathSample([Polyline.zero(1), Polyline.zero(2)])
    s = PathSample([Polyline([0, 1], [0, 2]), Polyline.zero(1)], {"kind": "test"})
    assert len(s) == 2 and s.d == 1
    np.testing.assert_array_equal(s.sup_norms(), [2, 0])


def test_jsonl_round_trip_is_exact():
    rng = np.random.default_rng(5)
    paths = [random_polyline(rng, 9, 3) for _ in range(4)]
    buf = io.StringIO()
    write_paths_jsonl(paths, buf)
    back = read_paths_jsonl(io.StringIO(buf.getvalue()))
    for p, q in zip(paths, back):
        assert p.t.tobytes() == q.t.tobytes() and p.v.tobytes() == q.v.tobytes()


def test_csv_layout():
    buf = io.StringIO()
    write_paths_csv([Polyline([0, 0.5, 1], [[0, 0], [1, 2], [3, 4]])], buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "path_id,knot_index,t,v_1,v_2"
    assert len(lines) == 4
    assert lines[2].split(",")[:3] == ["0", "1", "0.5"]
