import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import breadth_first_order

from latentdd.errors import DisconnectedCloud, EmptyInput
from latentdd.manifold import (Curve1M, _components, ball_pivot, branch_of,
                               default_radius, export_curve_csv,
                               export_edges_csv, extract_connected_curve,
                               find_turning_points, mirror, stretch,
                               turning_indices, unstretch)


def as_curve(x, y=None):
    x = np.asarray(x, dtype=float)
    y = np.arange(len(x), dtype=float) if y is None else np.asarray(y, dtype=float)
    return Curve1M(np.column_stack([x, y]), np.arange(len(x)))


def test_equilateral_triangle_all_edges():
    P = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3) / 2]])
    edges = ball_pivot(P, radius=0.6, normalize=False)
    assert edges.tolist() == [[0, 1], [0, 2], [1, 2]]


def test_small_radius_gives_no_triangle_edges():
    P = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3) / 2]])
    assert len(ball_pivot(P, radius=0.45, normalize=False, check_connected=False)) == 0


def test_collinear_points_consecutive_edges_only():
    h = 0.1
    P = np.column_stack([np.arange(10) * h, np.zeros(10)])
    edges = ball_pivot(P, radius=h / 2 + 1e-3, normalize=False)
    assert edges.tolist() == [[i, i + 1] for i in range(9)]


def test_sine_curve_is_one_component():
    t = np.linspace(0, 2 * np.pi, 100)
    P = np.column_stack([t, np.sin(t)])
    edges = ball_pivot(P)
    # independent check: breadth-first reach from point 0 over the edge list
    A = coo_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(100, 100))
    reached = breadth_first_order(A + A.T, 0, directed=False, return_predecessors=False)
    assert len(reached) == 100
    assert _components(100, edges)[0] == 1


def test_disconnected_cloud_reports_sizes():
    a = np.column_stack([np.linspace(0, 0.1, 50), np.zeros(50)])
    b = a + [0.9, 1.0]
    with pytest.raises(DisconnectedCloud) as info:
        ball_pivot(np.vstack([a, b]))
    assert info.value.sizes == [50, 50]


def test_pivot_input_validation():
    with pytest.raises(EmptyInput):
        ball_pivot(np.empty((0, 2)))
    with pytest.raises(ValueError):
        ball_pivot(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        ball_pivot(np.eye(2), radius=0.0)


def test_default_radius_is_multiple_of_median_spacing():
    P = np.column_stack([np.arange(5.0), np.zeros(5)])
    assert default_radius(P, 3.0) == pytest.approx(3.0)


def test_monotone_line_order_is_sort_order():
    rng = np.random.default_rng(0)
    x = rng.permutation(np.linspace(0, 1, 12))
    P = np.column_stack([x, 2 * x + 1])
    curve = extract_connected_curve(ball_pivot(P), P)
    assert np.array_equal(curve.order, np.argsort(x))
    assert curve.jumps == 0


def test_v_shape_traversed_in_sequence():
    P = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [1.0, 3.0], [0.0, 4.0]])
    shuffled = [3, 0, 4, 2, 1]
    edges = ball_pivot(P[shuffled], radius=0.75, normalize=False)
    assert len(edges) == 4
    curve = extract_connected_curve(edges, P[shuffled], normalize=False)
    assert np.array_equal(P[shuffled][curve.order], P)
    assert curve.jumps == 0


def test_walk_jumps_when_stuck():
    P = np.array([[0.0, 0.0], [0.1, 0.0], [5.0, 1.0], [5.1, 1.0]])
    edges = np.array([[0, 1], [2, 3]])
    curve = extract_connected_curve(edges, P, normalize=False)
    assert curve.order.tolist() == [0, 1, 2, 3]
    assert curve.jumps == 1


def test_walk_visits_each_point_once():
    rng = np.random.default_rng(3)
    P = rng.uniform(size=(60, 2))
    curve = extract_connected_curve(ball_pivot(P, check_connected=False), P)
    assert sorted(curve.order.tolist()) == list(range(60))
    assert curve.order[0] == np.argmin(P[:, 1])
    with pytest.raises(EmptyInput):
        extract_connected_curve(np.empty((0, 2)), np.empty((0, 2)))


def test_turning_points_examples():
    assert turning_indices([0, 1, 2, 3]) == []
    assert turning_indices([0, 1, 1, 0.5]) == [2]
    # both 1 and 2 satisfy dx_j * dx_{j+1} < 0
    assert turning_indices([0, 1, 0.5, 1.5]) == [1, 2]
    tps = find_turning_points(as_curve([0, 1, 1, 0.5], [5, 6, 7, 8]))
    assert [(t.index, t.coords) for t in tps] == [(2, (1.0, 7.0))]
    assert find_turning_points(as_curve([0, 1])) == []


@given(st.lists(st.integers(-3, 3), min_size=3, max_size=30))
def test_turning_points_match_strict_product_rule(xs):
    dx = np.diff(np.asarray(xs, dtype=float))
    nz = [(i, d) for i, d in enumerate(dx) if d != 0]
    expected = [j for (_, a), (j, b) in zip(nz, nz[1:]) if a * b < 0]
    assert turning_indices(xs) == expected


def test_mirror_example():
    assert mirror(2.0, 3.0) == 4.0
    assert mirror(mirror(2.75, -1.25), -1.25) == 2.75


def test_stretch_without_turning_points_is_identity():
    curve = as_curve([0.0, 0.5, 2.0])
    sm = stretch(curve)
    assert np.array_equal(sm.points, curve.points)
    assert len(sm.branches) == 1 and sm.branches[0].sign == 1.0


def test_stretch_v_example():
    sm = stretch(as_curve([0, 1, 2, 3, 2, 1]))
    assert sm.x.tolist() == [0, 1, 2, 3, 4, 5]
    assert [(b.lo, b.hi, b.start, b.end) for b in sm.branches] == [(0, 3, 0, 3), (3, 5, 3, 5)]
    assert sm.reflection_centers == (3.0,)
    assert sm.branch_ids().tolist() == [0, 0, 0, 0, 1, 1]


def test_branch_of_tiles_and_clamps():
    sm = stretch(as_curve([0, 1, 2, 3, 2, 1]))
    assert branch_of(sm, 1.5) == (sm.branches[0], False)
    assert branch_of(sm, 4.2) == (sm.branches[1], False)
    assert branch_of(sm, 3.0) == (sm.branches[0], False)
    assert branch_of(sm, 9.0) == (sm.branches[1], True)
    assert branch_of(sm, -1.0) == (sm.branches[0], True)


curves = st.lists(st.floats(-100, 100, allow_nan=False), min_size=2, max_size=40)


@settings(max_examples=200)
@given(curves)
def test_stretch_invariants(xs):
    curve = as_curve(xs)
    sm = stretch(curve)
    assert np.all(np.diff(sm.x) >= 0)
    assert np.array_equal(sm.y, curve.y)
    for br in sm.branches:
        seg = slice(br.start, br.end + 1)
        assert np.allclose(np.abs(np.diff(sm.x[seg])), np.abs(np.diff(curve.x[seg])),
                           rtol=0, atol=1e-9)
        assert np.allclose(br.invert(br.apply(curve.x[seg])), curve.x[seg], rtol=0, atol=1e-12)
    scale = 1 + np.abs(xs).max()
    assert np.allclose(unstretch(sm), curve.points, rtol=0, atol=1e-12 * scale)


@given(curves)
def test_branches_tile_range(xs):
    sm = stretch(as_curve(xs))
    br = sm.branches
    assert br[0].lo == sm.x.min() and br[-1].hi == sm.x.max()
    for a, b in zip(br, br[1:]):
        assert a.hi == b.lo and a.end == b.start
    assert all(b.lo <= b.hi for b in br)
    assert [b.sign for b in br] == [br[0].sign * (-1) ** i for i in range(len(br))]


def test_decreasing_start_keeps_monotone():
    sm = stretch(as_curve([3, 2, 1, 2, 4]))
    assert np.all(np.diff(sm.x) >= 0)
    assert sm.branches[0].sign == -1.0


def test_csv_exports(tmp_path):
    sm = stretch(as_curve([0, 1, 2, 3, 2, 1]))
    export_curve_csv(sm, tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "index,sample,x_tilde,y_tilde,x_bar,y_bar,branch_id"
    assert lines[5] == "4,4,2.0,4.0,4.0,4.0,1"
    export_edges_csv(np.array([[0, 1], [1, 2]]), tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text() == "a,b\n0,1\n1,2\n"
