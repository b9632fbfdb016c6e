import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conformal_lab.generators import cycle, grid, path, star
from conformal_lab.graph import (
    ConformalWeight,
    Graph,
    GraphError,
    area_omega,
    ball_area_check,
    basel_coefficients,
    combine_weights,
    conformal_ball,
    conformal_distance,
    degree_stats,
    graph_ball,
    graph_distance,
    mass_transport_check,
    pair_table,
    read_graph,
    read_weight,
    write_graph,
    write_weight,
)
from oracles import nx_distances, random_connected_graph


def W(*vals):
    return ConformalWeight(np.array(vals, dtype=float))


# ----------------------------------------------------------------------
# construction


def test_graph_rejects_loops_multi_edges_and_disconnection():
    with pytest.raises(GraphError):
        Graph(2, [(0, 0), (0, 1)])
    with pytest.raises(GraphError):
        Graph(2, [(0, 1), (1, 0)])
    with pytest.raises(GraphError):
        Graph(3, [(0, 1)])
    with pytest.raises(GraphError):
        Graph(2, [(0, 2)])


def test_single_vertex_graph():
    g = Graph(1, [])
    assert g.n == 1 and g.m == 0
    assert graph_ball(g, 0, 5).tolist() == [0]


def test_graph_equality_ignores_edge_order():
    assert Graph(3, [(0, 1), (2, 1)]) == Graph(3, [(1, 2), (1, 0)])


def test_weight_validation():
    with pytest.raises(GraphError):
        W(1.0, -0.5)
    with pytest.raises(GraphError):
        W(1.0, float("nan"))
    with pytest.raises(GraphError):
        ConformalWeight.uniform(3, 0.0).normalize()
    w = W(3.0, 4.0).normalize()
    assert w.normalized
    assert math.isclose(np.mean(w.values**2), 1.0)


# ----------------------------------------------------------------------
# distances and balls


def test_distance_examples():
    g = path(3)
    assert conformal_distance(g, W(1, 1, 1), 0).tolist() == [0, 1, 2]
    assert conformal_distance(g, W(2, 0, 2), 0).tolist() == [0, 1, 2]
    with pytest.raises(GraphError):
        conformal_distance(g, W(1, 1, 1), 3)


def test_ball_examples():
    g = cycle(6)
    assert sorted(conformal_ball(g, ConformalWeight.uniform(6), 0, 1).tolist()) == [0, 1, 5]
    assert conformal_ball(g, ConformalWeight.uniform(6, 2.0), 0, 1).tolist() == [0]
    assert conformal_ball(g, ConformalWeight.uniform(6), 3, 0).tolist() == [3]


def test_area_examples():
    g = path(3)
    assert area_omega(g, W(1, 2, 1), 1, 2) == pytest.approx(6.0)
    assert area_omega(g, W(1, 2, 1), 1, 0) == pytest.approx(4.0)
    g = grid(5)
    w = ConformalWeight.uniform(g.n)
    assert area_omega(g, w, 12, 2) == len(conformal_ball(g, w, 12, 2))


def test_zero_weight_collapses_distances():
    g = path(4)
    d = conformal_distance(g, W(0, 0, 0, 0), 0)
    assert np.all(d == 0)


@given(st.integers(0, 2**31 - 1))
def test_distances_match_networkx(seed):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng)
    w = ConformalWeight(rng.exponential(1.0, g.n))
    D = nx_distances(g, w)
    x = int(rng.integers(g.n))
    assert np.allclose(conformal_distance(g, w, x), D[x], atol=1e-12)
    assert np.allclose(graph_distance(g, x), nx_distances(g)[x])


@given(st.integers(0, 2**31 - 1), st.floats(0.0, 4.0))
def test_pair_table_matches_dense_distances(seed, R):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng)
    w = ConformalWeight(rng.uniform(0.0, 2.0, g.n))
    D = nx_distances(g, w)
    table = pair_table(g, w, R)
    assert np.array_equal(table.ball_sizes(), np.sum(D <= R + 1e-12, axis=1))
    for x in range(0, g.n, 5):
        assert sorted(table.ball(x).tolist()) == np.flatnonzero(D[x] <= R + 1e-12).tolist()


@given(st.integers(0, 2**31 - 1))
def test_triangle_inequality_and_symmetry(seed):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng)
    w = ConformalWeight(rng.uniform(0.0, 3.0, g.n))
    D = np.array([conformal_distance(g, w, x) for x in range(g.n)])
    assert np.allclose(D, D.T)
    assert np.all(D[:, :, None] <= D[:, None, :] + D.T[None, :, :] + 1e-9)


# ----------------------------------------------------------------------
# degree statistics


def test_degree_profile_examples():
    prof = degree_stats(star(4))
    assert prof.Delta(1) == 4
    assert prof.Delta(2) == 5
    assert prof.dbar(1.0) == pytest.approx(8 / 5)
    assert degree_stats(cycle(4)).pi_star(0.25) == pytest.approx(0.25)
    with pytest.raises(GraphError):
        prof.dbar(0)
    with pytest.raises(GraphError):
        prof.Delta(-1)


@given(st.integers(0, 2**31 - 1))
def test_delta_is_concave_prefix_sum(seed):
    g = random_connected_graph(np.random.default_rng(seed))
    prof = degree_stats(g)
    steps = np.diff([prof.Delta(k) for k in range(g.n + 1)])
    assert np.all(np.diff(steps) <= 0)
    assert prof.Delta(g.n) == 2 * g.m


# ----------------------------------------------------------------------
# combining weights


def test_combine_examples():
    w = W(1.0, 2.0, 0.5).normalize()
    assert np.allclose(combine_weights([w, w], [0.5, 0.5]).values, w.values)
    assert np.allclose(combine_weights([w], [1.0]).values, w.values)
    K = 12
    c = basel_coefficients(K)
    out = combine_weights([ConformalWeight.uniform(4)] * K, c)
    assert np.allclose(out.values, math.sqrt(c.sum()))
    assert out.values[0] < 1
    with pytest.raises(GraphError):
        combine_weights([], [])


@given(st.lists(st.floats(0.01, 10.0), min_size=1, max_size=6), st.integers(0, 1000))
def test_combination_of_normalized_weights_has_norm_below_one(coefs, seed):
    rng = np.random.default_rng(seed)
    c = np.asarray(coefs) / (sum(coefs) * 1.0001)
    ws = [ConformalWeight(rng.exponential(1.0, 7) + 1e-3).normalize() for _ in coefs]
    assert combine_weights(ws, c).l2_norm <= 1.0


# ----------------------------------------------------------------------
# mass transport and ball area


def test_mass_transport_edge_indicator():
    g = grid(6)
    A = g.adjacency()
    out_flow, in_flow = mass_transport_check(g, lambda x, y: np.asarray(A[x, y]).ravel(), 1)
    assert out_flow == in_flow == 2 * g.m


@given(st.integers(0, 2**31 - 1), st.integers(0, 3))
def test_mass_transport_random_function(seed, radius):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng)
    M = rng.standard_normal((g.n, g.n))
    out_flow, in_flow = mass_transport_check(g, lambda x, y: M[x, y], radius)
    D = nx_distances(g)
    direct = math.fsum(M[D <= radius].tolist())
    assert out_flow == pytest.approx(direct, abs=1e-9)
    assert in_flow == pytest.approx(math.fsum(M.T[D <= radius].tolist()), abs=1e-9)
    assert out_flow == pytest.approx(in_flow, abs=1e-9)


@given(st.integers(0, 2**31 - 1), st.floats(0.0, 5.0))
def test_ball_area_bound(seed, R):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng)
    w = ConformalWeight(rng.exponential(1.0, g.n)).normalize()
    lhs, rhs = ball_area_check(g, w, R)
    assert lhs <= rhs + 1e-9
    mean_area = np.mean([area_omega(g, w, x, R) for x in range(g.n)])
    assert lhs == pytest.approx(mean_area)


# ----------------------------------------------------------------------
# files


def test_graph_and_weight_round_trip(tmp_path):
    g = grid(4, 3)
    write_graph(g, tmp_path / "g.txt")
    assert read_graph(tmp_path / "g.txt") == g
    w = ConformalWeight(np.linspace(0.1, 2.0, g.n))
    write_weight(w, tmp_path / "w.txt")
    assert np.array_equal(read_weight(tmp_path / "w.txt", g.n).values, w.values)
    with pytest.raises(GraphError):
        read_weight(tmp_path / "w.txt", g.n + 1)
    (tmp_path / "bad.txt").write_text("3 2\n0 1\n")
    with pytest.raises(GraphError):
        read_graph(tmp_path / "bad.txt")


def test_graph_core_alias_exports_graph_api():
    import conformal_lab.graph as a
    import conformal_lab.graph_core as b

    assert b.__all__ == a.__all__
    assert all(getattr(b, name) is getattr(a, name) for name in a.__all__)
