import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conformal_lab.generators import binary_tree, cycle, grid, path
from conformal_lab.graph import ConformalWeight, Graph, GraphError, graph_distance
from conformal_lab.resistance import (
    annulus_test_function,
    ball_comparison_check,
    dirichlet_energy,
    effective_resistance,
    is_regulated,
    recurrence_profile,
    regulate,
)
from oracles import cycle_resistance, path_resistance, random_connected_graph, to_networkx


def pinv_resistance(g, a, b):
    L = nx.laplacian_matrix(to_networkx(g), nodelist=range(g.n)).toarray().astype(float)
    Lp = np.linalg.pinv(L)
    return Lp[a, a] + Lp[b, b] - 2 * Lp[a, b]


def test_resistance_examples():
    assert effective_resistance(path(3), [0], [2]).value == pytest.approx(2.0)
    assert effective_resistance(Graph(2, [(0, 1)]), 0, 1).value == pytest.approx(1.0)
    assert effective_resistance(cycle(4), 0, 2).value == pytest.approx(1.0)
    for n in (5, 17):
        assert effective_resistance(path(n), 0, n - 1).value == pytest.approx(path_resistance(n, 0, n - 1))
    for n, k in ((10, 3), (31, 15)):
        assert effective_resistance(cycle(n), 0, k).value == pytest.approx(cycle_resistance(n, 0, k))


def test_resistance_errors():
    with pytest.raises(GraphError):
        effective_resistance(path(4), [0, 1], [1, 3])
    with pytest.raises(GraphError):
        effective_resistance(path(4), [], [3])


@given(st.integers(0, 2**31 - 1))
def test_resistance_matches_pseudoinverse(seed):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng)
    a, b = rng.choice(g.n, 2, replace=False)
    q = effective_resistance(g, a, b)
    assert q.value == pytest.approx(pinv_resistance(g, a, b), rel=1e-8)
    assert q.potential[a] == 0 and q.potential[b] == 1
    assert q.value == pytest.approx(1 / q.energy(g), rel=1e-8)


@given(st.integers(0, 2**31 - 1))
def test_resistance_is_monotone_under_added_edges(seed):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng)
    a, b = (int(v) for v in rng.choice(g.n, 2, replace=False))
    present = {tuple(sorted(e)) for e in g.edges.tolist()}
    missing = [(u, v) for u in range(g.n) for v in range(u + 1, g.n) if (u, v) not in present]
    if not missing:
        return
    extra = missing[int(rng.integers(len(missing)))]
    h = Graph(g.n, g.edges.tolist() + [extra])
    assert effective_resistance(h, a, b).value <= effective_resistance(g, a, b).value * (1 + 1e-10)


@given(st.integers(0, 2**31 - 1))
def test_any_feasible_potential_gives_lower_bound(seed):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng)
    a, b = (int(v) for v in rng.choice(g.n, 2, replace=False))
    f = rng.random(g.n)
    f[a], f[b] = 0.0, 1.0
    assert 1 / dirichlet_energy(g, f) <= effective_resistance(g, a, b).value * (1 + 1e-10)


# ----------------------------------------------------------------------
# regulated weights


def test_regulate_on_k4():
    g = Graph(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])
    out = regulate(g, ConformalWeight.uniform(4), 3)
    assert np.allclose(out.values, math.sqrt(0.8125))


def test_regulate_errors():
    g = grid(4)
    with pytest.raises(GraphError):
        regulate(g, ConformalWeight.uniform(g.n), 3)
    with pytest.raises(GraphError):
        regulate(g, ConformalWeight(np.full(g.n, 3.0)), 4)


def test_regulate_with_a_spike():
    g = grid(10)
    raw = np.full(g.n, 1e-3)
    raw[37] = 1e3
    w = ConformalWeight(raw).normalize()
    out = regulate(g, w, 4)
    assert out.values.min() >= 0.5
    assert is_regulated(g, out, math.sqrt(8))


@given(st.integers(0, 2**31 - 1))
def test_regulate_properties(seed):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng)
    d = int(g.d_max) + int(rng.integers(0, 2))
    w = ConformalWeight(rng.exponential(1.0, g.n)).normalize()
    out = regulate(g, w, d)
    v = out.values
    assert is_regulated(g, out, math.sqrt(2 * d))
    u, x = g.edges[:, 0], g.edges[:, 1]
    assert np.all(v[u] ** 2 <= 2 * d * v[x] ** 2 * (1 + 1e-12))
    assert np.all(v >= w.values / 2 - 1e-12)
    assert 0.25 - 1e-12 <= np.mean(v**2) <= 1 + 1e-12
    # mass transport: mean w0^2 <= 2 mean w^2
    w0sq = (v**2 - 0.25) / 0.375
    assert np.mean(w0sq) <= 2 * np.mean(w.values**2) * (1 + 1e-12)
    # against the untruncated sum over all pairs
    D = np.array([graph_distance(g, y) for y in range(g.n)])
    want = (float(2 * d) ** -D) @ (w.values**2)
    assert np.allclose(w0sq, want, rtol=1e-10, atol=1e-14)


# ----------------------------------------------------------------------
# ball comparison and annulus test functions


def test_ball_comparison_examples():
    g = grid(41)
    x = 20 * 41 + 20
    out = ball_comparison_check(g, ConformalWeight.uniform(g.n), x, 8.0, 2.0)
    assert out["inner_radius"] == pytest.approx(2.0)
    assert out["inner_size"] == 13
    assert out["ball_size"] == 2 * 8 * 9 + 1
    assert out["inner_ok"] and out["outer_ok"]
    out = ball_comparison_check(g, ConformalWeight.uniform(g.n), x, 1.0, 2.0)
    assert out["inner_radius"] < 0 and out["inner_ok"]
    with pytest.raises(GraphError):
        ball_comparison_check(g, ConformalWeight(np.full(g.n, 0.4)), x, 8.0, 2.0)
    with pytest.raises(GraphError):
        ball_comparison_check(g, ConformalWeight.uniform(g.n), x, 8.0, 1.5)


def test_ball_comparison_on_regulated_grid():
    g = grid(40)
    rng = np.random.default_rng(3)
    w = regulate(g, ConformalWeight(rng.uniform(0, 2, g.n)).normalize(), 4)
    for x in (0, 820, 1599):
        out = ball_comparison_check(g, w, x, 16.0, math.sqrt(8))
        assert out["inner_ok"] and out["outer_ok"]


def test_annulus_on_cycle():
    g = cycle(100)
    cert = annulus_test_function(g, ConformalWeight.uniform(g.n), 7, 10.0, 2.0)
    assert cert.area == 21
    assert cert.bound == pytest.approx(100 / (4 * 9 * 2 * 21))
    assert cert.bound <= cert.exact and cert.ok
    # f is (2/R)-Lipschitz along edges of unit length
    f = cert.f
    assert np.all(np.abs(f[g.edges[:, 0]] - f[g.edges[:, 1]]) <= 0.2 + 1e-12)
    assert f[7] == 0 and f.max() == 1


def test_annulus_degenerate():
    g = cycle(30)
    cert = annulus_test_function(g, ConformalWeight.uniform(g.n), 0, 100.0, 2.0)
    assert cert.degenerate and cert.ok and cert.reason
    with pytest.raises(GraphError):
        annulus_test_function(g, ConformalWeight(np.full(g.n, 0.1)), 0, 4.0, 2.0)


@given(st.integers(0, 2**31 - 1), st.floats(1.0, 6.0))
def test_annulus_bound_is_below_exact_resistance(seed, R):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng)
    d = int(g.d_max)
    w = regulate(g, ConformalWeight(rng.uniform(0, 2, g.n)).normalize(), d)
    C = max(2.0, math.sqrt(2 * d))
    x = int(rng.integers(g.n))
    cert = annulus_test_function(g, w, x, R, C)
    assert cert.ok
    if not cert.degenerate:
        u, v = g.edges[:, 0], g.edges[:, 1]
        lens = (w.values[u] + w.values[v]) / 2
        assert np.all(np.abs(cert.f[u] - cert.f[v]) <= 2 / R * lens + 1e-12)


def test_recurrence_profile_single_root_matches_annulus():
    g = grid(30)
    w = ConformalWeight.uniform(g.n)
    rows = recurrence_profile(g, lambda R: w, [4.0], 2.0, roots=[465])
    cert = annulus_test_function(g, w, 465, 4.0, 2.0)
    assert rows[0]["bounds"] == [cert.bound]
    assert rows[0]["exact"] == [cert.exact]
    assert rows[0]["fraction"] == 1.0 and rows[0]["all_ok"]


def test_recurrence_profile_on_grid_and_tree():
    g = grid(128)
    w = ConformalWeight.uniform(g.n)
    rows = recurrence_profile(g, lambda R: w, [4.0, 8.0, 16.0], 2.0, roots=12, seed=1, collar=True)
    for row in rows:
        assert row["all_ok"] and row["degenerate"] == 0
        assert row["fraction"] >= 0.9
    t = binary_tree(10)
    rows = recurrence_profile(t, lambda R: ConformalWeight.uniform(t.n), [2.0, 4.0], 2.0, roots=[0])
    assert rows[1]["bounds"][0] < rows[0]["bounds"][0]
    with pytest.raises(GraphError):
        recurrence_profile(g, lambda R: ConformalWeight(np.full(g.n, 0.2)), [4.0], 2.0, roots=[0])
