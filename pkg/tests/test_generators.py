import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conformal_lab.generators import (
    KINDS,
    GeneratorSpec,
    binary_tree,
    canopy_tree,
    cycle,
    decorated_tree,
    generate,
    grid,
    prism,
    stacked_triangulation,
    transient_multiplicities,
    transient_tree,
    tri_grid,
)
from conformal_lab.graph import GraphError, graph_distance
from conformal_lab.rng import derive_rng, derive_seed
from oracles import to_networkx


def test_small_sizes():
    g = binary_tree(2)
    assert (g.n, g.m) == (7, 6)
    g = prism(3)
    assert g.n == 12
    assert np.all(g.degrees[3:9] == 4)
    assert np.all(g.degrees[:3] == 3)
    g = tri_grid(3)
    assert (g.n, g.m) == (9, 16)


def test_grid_and_torus_match_networkx():
    assert nx.is_isomorphic(to_networkx(grid(4, 5)), nx.grid_2d_graph(4, 5))
    t = grid(5, torus=True)
    assert np.all(t.degrees == 4)
    assert nx.is_isomorphic(to_networkx(t), nx.grid_2d_graph(5, 5, periodic=True))
    with pytest.raises(GraphError):
        grid(2, torus=True)


def test_tri_grid_is_planar_triangulated_square():
    g = tri_grid(6)
    G = to_networkx(g)
    assert nx.check_planarity(G)[0]
    # every interior vertex has degree six
    idx = np.arange(36).reshape(6, 6)
    assert np.all(g.degrees[idx[1:-1, 1:-1].ravel()] == 6)
    assert g.m == 2 * 6 * 5 + 5 * 5


def test_cycle_and_binary_tree_shapes():
    assert np.all(cycle(9).degrees == 2)
    t = binary_tree(5)
    assert nx.is_tree(to_networkx(t))
    assert graph_distance(t, 0).max() == 5


def test_canopy_tree_root_is_a_leaf():
    g, height = canopy_tree(4)
    assert g.degrees[0] == 1
    assert height[0] == 0
    assert nx.is_isomorphic(to_networkx(g), to_networkx(binary_tree(4)))
    # heights drop by one along every edge
    assert np.all(np.abs(height[g.edges[:, 0]] - height[g.edges[:, 1]]) == 1)


@given(st.integers(0, 60), st.integers(0, 2**31 - 1))
def test_stacked_triangulation_is_maximal_planar(k, seed):
    g = stacked_triangulation(k, np.random.default_rng(seed))
    assert g.n == 3 + k
    assert g.m == 3 * g.n - 6
    assert nx.check_planarity(to_networkx(g))[0]


@given(st.integers(0, 4), st.floats(0.2, 3.0), st.integers(0, 2**31 - 1))
def test_decorated_tree_structure(depth, alpha, seed):
    g, mask = decorated_tree(depth, alpha, 20, np.random.default_rng(seed), 10**6)
    n_tree = 1 if depth == 0 else 1 + 3 * (2**depth - 1)
    assert mask.sum() == n_tree
    assert nx.is_tree(to_networkx(g))
    # each tree vertex carries exactly one hanging path
    assert np.all(g.degrees[~mask] <= 2)
    assert np.sum(g.degrees[~mask] == 1) == n_tree


def test_decorated_tree_respects_cap():
    with pytest.raises(GraphError):
        decorated_tree(6, 0.5, 10_000, np.random.default_rng(0), 50)


def test_transient_multiplicities_and_tree():
    d = [1.0, 1.0, 1.0, 1.0, 1.0]
    assert transient_multiplicities(3, d).tolist() == [1, 1, 1]
    g = transient_tree(3, d, 10**6)
    assert g == binary_tree(3)
    d = [1.0, 1.1, 1.3, 1.6, 2.0, 2.3]
    f = transient_multiplicities(4, d)
    assert f.tolist() == [1, 1, 1, 2]
    g = transient_tree(4, d, 10**6)
    # the two root edges are doubled through midpoints
    assert g.n == 31 + 2 * 2
    with pytest.raises(GraphError):
        transient_multiplicities(2, [1.0, 5.0, 1.0, 1.0])


def test_generate_dispatch_and_errors():
    for kind in KINDS:
        params = {
            "grid": {"a": 3},
            "tri_grid": {"k": 3},
            "cycle": {"n": 5},
            "path": {"n": 5},
            "star": {"n": 4},
            "binary_tree": {"h": 2},
            "canopy_tree": {"h": 2},
            "prism": {"L": 2},
            "stacked_triangulation": {"n": 4},
            "decorated_tree": {"depth": 2, "L_max": 5},
            "transient_tree": {"h": 2, "d": [1, 1, 1, 1]},
        }[kind]
        g = generate(GeneratorSpec(kind, params, seed=3))
        assert g.n >= 3
    with pytest.raises(GraphError):
        GeneratorSpec("hypercube")
    with pytest.raises(GraphError):
        generate(GeneratorSpec("grid", {"a": 2000}))
    with pytest.raises(GraphError):
        generate(GeneratorSpec("cycle", {}))
    g, labels = generate(GeneratorSpec("canopy_tree", {"h": 3}), with_labels=True)
    assert "height" in labels


def test_generation_is_seeded():
    a = generate(GeneratorSpec("stacked_triangulation", {"n": 50}, seed=9))
    b = generate(GeneratorSpec("stacked_triangulation", {"n": 50}, seed=9))
    c = generate(GeneratorSpec("stacked_triangulation", {"n": 50}, seed=10))
    assert a == b
    assert a != c


def test_named_streams_are_stable_and_distinct():
    x = derive_rng(5, "trial", 3).random(4)
    assert np.array_equal(x, derive_rng(5, "trial", 3).random(4))
    assert not np.array_equal(x, derive_rng(5, "trial", 4).random(4))
    assert derive_seed(5, "a") == derive_seed(5, "a") != derive_seed(5, "b")
    with pytest.raises(ValueError):
        derive_rng(0, -1)
