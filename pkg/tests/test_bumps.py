import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conformal_lab.bumps import (
    BumpFamily,
    area_eta,
    bump_family_delocalized,
    bump_family_easy,
    rayleigh_quotient,
    sepsets_easy,
    variational_check,
)
from conformal_lab.generators import cycle, grid, path
from conformal_lab.graph import ConformalWeight, Graph, GraphError, conformal_distance, pair_table
from conformal_lab.partitions import ckr_sampler, measure_alpha
from conformal_lab.spectral import spectrum
from oracles import random_connected_graph


def unit(g):
    return ConformalWeight.uniform(g.n)


def max_ball(g, w, R):
    return int(pair_table(g, w, R).ball_sizes().max())


def test_rayleigh_examples():
    K2 = Graph(2, [(0, 1)])
    K3 = Graph(3, [(0, 1), (1, 2), (0, 2)])
    assert rayleigh_quotient(K2, np.array([1.0, 0.0])) == pytest.approx(2.0)
    assert rayleigh_quotient(K3, np.array([1.0, 0.0, 0.0])) == pytest.approx(2.0)
    assert rayleigh_quotient(K3, np.ones(3)) == 0.0
    assert rayleigh_quotient(K3, ([0], [1.0])) == pytest.approx(2.0)
    with pytest.raises(GraphError):
        rayleigh_quotient(K3, np.zeros(3))


@given(st.integers(0, 2**31 - 1), st.floats(0.1, 10.0))
def test_rayleigh_is_scale_invariant_and_bounded(seed, c):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng)
    f = rng.random(g.n)
    r = rayleigh_quotient(g, f)
    assert r == pytest.approx(rayleigh_quotient(g, c * f))
    # (a - b)^2 <= 2 a^2 + 2 b^2 summed over edges gives at most 4 d_max n / m times ||f||
    assert 0 <= r <= 4 * g.d_max


def test_sepsets_on_path():
    g = path(64)
    w = unit(g)
    R, K = 8.0, 17
    assert max_ball(g, w, R) == K
    sampler = ckr_sampler(g, w, R / 2)
    alpha = measure_alpha(g, w, sampler, R / 2, 50, 0)
    ss = sepsets_easy(g, w, R, K, alpha, 0, sampler)
    chk = ss.checks(g, R, K, alpha)
    assert chk["separation_ok"] and chk["sizes_ok"] and chk["count_ok"]
    for i, a in enumerate(ss.sets):
        d = conformal_distance(g, w, a)
        for b in ss.sets[i + 1 :]:
            assert d[b].min() >= R / (2 * alpha) - 1e-9


def test_sepsets_with_n_equal_2k():
    g = path(34)
    w = unit(g)
    ss = sepsets_easy(g, w, 8.0, 17, 4.0, 0)
    assert len(ss.sets) >= 1


def test_sepsets_postconditions_on_grid():
    g = grid(32)
    w = unit(g)
    R = 6.0
    K = max_ball(g, w, R)
    sampler = ckr_sampler(g, w, R / 2)
    alpha = measure_alpha(g, w, sampler, R / 2, 30, 1)
    ss = sepsets_easy(g, w, R, K, alpha, 1, sampler)
    chk = ss.checks(g, R, K, alpha)
    assert all(v for k, v in chk.items() if k.endswith("_ok")), chk


def test_sepsets_rejects_bad_k():
    g = path(10)
    with pytest.raises(GraphError):
        sepsets_easy(g, unit(g), 2.0, 6, 1.0, 0)
    with pytest.raises(GraphError):
        sepsets_easy(g, unit(g), 4.0, 3, 1.0, 0)


def test_easy_bump_on_isolated_core():
    g = path(40)
    w = unit(g)
    fam = bump_family_easy(g, w, 8.0, 17, 3.0, 0)
    eta = fam.params["eta"]
    for s, core in zip(fam.supports, fam.cores):
        d = conformal_distance(g, w, core)
        assert np.all(d[s] < eta)
    assert fam.disjoint()


def test_variational_bound_on_grid():
    g = grid(48)
    w = unit(g)
    R = 8.0
    K = max_ball(g, w, R)
    fam = bump_family_easy(g, w, R, K, 2.0, 0)
    lam = spectrum(g).eigenvalues
    out = variational_check(fam, lam)
    assert out["ok"], out
    assert fam.disjoint()
    assert np.allclose(fam.recompute_rayleigh(g), fam.rayleigh)


def test_delocalized_mass_on_grid():
    g = grid(48)
    w = unit(g)
    R, delta = 10.0, 0.2
    K = max_ball(g, w, R)
    sampler = ckr_sampler(g, w, R / 2)
    alpha = measure_alpha(g, w, sampler, R / 2, 30, 7)
    fam = bump_family_delocalized(g, w, R, K, alpha, delta, 7, sampler)
    d = fam.diagnostics
    assert d["mass_ok"] and d["range_ok"] and d["disjoint"] and d["cores_equal_shaved"]
    assert d["supports_in_blocks"] and d["diameter_ok"] and d["size_ok"] and d["sum_ok"]
    for s, v, c in zip(fam.supports, fam.values, fam.cores):
        assert np.all((v > 0) & (v <= 1))
        assert np.array_equal(np.sort(s[v == 1.0]), np.sort(c))


def test_delocalized_with_delta_one_may_be_empty():
    g = cycle(30)
    w = unit(g)
    fam = bump_family_delocalized(g, w, 4.0, 9, 1.0, 1.0, 0)
    assert fam.diagnostics["mass_target"] <= 0
    assert variational_check(fam, spectrum(g).eigenvalues)["ok"]


def test_delocalized_rejects_bad_arguments():
    g = cycle(30)
    with pytest.raises(GraphError):
        bump_family_delocalized(g, unit(g), 4.0, 9, 1.0, 0.0, 0)
    with pytest.raises(GraphError):
        bump_family_delocalized(g, unit(g), 4.0, 3, 1.0, 0.5, 0)


def test_area_eta_formula():
    g = path(4)
    w = ConformalWeight(np.array([1.0, 2.0, 0.1, 3.0]))
    # S = {1, 2}; heavy vertices (w >= 1) are 0, 1, 3; edges (0,1), (1,2), (2,3) all touch S and a heavy vertex
    val = area_eta(g, w, np.array([1, 2]), 1.0, 2.0)
    assert val == pytest.approx(16 * 2.0 * (4.0 + 0.01) + 1.0 * 3)


def test_variational_check_empty_family():
    fam = BumpFamily([], [], [], np.zeros(0), {})
    assert variational_check(fam, np.zeros(3))["ok"]


@given(st.integers(0, 2**31 - 1))
def test_delocalized_family_properties(seed):
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng)
    w = ConformalWeight(rng.uniform(0.2, 2.0, g.n)).normalize()
    R = 3.0
    K = max_ball(g, w, R)
    fam = bump_family_delocalized(g, w, R, K, 2.0, 0.5, seed)
    assert fam.disjoint()
    assert fam.diagnostics["range_ok"]
    assert variational_check(fam, spectrum(g).eigenvalues)["ok"]
    assert np.allclose(fam.recompute_rayleigh(g), fam.rayleigh)
    assert math.isfinite(fam.diagnostics["sum_bound"])
