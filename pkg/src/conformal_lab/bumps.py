"""Disjointly supported test functions built from a conformal weight and a padded partition.

Two variants:

* ``bump_family_easy``: cores ``T_i`` of size between ``K/2`` and ``K``, pairwise
  ``R/(2 alpha)`` apart, and ``psi_i = max(0, eta - dist_w(., T_i))`` with ``eta = R/(12 alpha)``.
* ``bump_family_delocalized``: ``psi_i = max(0, eta - dist_w(., S_i_hat)) / eta`` with
  ``eta = delta R/(18 alpha)``; the cores ``S_i_hat`` carry almost all of the stationary mass.

Both take a partition sampler with blocks of diameter at most ``R/2`` (default: the
random ball carving of :mod:`conformal_lab.partitions`) and the padding parameter
``alpha`` measured for it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import (
    ConformalWeight,
    Graph,
    GraphError,
    conformal_distance,
    degree_stats,
    pair_table,
)
from .partitions import Partition, boundary_distance, ckr_sampler
from .rng import derive_seed

__all__ = [
    "rayleigh_quotient",
    "BumpFamily",
    "SepSets",
    "area_eta",
    "sepsets_easy",
    "bump_family_easy",
    "bump_family_delocalized",
    "variational_check",
    "StatisticalFailure",
]

TOL = 1e-9
MAX_RETRIES = 64


class StatisticalFailure(RuntimeError):
    """No sampled partition met the required shaved mass."""


def rayleigh_quotient(g: Graph, f) -> float:
    """``(1/|E|) sum_{edges} (f(x) - f(y))^2 / ||f||_pi^2``.

    ``f`` is a dense vector or a ``(support, values)`` pair.
    """
    if isinstance(f, tuple):
        supp, vals = f
        dense = np.zeros(g.n)
        dense[np.asarray(supp)] = vals
        f = dense
    f = np.asarray(f, dtype=float)
    if f.shape != (g.n,):
        raise GraphError("f must be a vertex function")
    denom = float(np.dot(g.stationary, f * f))
    if denom == 0:
        raise GraphError("Rayleigh quotient of the zero function")
    if g.m == 0:
        return 0.0
    d = f[g.edges[:, 0]] - f[g.edges[:, 1]]
    return float(np.dot(d, d)) / g.m / denom


@dataclass
class BumpFamily:
    """Sparse bump functions with supports, cores and Rayleigh quotients."""

    supports: list
    values: list
    cores: list
    rayleigh: np.ndarray
    params: dict
    diagnostics: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.supports)

    def dense(self, i: int, n: int) -> np.ndarray:
        f = np.zeros(n)
        f[self.supports[i]] = self.values[i]
        return f

    def disjoint(self) -> bool:
        if not self.supports:
            return True
        allv = np.concatenate(self.supports)
        return len(np.unique(allv)) == len(allv)

    def recompute_rayleigh(self, g: Graph) -> np.ndarray:
        return np.array([rayleigh_quotient(g, self.dense(i, g.n)) for i in range(len(self))])

    def rows(self, g: Graph) -> list[dict]:
        pi = g.stationary
        return [
            {
                "index": i,
                "support_size": int(len(s)),
                "core_size": int(len(c)),
                "core_mass": float(pi[c].sum()),
                "support_mass": float(pi[s].sum()),
                "rayleigh": float(r),
            }
            for i, (s, c, r) in enumerate(zip(self.supports, self.cores, self.rayleigh))
        ]


def _check_weight(g: Graph, w: ConformalWeight) -> None:
    if len(w) != g.n:
        raise GraphError("weight does not match the graph")


def area_eta(g: Graph, w: ConformalWeight, S: np.ndarray, eta: float, dbar: float) -> float:
    """``16 dbar area_w(S) + eta^2 |E(S, V_L)|`` with ``V_L = {w >= eta}``.

    Edges are counted once; an edge is in ``E(S, V_L)`` when one endpoint is in ``S``
    and the other in ``V_L``.
    """
    mask = np.zeros(g.n, dtype=bool)
    mask[S] = True
    heavy = w.values >= eta
    u, v = g.edges[:, 0], g.edges[:, 1]
    cross = (mask[u] & heavy[v]) | (mask[v] & heavy[u])
    return 16.0 * dbar * float(np.sum(w.values[mask] ** 2)) + eta**2 * int(cross.sum())


def _max_ball(g: Graph, w: ConformalWeight, R: float) -> int:
    return int(pair_table(g, w, R).ball_sizes().max())


def _inner_boundary_distance(g: Graph, w: ConformalWeight, part: Partition) -> np.ndarray:
    """``dist_w`` from each vertex to the set of vertices having a neighbour in another block."""
    u, v = g.edges[:, 0], g.edges[:, 1]
    cut = part.block_of[u] != part.block_of[v]
    bd = np.unique(np.concatenate([u[cut], v[cut]]))
    if len(bd) == 0:
        return np.full(g.n, np.inf)
    return conformal_distance(g, w, bd)


def _dist_to_set(g: Graph, w: ConformalWeight, S: np.ndarray, limit: float) -> np.ndarray:
    return conformal_distance(g, w, S, limit=limit)


@dataclass
class SepSets:
    """Well-separated vertex sets with the annotations used by the easy bump construction."""

    sets: list
    neighborhoods: list
    areas: np.ndarray
    total_area: float
    r_merged: int
    eta: float
    separation: float
    degree_cap: float
    shaved_count: int
    retries: int
    partition: Partition

    def checks(self, g: Graph, R: float, K: int, alpha: float) -> dict:
        sizes = [len(t) for t in self.sets]
        degs = [int(g.degrees[b].max()) if len(b) else 0 for b in self.neighborhoods]
        r = len(self.sets)
        return {
            "count": r,
            "count_ok": r >= max(1, math.ceil(g.n / (16 * K))),
            "sizes_ok": all(K / 2 <= s <= K for s in sizes),
            "separation": self.separation,
            "separation_ok": self.separation + TOL >= R / (2 * alpha),
            "area_ok": bool(np.all(self.areas <= 3.0 / self.r_merged * self.total_area + TOL)) if r else True,
            "degree_ok": all(d <= self.degree_cap + TOL for d in degs),
        }


def _min_pairwise_separation(g: Graph, w: ConformalWeight, sets: list, limit: float) -> float:
    if len(sets) < 2:
        return math.inf
    owner = np.full(g.n, -1)
    for i, t in enumerate(sets):
        owner[t] = i
    best = math.inf
    for i, t in enumerate(sets):
        d = _dist_to_set(g, w, t, limit)
        other = (owner >= 0) & (owner != i)
        if np.any(other):
            best = min(best, float(d[other].min()))
    return best


def sepsets_easy(
    g: Graph,
    w: ConformalWeight,
    R: float,
    K: int,
    alpha: float,
    seed: int,
    sampler=None,
    max_retries: int = MAX_RETRIES,
) -> SepSets:
    """Disjoint sets ``T_i`` with ``K/2 <= |T_i| <= K``, pairwise ``R/(2 alpha)`` apart,
    small ``area^eta`` neighbourhoods and no high-degree vertex nearby.

    Cores are the vertices at ``dist_w >= R/(4 alpha)`` from the inner boundary of their
    block; they are merged greedily in block order and the half with the smallest
    ``area^eta(B_w(T_i, R/(6 alpha)))`` is kept before the degree filter.
    """
    _check_weight(g, w)
    n = g.n
    K = int(K)
    if not (1 <= K <= n / 2):
        raise GraphError("need 1 <= K <= n/2")
    if _max_ball(g, w, R) > K:
        raise GraphError("ball-size assumption violated: some |B_w(x, R)| exceeds K")
    sampler = sampler or ckr_sampler(g, w, R / 2)
    prof = degree_stats(g)
    eta = R / (12 * alpha)
    lam = R / (4 * alpha)
    rho = R / (6 * alpha)
    dbar = prof.dbar(1.0 / K)

    best = None
    for t in range(max_retries):
        part = sampler(derive_seed(seed, "sepsets", t))
        if not part.diameters_ok(g, w) or part.tau > R / 2 + TOL:
            raise GraphError("sampler produced a block wider than R/2")
        inner = _inner_boundary_distance(g, w, part) + TOL >= lam
        count = int(inner.sum())
        if best is None or count > best[0]:
            best = (count, part, inner, t)
        if count >= n / 2:
            break
    count, part, inner, retries = best

    # greedy merge of shaved cores in block order
    pieces = [b[inner[b]] for b in part.blocks]
    pieces = [p for p in pieces if len(p)]
    merged, acc = [], []
    acc_size = 0
    for p in pieces:
        if len(p) >= K / 2:
            merged.append(np.sort(p))
            continue
        acc.append(p)
        acc_size += len(p)
        if acc_size >= K / 2:
            merged.append(np.sort(np.concatenate(acc)))
            acc, acc_size = [], 0
    r_merged = len(merged)
    if r_merged == 0:
        raise StatisticalFailure("no merged set reached size K/2")

    nbhd = []
    for t in merged:
        d = _dist_to_set(g, w, t, rho * (1 + 1e-12))
        nbhd.append(np.flatnonzero(d <= rho * (1 + 1e-12)))
    areas = np.array([area_eta(g, w, b, eta, dbar) for b in nbhd])
    total = area_eta(g, w, np.arange(n), eta, dbar)
    keep = np.argsort(areas, kind="stable")[: math.ceil(r_merged / 2)]
    keep = np.sort(keep)
    cap = 16 * dbar
    keep = [i for i in keep if g.degrees[nbhd[i]].max() <= cap]
    sets = [merged[i] for i in keep]
    if len(sets) < max(1, math.ceil(n / (16 * K))):
        raise StatisticalFailure(f"only {len(sets)} sets survived (shaved count {count} of {n})")
    sep = _min_pairwise_separation(g, w, sets, limit=R)
    return SepSets(
        sets=sets,
        neighborhoods=[nbhd[i] for i in keep],
        areas=areas[keep],
        total_area=total,
        r_merged=r_merged,
        eta=eta,
        separation=sep,
        degree_cap=cap,
        shaved_count=count,
        retries=retries,
        partition=part,
    )


def bump_family_easy(
    g: Graph,
    w: ConformalWeight,
    R: float,
    K: int,
    alpha: float,
    seed: int,
    sampler=None,
) -> BumpFamily:
    """Bumps ``psi_i = max(0, eta - dist_w(., T_i))`` on the sets of :func:`sepsets_easy`."""
    ss = sepsets_easy(g, w, R, K, alpha, seed, sampler)
    eta = ss.eta
    prof = degree_stats(g)
    supports, values, rq, local = [], [], [], []
    for t, b, a in zip(ss.sets, ss.neighborhoods, ss.areas):
        d = _dist_to_set(g, w, t, eta)
        s = np.flatnonzero(d < eta)
        v = eta - d[s]
        supports.append(s)
        values.append(v)
        r = rayleigh_quotient(g, (s, v))
        rq.append(r)
        local.append(2.0 * a / (eta**2 * g.degrees[t].sum()))
    rq = np.array(rq)
    local = np.array(local)
    scale = alpha**2 * (prof.dbar(1.0 / K) + prof.dbar(alpha**2 / R**2)) / R**2
    fam = BumpFamily(
        supports=supports,
        values=values,
        cores=list(ss.sets),
        rayleigh=rq,
        params={"R": R, "alpha": alpha, "K": K, "eta": eta, "delta": None, "variant": "easy"},
    )
    checks = ss.checks(g, R, K, alpha)
    checks.update(
        disjoint=fam.disjoint(),
        local_rayleigh_ok=bool(np.all(rq <= local * (1 + 1e-9) + TOL)),
        C_impl=float(rq.max() / scale) if len(rq) else 0.0,
        rayleigh_scale=scale,
        retries=ss.retries,
        shaved_count=ss.shaved_count,
    )
    fam.diagnostics = checks
    return fam


def bump_family_delocalized(
    g: Graph,
    w: ConformalWeight,
    R: float,
    K: int,
    alpha: float,
    delta: float,
    seed: int,
    sampler=None,
    max_retries: int = MAX_RETRIES,
) -> BumpFamily:
    """Bumps whose cores cover stationary mass at least ``1 - delta - pi*(delta)``.

    Blocks ``S`` of a sampled partition are shaved to ``S_hat = {x : B_w(x, delta R/(6 alpha)) in S}``;
    blocks with ``pi(S_hat) < pi(S)/2`` or a vertex of degree above ``dbar(delta/K)`` are dropped.
    The best of up to ``max_retries`` partitions (by retained core mass) is used.
    """
    _check_weight(g, w)
    if not (0 < delta <= 1):
        raise GraphError("delta must lie in (0, 1]")
    if _max_ball(g, w, R) > K:
        raise GraphError("ball-size assumption violated: some |B_w(x, R)| exceeds K")
    n = g.n
    pi = g.stationary
    prof = degree_stats(g)
    sampler = sampler or ckr_sampler(g, w, R / 2)
    lam = delta * R / (6 * alpha)
    eta = delta * R / (18 * alpha)
    dcap = prof.dbar(delta / K)
    target = 1 - delta - prof.pi_star(delta)

    best = None
    for t in range(max_retries):
        part = sampler(derive_seed(seed, "delocalized", t))
        if not part.diameters_ok(g, w) or part.tau > R / 2 + TOL:
            raise GraphError("sampler produced a block wider than R/2")
        shaved = boundary_distance(g, w, part, lam) > lam
        chosen = []
        for b in part.blocks:
            core = b[shaved[b]]
            if pi[core].sum() >= 0.5 * pi[b].sum() and len(core) and g.degrees[b].max() <= dcap:
                chosen.append((b, core))
        mass = float(sum(pi[c].sum() for _, c in chosen))
        s_p = float(pi[shaved].sum())
        if best is None or mass > best[0]:
            best = (mass, part, chosen, s_p, t)
        if mass >= target:
            break
    mass, part, chosen, s_p, retries = best

    supports, values, cores, rq, hats = [], [], [], [], []
    for b, core in chosen:
        d = _dist_to_set(g, w, core, eta)
        s = np.flatnonzero(d < eta)
        v = (eta - d[s]) / eta
        supports.append(s)
        values.append(v)
        cores.append(s[v >= 1.0])
        hats.append(core)
        rq.append(rayleigh_quotient(g, (s, v)))
    rq = np.array(rq)
    fam = BumpFamily(
        supports=supports,
        values=values,
        cores=cores,
        rayleigh=rq,
        params={"R": R, "alpha": alpha, "K": K, "eta": eta, "delta": delta, "variant": "delocalized"},
    )

    # deterministic consequences of the retained partition
    high = int(np.sum(g.degrees > dcap))
    max_block = int(part.sizes.max())
    chain = 2 * s_p - 1 - prof.Delta(high * max_block) / (2.0 * g.m)
    core_mass = float(sum(pi[c].sum() for c in cores))
    L2 = w.l2_norm
    k_star = n * L2**2 / eta**2
    sum_lhs = float(sum(math.sqrt(r) * pi[s].sum() for r, s in zip(rq, supports)))
    sum_bound = 2.0 / math.sqrt(prof.dbar(1.0)) * (
        math.sqrt(prof.Delta(math.floor(k_star + 1e-9)) / n) + L2 * math.sqrt(dcap) / eta
    )
    fam.diagnostics = {
        "retries": retries,
        "shaved_mass": s_p,
        "core_mass": core_mass,
        "mass_target": target,
        "mass_ok": core_mass + TOL >= target,
        "mass_chain": chain,
        "mass_chain_ok": core_mass + TOL >= chain,
        "cores_equal_shaved": all(np.array_equal(c, np.sort(h)) for c, h in zip(cores, hats)),
        "range_ok": all(np.all((v > 0) & (v <= 1)) for v in values),
        "supports_in_blocks": all(np.all(np.isin(s, b)) for s, (b, _) in zip(supports, chosen)),
        "diameter_ok": part.diameters_ok(g, w),
        "size_ok": all(len(s) <= K for s in supports),
        "disjoint": fam.disjoint(),
        "sum_sqrt_rayleigh": sum_lhs,
        "sum_bound": sum_bound,
        "sum_ok": sum_lhs <= sum_bound + TOL,
    }
    return fam


def variational_check(family: BumpFamily, eigenvalues: np.ndarray) -> dict:
    """``lam_{r-1} <= 2 max_i R_G(psi_i)`` for a family of ``r`` disjointly supported bumps."""
    r = len(family)
    if r == 0:
        return {"r": 0, "ok": True}
    lam = float(eigenvalues[r - 1])
    theta = float(family.rayleigh.max())
    return {"r": r, "lambda": lam, "bound": 2 * theta, "ok": lam <= 2 * theta + 1e-8}
