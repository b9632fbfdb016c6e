"""Annulus vertex separators, random barrier sets and the metrics they induce.

``kappa(x; r, r')`` is the size of a smallest ``U`` inside the annulus
``B_G(x, r') \\ B_G(x, r)`` whose removal disconnects ``x`` from ``V \\ B_G(x, r')``.
Barriers glue per-vertex separators in a random priority order so that every
component of ``G[V \\ W]`` has hop diameter at most ``2r'``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import breadth_first_order, maximum_flow

from .graph import (
    ConformalWeight,
    Graph,
    GraphError,
    basel_coefficients,
    combine_weights,
    conformal_distance,
    graph_distance,
    pair_table,
)
from .rng import derive_rng, derive_seed

__all__ = [
    "SeparatorResult",
    "BarrierSet",
    "min_vertex_cut_annulus",
    "separates",
    "greedy_net",
    "bp_covering_separator",
    "separator_table",
    "barrier",
    "barrier_metric",
    "crossing_check",
    "subdiffusivity_experiment",
]


@dataclass(frozen=True)
class SeparatorResult:
    x: int
    r: float
    r_outer: float
    cut: np.ndarray
    q: float

    @property
    def kappa(self) -> int:
        return int(self.cut.size)


def separates(g: Graph, removed: np.ndarray, sources: np.ndarray, targets: np.ndarray) -> bool:
    """True when no path avoids ``removed`` from ``sources`` to ``targets``."""
    keep = np.ones(g.n, dtype=bool)
    keep[np.asarray(removed, dtype=np.int64)] = False
    sources = np.asarray(sources, dtype=np.int64)
    targets = np.asarray(targets, dtype=np.int64)
    if np.any(~keep[sources]) or targets.size == 0:
        return True
    _, lab = g.induced_components(keep)
    t = lab[targets[keep[targets]]]
    return not np.intersect1d(np.unique(lab[sources]), t).size


def _q_value(g: Graph, cut: np.ndarray, r: float) -> float:
    if cut.size == 0:
        return 0.0
    sizes = pair_table(g, None, math.floor(r)).ball_sizes() if r >= 0 else np.ones(g.n)
    return float(np.sum(1.0 / sizes[cut]))


def _annulus_cut(g: Graph, dist: np.ndarray, r: float, r_outer: float) -> np.ndarray:
    """Min vertex cut between ``{dist <= r}`` and ``{dist > r_outer}`` using vertices in between."""
    inner = dist <= r
    outer = ~(dist <= r_outer)
    ann = np.flatnonzero(~inner & ~outer)
    if not outer.any():
        raise GraphError("B_G(x, r') is all of V; nothing to separate")
    e = g.edges
    a, b = e[:, 0], e[:, 1]
    if np.any((inner[a] & outer[b]) | (inner[b] & outer[a])):
        raise GraphError("inner ball touches the exterior; the annulus holds no separator")
    k = ann.size
    local = np.full(g.n, -1, dtype=np.int64)
    local[ann] = np.arange(k)
    # nodes: 0 source, 1 sink, 2+i in(v_i), 2+k+i out(v_i)
    big = k + 1
    rows, cols, caps = [np.arange(k) + 2], [np.arange(k) + 2 + k], [np.ones(k, dtype=np.int64)]

    def add(u, v):
        # directed arc u -> v between vertex classes, both orientations handled by caller
        su, sv = inner[u], inner[v]
        ou, ov = outer[u], outer[v]
        au, av = local[u] >= 0, local[v] >= 0
        m = su & av
        rows.append(np.zeros(m.sum(), dtype=np.int64)); cols.append(2 + local[v[m]]); caps.append(np.full(m.sum(), big))
        m = au & ov
        rows.append(2 + k + local[u[m]]); cols.append(np.ones(m.sum(), dtype=np.int64)); caps.append(np.full(m.sum(), big))
        m = au & av
        rows.append(2 + k + local[u[m]]); cols.append(2 + local[v[m]]); caps.append(np.full(m.sum(), big))

    add(a, b)
    add(b, a)
    N = 2 + 2 * k
    cap = sp.csr_matrix((np.concatenate(caps), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))
    cap.sum_duplicates()
    cap.data = cap.data.astype(np.int32)
    res = maximum_flow(cap, 0, 1, method="dinic")
    flow = res.flow.tocsr()
    # residual graph: forward slack plus reverse flow
    resid = (cap.astype(np.int64) - flow.astype(np.int64)).tocsr()
    resid.data[resid.data < 0] = 0
    resid.eliminate_zeros()
    reach = breadth_first_order(resid, 0, directed=True, return_predecessors=False)
    seen = np.zeros(N, dtype=bool)
    seen[reach] = True
    ins = seen[2 : 2 + k]
    outs = seen[2 + k :]
    cut = ann[ins & ~outs]
    if cut.size != res.flow_value:
        raise GraphError("max-flow and residual cut disagree")
    return np.sort(cut)


def min_vertex_cut_annulus(g: Graph, x: int, r: float, r_outer: float) -> SeparatorResult:
    """Exact ``kappa_G(x; r, r')`` by unit-capacity vertex-split max-flow."""
    if not 0 < r < r_outer:
        raise GraphError("need 0 < r < r'")
    g.check_vertex(x)
    d = graph_distance(g, x)
    cut = _annulus_cut(g, d, r, r_outer)
    return SeparatorResult(int(x), float(r), float(r_outer), cut, _q_value(g, cut, r))


def greedy_net(g: Graph, S: np.ndarray, tau: float) -> np.ndarray:
    """Greedy ``tau``-net of ``S`` in ``dist_G``: its ``tau``-balls cover ``S``."""
    S = np.asarray(S, dtype=np.int64)
    covered = np.zeros(g.n, dtype=bool)
    net = []
    for v in S:
        if covered[v]:
            continue
        net.append(int(v))
        covered[graph_distance(g, v, limit=tau) <= tau] = True
    return np.array(net, dtype=np.int64)


def bp_covering_separator(g: Graph, x: int, tau: float) -> dict:
    """Separator of ``B(x, tau)`` from ``V \\ B(x, 6 tau)`` inside the annulus, with its covering bound.

    The set returned is a minimum annulus cut, so it is no larger than any separator
    the covering argument could produce; the bound ``(lambda + 1)(2 tau + 1)`` uses
    ``lambda`` from a greedy ``tau``-net of ``B(x, 4 tau)``.
    """
    if tau < 1:
        raise GraphError("tau must be >= 1")
    d = graph_distance(g, x)
    cut = _annulus_cut(g, d, tau, 6 * tau)
    lam = greedy_net(g, np.flatnonzero(d <= 4 * tau), tau).size
    bound = (lam + 1) * (2 * tau + 1)
    inside = bool(np.all((d[cut] > tau) & (d[cut] <= 6 * tau)))
    ok_sep = separates(g, cut, np.flatnonzero(d <= tau), np.flatnonzero(d > 6 * tau))
    return {"W": cut, "size": int(cut.size), "lambda": int(lam), "bound": float(bound), "in_annulus": inside, "separates": ok_sep, "ok": inside and ok_sep and cut.size <= bound}


# ----------------------------------------------------------------------
# barriers


def separator_table(g: Graph, r: float, r_outer: float, provider: Callable[[int], np.ndarray] | None = None) -> list[np.ndarray]:
    """Per-vertex separators ``U_x`` (empty when ``B(x, r')`` is all of ``V``); cached for the default."""
    ck = ("separators", float(r), float(r_outer))
    if provider is None and ck in g._cache:
        return g._cache[ck]
    table = pair_table(g, None, math.floor(r_outer) + 1)
    out = []
    for x in range(g.n):
        if provider is not None:
            out.append(np.asarray(provider(x), dtype=np.int64))
            continue
        ball = table.ball(x)
        if ball.size == g.n and np.all(table.dist[table.indptr[x] : table.indptr[x + 1]] <= r_outer):
            out.append(np.zeros(0, dtype=np.int64))
            continue
        d = np.full(g.n, np.inf)
        d[ball] = table.dist[table.indptr[x] : table.indptr[x + 1]]
        out.append(_annulus_cut(g, d, r, r_outer))
    if provider is None:
        g._cache[ck] = out
    return out


@dataclass(frozen=True)
class BarrierSet:
    W: np.ndarray
    r: float
    r_outer: float
    seed: int
    n_components: int
    max_component_diameter: float
    q_mean: float
    diameter_ok: bool

    @property
    def density(self) -> float:
        return float(self.W.sum()) / len(self.W)


def _component_diameters(g: Graph, W: np.ndarray, limit: float) -> tuple[int, float, bool]:
    k, lab = g.induced_components(~W)
    if k == 0:
        return 0, 0.0, True
    table = pair_table(g, None, limit)
    src, dst = table.src, table.dst
    same = (lab[src] == lab[dst]) & (lab[src] >= 0)
    reach = np.bincount(src[same], minlength=g.n)
    csize = np.bincount(lab[lab >= 0], minlength=k)
    alive = lab >= 0
    ok = bool(np.all(reach[alive] == csize[lab[alive]]))
    diam = float(table.dist[same].max()) if same.any() else 0.0
    return int(k), diam if ok else float("inf"), ok


def barrier(
    g: Graph,
    r: float,
    r_outer: float,
    seed: int,
    provider: Callable[[int], np.ndarray] | None = None,
) -> BarrierSet:
    """Random barrier ``W_{r,r'}``.

    Every vertex draws a uniform priority; ``v`` in ``U_x`` survives when no vertex of
    ``B_G(v, r)`` has a smaller priority than ``x``.  ``W`` is the union of survivors.
    """
    if not 0 < r < r_outer:
        raise GraphError("need 0 < r < r'")
    U = separator_table(g, r, r_outer, provider)
    rank = derive_rng(seed, "barrier").permutation(g.n)
    small = pair_table(g, None, math.floor(r))
    first = np.full(g.n, np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(first, small.src, rank[small.dst])
    xs = np.repeat(np.arange(g.n), [u.size for u in U])
    vs = np.concatenate(U) if xs.size else np.zeros(0, dtype=np.int64)
    best = np.full(g.n, np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(best, vs, rank[xs])
    W = best < first
    k, diam, ok = _component_diameters(g, W, 2 * r_outer)
    q = np.array([_q_value(g, u, r) for u in U])
    return BarrierSet(W, float(r), float(r_outer), int(seed), k, diam, float(q.mean()), ok)


def barrier_metric(g: Graph, barriers: Sequence[BarrierSet]) -> tuple[ConformalWeight, list[ConformalWeight]]:
    """``omega_j = 1_W / sqrt(p_j)`` per barrier and their combination with weights ``(6/pi^2)/k^2``.

    ``p_j = max(|W|/n, 1/n)``; empty barriers are skipped.  Scales are indexed
    ``k = 1, 2, ...`` in increasing ``r``.
    """
    use = sorted([b for b in barriers if b.W.any()], key=lambda b: b.r)
    if not use:
        raise GraphError("all barriers are empty")
    parts = []
    for b in use:
        p = max(b.W.mean(), 1.0 / g.n)
        parts.append(ConformalWeight(b.W / math.sqrt(p)))
    return combine_weights(parts, basel_coefficients(len(parts))), parts


def crossing_check(g: Graph, b: BarrierSet, pairs: int, seed: int) -> dict:
    """Far pairs (``dist_G > 2 r'``) must pay at least ``1/sqrt(p)`` in ``omega = 1_W/sqrt(p)``.

    A pair with an endpoint in ``W`` is only guaranteed half of that.
    """
    p = max(b.W.mean(), 1.0 / g.n)
    w = ConformalWeight(b.W / math.sqrt(p))
    rng = derive_rng(seed, "crossing")
    checked = violations = 0
    worst = np.inf
    tries = 0
    while checked < pairs and tries < 50 * pairs:
        tries += 1
        x = int(rng.integers(g.n))
        dg = graph_distance(g, x)
        far = np.flatnonzero(dg > 2 * b.r_outer)
        if far.size == 0:
            continue
        ys = rng.choice(far, size=min(far.size, max(1, pairs // 20)), replace=False)
        dw = conformal_distance(g, w, x)[ys]
        need = np.where(b.W[x] | b.W[ys], 0.5, 1.0) / math.sqrt(p)
        violations += int(np.sum(dw < need * (1 - 1e-12)))
        worst = min(worst, float(np.min(dw / need)))
        checked += ys.size
    return {"pairs": checked, "violations": violations, "min_ratio": worst, "ok": violations == 0}


# ----------------------------------------------------------------------


def subdiffusivity_experiment(
    g: Graph,
    scales: Sequence[int],
    T_grid: Sequence[int],
    trials: int,
    seed: int,
    outer_factor: float = 3.0,
    roots: int = 16,
    start="uniform",
) -> dict:
    """Barriers at ``r = 2^j``, their combined metric, and walk displacement in both metrics.

    Growth and separator exponents are fitted on sampled roots from ``|B_G(x, r)|`` and
    ``kappa(x; r, outer_factor r)``.  Returns the speed exponent fitted from
    ``E dist_G(X_0, X_T)`` and ``E dist_w(X_0, X_T)^2 / (T (log T)^2)`` per ``T``.
    """
    from .walks import loglog_slope, speed_profile

    rng = derive_rng(seed, "subdiff-roots")
    xs = rng.choice(g.n, size=min(roots, g.n), replace=False)
    radii = [2**j for j in scales]
    growth, kap = [], []
    for r in radii:
        sizes = [np.sum(graph_distance(g, int(x), limit=r) <= r) for x in xs]
        growth.append(float(np.mean(sizes)))
        ks = []
        for x in xs:
            try:
                ks.append(min_vertex_cut_annulus(g, int(x), r, outer_factor * r).kappa)
            except GraphError:
                pass
        kap.append(float(np.mean(ks)) if ks else float("nan"))
    d_fit = loglog_slope(radii, growth) if len(radii) > 1 else float("nan")
    ok_k = [i for i, v in enumerate(kap) if np.isfinite(v) and v > 0]
    k_fit = loglog_slope([radii[i] for i in ok_k], [kap[i] for i in ok_k]) if len(ok_k) > 1 else float("nan")
    bars = [barrier(g, r, outer_factor * r, derive_seed(seed, "barrier", r)) for r in radii]
    try:
        w, _ = barrier_metric(g, bars)
    except GraphError:
        w = None
    speed = speed_profile(g, T_grid, trials, derive_seed(seed, "speed"), start=start)
    out = {
        "radii": radii,
        "mean_ball": growth,
        "mean_kappa": kap,
        "growth_exponent": d_fit,
        "separator_exponent": k_fit,
        "predicted_speed_exponent": 1.0 / (d_fit - k_fit + 1) if np.isfinite(d_fit - k_fit) else float("nan"),
        "barrier_density": [b.density for b in bars],
        "barrier_q": [b.q_mean for b in bars],
        "barrier_diameter_ok": [b.diameter_ok for b in bars],
        "speed": speed,
        "speed_exponent": loglog_slope([s["T"] for s in speed], [s["mean"] for s in speed]) if len(speed) > 1 else float("nan"),
    }
    if w is not None:
        conf = speed_profile(g, T_grid, trials, derive_seed(seed, "speed"), start=start, w=w)
        out["conformal"] = [
            {"T": c["T"], "mean_sq": c["mean_sq"], "ratio": c["mean_sq"] / (c["T"] * math.log(c["T"]) ** 2) if c["T"] > 1 else float("nan")}
            for c in conf
        ]
    return out
