"""Random partitions of ``(V, dist_w)`` with bounded block diameter, and their padding.

A sampler is any callable ``sampler(seed) -> Partition``; ``functools.partial`` over
:func:`exp_clustering` or :func:`ckr_partition` is the usual way to build one.
Passing ``w=None`` anywhere selects the hop metric ``dist_G``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .graph import ConformalWeight, Graph, GraphError, length_matrix, pair_table
from .rng import derive_rng, derive_seed

__all__ = [
    "Partition",
    "PaddingProfile",
    "exp_clustering",
    "ckr_partition",
    "pad_boost",
    "boundary_distance",
    "padding_profile",
    "measure_alpha",
    "exp_sampler",
    "ckr_sampler",
    "boost_sampler",
]

Sampler = Callable[[int], "Partition"]

_TOL = 1e-9


def _slack(r: float) -> float:
    return r * (1 + _TOL) + 1e-12


@dataclass(frozen=True, eq=False)
class Partition:
    """Block labels ``block_of[x]`` (0..k-1) with the diameter bound ``tau`` they promise."""

    block_of: np.ndarray
    tau: float

    def __post_init__(self):
        lab = np.asarray(self.block_of)
        _, inv = np.unique(lab, return_inverse=True)
        inv = inv.astype(np.int64)
        inv.setflags(write=False)
        object.__setattr__(self, "block_of", inv)

    @property
    def n_blocks(self) -> int:
        return int(self.block_of.max()) + 1 if len(self.block_of) else 0

    @property
    def blocks(self) -> list[np.ndarray]:
        order = np.argsort(self.block_of, kind="stable")
        cuts = np.flatnonzero(np.diff(self.block_of[order])) + 1
        return np.split(order, cuts)

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.block_of)

    def diameters_ok(self, g: Graph, w: ConformalWeight | None) -> bool:
        """True when every block has diameter at most ``tau`` (with float slack)."""
        table = pair_table(g, w, _slack(self.tau))
        same = self.block_of[table.src] == self.block_of[table.dst]
        reach = np.bincount(table.src[same], minlength=g.n)
        return bool(np.all(reach == self.sizes[self.block_of]))

    def max_diameter(self, g: Graph, w: ConformalWeight | None) -> float:
        from .graph import conformal_distance, graph_distance

        best = 0.0
        for b in self.blocks:
            for x in b:
                d = graph_distance(g, x) if w is None else conformal_distance(g, w, x)
                best = max(best, float(d[b].max()))
        return best


@dataclass(frozen=True)
class PaddingProfile:
    """Empirical ``Pr[B(x, delta*tau/alpha) in P(x)]`` averaged over trials and uniform ``x``."""

    delta_grid: np.ndarray
    empirical_pad: np.ndarray
    stderr: np.ndarray
    min_vertex_pad: np.ndarray
    trials: int
    alpha: float
    tau: float


# ----------------------------------------------------------------------


def _assign_min_rank(table, radii: np.ndarray, rank: np.ndarray, n: int) -> np.ndarray:
    """For each x, the y with smallest ``rank[y]`` among pairs with ``dist(x, y) <= radii[y]``."""
    src, dst = table.src, table.dst
    ok = table.dist <= radii[dst]
    best = np.full(n, np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(best, src[ok], rank[dst[ok]])
    inv = np.empty(n, dtype=np.int64)
    inv[rank] = np.arange(n)
    return inv[best]


def _short_edge_components(g: Graph, w: ConformalWeight | None, tau: float):
    """Components of the graph after deleting edges longer than ``tau``."""
    if w is None or g.n == 1:
        return 1, np.zeros(g.n, dtype=np.int64)
    L = length_matrix(g, w).tocoo()
    keep = L.data <= _slack(tau)
    import scipy.sparse as sp

    sub = sp.csr_matrix((np.ones(keep.sum()), (L.row[keep], L.col[keep])), shape=(g.n, g.n))
    k, lab = connected_components(sub, directed=False)
    return int(k), lab


def exp_clustering(g: Graph, w: ConformalWeight | None, R: float, seed: int) -> Partition:
    """Exponential-radius clustering with diameter at most ``2R``.

    Every vertex draws ``R_x ~ Exp(mean = R / (3 max(log|B(x,2R)|, 1)))`` and a uniform
    priority; ``x`` joins the highest-priority ``y`` with ``dist(x, y) <= min(R_y, R)``.
    """
    if R < 1:
        raise GraphError("exp_clustering needs R >= 1")
    if g.n == 1:
        return Partition(np.zeros(1, dtype=np.int64), 2.0 * R)
    rng = derive_rng(seed, "exp_clustering")
    big = pair_table(g, w, 2.0 * R)
    sizes2 = big.ball_sizes()
    mean = R / (3.0 * np.maximum(np.log(sizes2), 1.0))
    radii = np.minimum(rng.exponential(mean), R)
    rank = rng.permutation(g.n)
    table = pair_table(g, w, R) if big.radius != R else big
    theta = _assign_min_rank(table, radii, rank, g.n)
    return Partition(theta, 2.0 * R)


def ckr_partition(g: Graph, w: ConformalWeight | None, tau: float, seed: int) -> Partition:
    """Random-order ball carving with a common radius uniform in ``[tau/4, tau/2]``.

    Components of the graph with all edges longer than ``tau`` removed that already have
    diameter at most ``tau`` are kept whole; they are separated from everything else by
    more than ``tau``.
    """
    if tau <= 0:
        raise GraphError("tau must be positive")
    if g.n == 1:
        return Partition(np.zeros(1, dtype=np.int64), tau)
    rng = derive_rng(seed, "ckr")
    rho = rng.uniform(tau / 4, tau / 2)
    rank = rng.permutation(g.n)
    table = pair_table(g, w, tau / 2)
    theta = _assign_min_rank(table, np.full(g.n, rho), rank, g.n)

    k, comp = _short_edge_components(g, w, tau)
    wide = pair_table(g, w, _slack(tau))
    same = comp[wide.src] == comp[wide.dst]
    reach = np.bincount(wide.src[same], minlength=g.n)
    csize = np.bincount(comp, minlength=k)
    full = reach == csize[comp]
    small = np.bincount(comp, weights=full.astype(float), minlength=k) == csize
    labels = np.where(small[comp], g.n + comp, theta)
    return Partition(labels, tau)


def _shave(g: Graph, w: ConformalWeight | None, part: Partition, lam: float) -> np.ndarray:
    """Mask of ``x`` with ``B(x, lam) inside part(x)``."""
    return boundary_distance(g, w, part, lam) > lam


def pad_boost(
    g: Graph,
    w: ConformalWeight | None,
    base_sampler: Sampler,
    tau: float,
    alpha: float,
    seed: int,
    k_max: int | None = None,
) -> Partition:
    """Boost a half-padded sampler to padding ``1 - 4 delta`` at every scale ``delta``.

    Round ``k`` draws ``P_k`` and ``eps_k ~ U[0, 1]`` and adds the blocks
    ``S_{-eps_k tau/alpha}`` minus already covered vertices.  After ``k_max``
    rounds (default ``ceil(log2 n) + 20``) uncovered vertices become singletons.
    """
    if k_max is None:
        k_max = int(math.ceil(math.log2(max(g.n, 2)))) + 20
    label = np.full(g.n, -1, dtype=np.int64)
    nxt = 0
    for k in range(k_max):
        if np.all(label >= 0):
            break
        part = base_sampler(derive_seed(seed, "boost", k))
        eps = derive_rng(seed, "boost-eps", k).uniform()
        inner = _shave(g, w, part, eps * tau / alpha) & (label < 0)
        if inner.any():
            ids = part.block_of[inner]
            _, inv = np.unique(ids, return_inverse=True)
            label[inner] = nxt + inv
            nxt += int(inv.max()) + 1
    left = np.flatnonzero(label < 0)
    label[left] = nxt + np.arange(len(left))
    return Partition(label, tau)


# ----------------------------------------------------------------------


def boundary_distance(g: Graph, w: ConformalWeight | None, part: Partition, radius: float) -> np.ndarray:
    """Distance from each ``x`` to the nearest vertex outside its block, ``inf`` beyond ``radius``."""
    out = np.full(g.n, np.inf)
    if radius < 0:
        return out
    table = pair_table(g, w, radius)
    src, dst = table.src, table.dst
    cross = part.block_of[src] != part.block_of[dst]
    np.minimum.at(out, src[cross], table.dist[cross])
    return out


def padding_profile(
    g: Graph,
    w: ConformalWeight | None,
    sampler: Sampler,
    tau: float,
    alpha: float,
    delta_grid: Sequence[float],
    trials: int,
    seed: int,
) -> PaddingProfile:
    """Monte-Carlo estimate of the padding probability on a grid of ``delta``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    deltas = np.asarray(delta_grid, dtype=float)
    radii = deltas * tau / alpha
    rmax = float(radii.max()) if len(radii) else 0.0
    per_trial = np.zeros((trials, len(deltas)))
    per_vertex = np.zeros((g.n, len(deltas)))
    for t in range(trials):
        part = sampler(derive_seed(seed, "trial", t))
        d = boundary_distance(g, w, part, rmax)
        hit = d[:, None] > radii[None, :]
        per_trial[t] = hit.mean(axis=0)
        per_vertex += hit
    mean = per_trial.mean(axis=0)
    se = per_trial.std(axis=0, ddof=1) / math.sqrt(trials) if trials > 1 else np.zeros(len(deltas))
    return PaddingProfile(deltas, mean, se, per_vertex.min(axis=0) / trials, trials, float(alpha), float(tau))


def measure_alpha(
    g: Graph,
    w: ConformalWeight | None,
    sampler: Sampler,
    tau: float,
    trials: int,
    seed: int,
) -> float:
    """Smallest ``alpha`` (on the lattice of realised distances) with half-padding at every vertex.

    Finds the largest distance value ``rho`` such that ``Pr[B(x, rho) in P(x)] >= 1/2``
    for all ``x`` and returns ``tau / rho``.  When only ``rho = 0`` qualifies,
    returns ``2 tau / l_min`` with ``l_min`` the smallest positive edge length, which
    makes ``B(x, tau/alpha) = {x}``.
    """
    table = pair_table(g, w, tau)
    dout = np.empty((trials, g.n))
    for t in range(trials):
        dout[t] = boundary_distance(g, w, sampler(derive_seed(seed, "alpha", t)), tau)
    need = int(math.ceil(trials / 2))
    q = -np.sort(-dout, axis=0)[need - 1]
    levels = np.unique(np.round(table.dist, 12))
    # rho_x: largest realised distance strictly below q_x
    pos = np.searchsorted(levels, q * (1 - 1e-12), side="left") - 1
    rho = float(levels[max(int(pos.min()), 0)])
    if rho > 0:
        return tau / rho
    if w is None:
        lmin = 1.0
    else:
        lens = length_matrix(g, w).data
        lens = lens[lens > 0]
        lmin = float(lens.min()) if len(lens) else 1.0
    return 2.0 * tau / lmin


def exp_sampler(g: Graph, w: ConformalWeight | None, R: float) -> Sampler:
    return partial(exp_clustering, g, w, R)


def ckr_sampler(g: Graph, w: ConformalWeight | None, tau: float) -> Sampler:
    return partial(ckr_partition, g, w, tau)


def boost_sampler(g: Graph, w: ConformalWeight | None, base: Sampler, tau: float, alpha: float) -> Sampler:
    return lambda seed: pad_boost(g, w, base, tau, alpha, seed)
