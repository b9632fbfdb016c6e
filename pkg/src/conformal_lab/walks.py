"""Simple and restricted random walks, speed profiles and Markov-type ratios."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.sparse.csgraph import dijkstra

from .graph import ConformalWeight, Graph, GraphError, length_matrix
from .rng import derive_rng

__all__ = [
    "WalkTrace",
    "sample_starts",
    "step",
    "walk_positions",
    "simulate",
    "restricted_simulate",
    "restricted_stationary",
    "speed_profile",
    "cycle_displacement_law",
    "conformal_diffusive_ratio",
    "markov_type_ratio",
    "loglog_slope",
]

DENSE_MAX = 3000


@dataclass(frozen=True)
class WalkTrace:
    start: str
    steps: np.ndarray
    seed: int

    def __len__(self) -> int:
        return len(self.steps)


def sample_starts(g: Graph, start, size: int, rng: np.random.Generator) -> np.ndarray:
    """``start`` is a vertex, ``"uniform"``, ``"stationary"`` or an array of candidate vertices."""
    if isinstance(start, str):
        if start == "uniform":
            return rng.integers(0, g.n, size=size)
        if start == "stationary":
            # inverse-CDF sampling from pi; deterministic given the stream
            cdf = np.cumsum(g.stationary)
            return np.minimum(np.searchsorted(cdf, rng.random(size) * cdf[-1], side="right"), g.n - 1)
        raise GraphError(f"unknown start {start!r}")
    arr = np.atleast_1d(np.asarray(start, dtype=np.int64))
    if arr.size == 1:
        return np.full(size, g.check_vertex(int(arr[0])), dtype=np.int64)
    return arr[rng.integers(0, arr.size, size=size)]


def step(g: Graph, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One simple-random-walk step for every walker in ``x``."""
    deg = g.degrees[x]
    k = np.minimum((rng.random(x.shape) * deg).astype(np.int64), deg - 1)
    return g.indices[g.indptr[x] + k]


def walk_positions(g: Graph, starts: np.ndarray, times: Sequence[int], rng: np.random.Generator, member: np.ndarray | None = None) -> np.ndarray:
    """Positions at each time in ``times`` (sorted) for walkers started at ``starts``.

    With a boolean ``member`` mask the walk is restricted to it: proposals leaving the
    set are replaced by holding.
    """
    times = np.asarray(times, dtype=np.int64)
    if np.any(np.diff(times) < 0) or (times.size and times[0] < 0):
        raise ValueError("times must be sorted and nonnegative")
    x = np.array(starts, dtype=np.int64, copy=True)
    out = np.empty((len(times), len(x)), dtype=np.int64)
    t = 0
    for i, target in enumerate(times):
        while t < target:
            y = step(g, x, rng)
            if member is not None:
                y = np.where(member[y], y, x)
            x = y
            t += 1
        out[i] = x
    return out


def simulate(g: Graph, start, T: int, seed: int) -> WalkTrace:
    """Simple random walk ``X_0, ..., X_T``."""
    if T < 0:
        raise ValueError("T must be nonnegative")
    rng = derive_rng(seed, "walk")
    x0 = sample_starts(g, start, 1, rng)
    steps = walk_positions(g, x0, np.arange(T + 1), rng)[:, 0]
    tag = start if isinstance(start, str) else "fixed"
    return WalkTrace(tag, steps, seed)


def restricted_simulate(g: Graph, S, start, T: int, seed: int) -> WalkTrace:
    """Walk restricted to ``S``: moves to a uniform neighbour if it lies in ``S``, else holds."""
    member = np.zeros(g.n, dtype=bool)
    member[np.asarray(S, dtype=np.int64)] = True
    rng = derive_rng(seed, "restricted-walk")
    if isinstance(start, str):
        if start != "stationary":
            raise GraphError("restricted walks start at a vertex or 'stationary'")
        pi = restricted_stationary(g, np.flatnonzero(member))
        x0 = np.array([rng.choice(np.flatnonzero(member), p=pi)])
        tag = "stationary"
    else:
        x0 = np.array([g.check_vertex(int(start))])
        if not member[x0[0]]:
            raise GraphError("start vertex is not in S")
        tag = "fixed"
    steps = walk_positions(g, x0, np.arange(T + 1), rng, member=member)[:, 0]
    return WalkTrace(tag, steps, seed)


def restricted_stationary(g: Graph, S) -> np.ndarray:
    """``pi_S(x) = deg(x) / deg(S)`` on the sorted vertices of ``S``."""
    S = np.unique(np.asarray(S, dtype=np.int64))
    d = g.degrees[S].astype(float)
    return d / d.sum()


# ----------------------------------------------------------------------


def _hop_distances(g: Graph, src: np.ndarray, dst: np.ndarray, w: ConformalWeight | None) -> np.ndarray:
    """``dist(src[i], dst[i])`` computed in batches of unique sources."""
    mat = g.adjacency() if w is None else length_matrix(g, w)
    out = np.full(len(src), np.inf)
    uniq, inv = np.unique(src, return_inverse=True)
    batch = max(1, 8_000_000 // max(g.n, 1))
    # truncated searches with a doubling radius; cost stays near that of the final ball
    limit = 8.0
    todo = np.arange(len(src))
    while todo.size:
        last = limit >= g.n * (1.0 if w is None else max(float(w.values.max()), 1.0))
        sel_src = np.unique(inv[todo])
        for lo in range(0, len(sel_src), batch):
            sel = sel_src[lo : lo + batch]
            D = dijkstra(mat, directed=False, indices=uniq[sel], unweighted=w is None, limit=np.inf if last else limit)
            pos = np.full(len(uniq), -1)
            pos[sel] = np.arange(len(sel))
            rows = todo[pos[inv[todo]] >= 0]
            out[rows] = D[pos[inv[rows]], dst[rows]]
        todo = todo[~np.isfinite(out[todo])]
        if last:
            break
        limit *= 2
    return out


def speed_profile(
    g: Graph,
    T_grid: Sequence[int],
    trials: int,
    seed: int,
    start="uniform",
    w: ConformalWeight | None = None,
    distance: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None,
) -> list[dict]:
    """Monte-Carlo ``E dist(X_0, X_T)`` with standard errors for each ``T``.

    ``distance(a, b)`` overrides the metric (useful for closed forms on lattices);
    otherwise ``dist_G`` or ``dist_w`` by exact shortest paths.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = derive_rng(seed, "speed")
    times = np.array(sorted(set(int(t) for t in T_grid)))
    x0 = sample_starts(g, start, trials, rng)
    pos = walk_positions(g, x0, times, rng)
    rows = []
    for i, T in enumerate(times):
        if distance is not None:
            d = np.asarray(distance(x0, pos[i]), dtype=float)
        else:
            d = _hop_distances(g, x0, pos[i], w)
        se = float(d.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
        rows.append({"T": int(T), "mean": float(d.mean()), "stderr": se, "mean_sq": float(np.mean(d**2)), "trials": trials})
    return rows


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)[0])


def cycle_displacement_law(n: int, T: int) -> np.ndarray:
    """Exact law of ``dist_{C_n}(X_0, X_T)`` on ``0 .. floor(n/2)`` by repeated convolution."""
    p = np.zeros(n)
    p[0] = 1.0
    for _ in range(T):
        p = 0.5 * (np.roll(p, 1) + np.roll(p, -1))
    k = np.arange(n)
    d = np.minimum(k, n - k)
    return np.bincount(d, weights=p, minlength=n // 2 + 1)


def conformal_diffusive_ratio(g: Graph, w: ConformalWeight, T_grid: Sequence[int], trials: int, seed: int, start="stationary") -> list[dict]:
    """``E dist_w(X_0, X_T)^2 / (T (log T)^2)`` per ``T`` with ``X_0`` stationary."""
    rows = speed_profile(g, T_grid, trials, seed, start=start, w=w)
    for r in rows:
        T = r["T"]
        r["ratio"] = r["mean_sq"] / (T * math.log(T) ** 2) if T > 1 else float("nan")
    return rows


def markov_type_ratio(
    g: Graph,
    f: np.ndarray,
    p: float,
    T: int,
    seed: int = 0,
    trials: int | None = None,
    metric: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None,
) -> float:
    """``E d(f(Z_T), f(Z_0))^p / (T E d(f(Z_0), f(Z_1))^p)`` for the stationary walk.

    ``f`` is an ``(n, k)`` array of points (Euclidean distance unless ``metric`` is
    given).  Exact through dense powers of ``P`` when ``n <= 3000`` and ``trials`` is
    None, Monte Carlo otherwise.
    """
    if p < 1 or T < 1:
        raise ValueError("need p >= 1 and T >= 1")
    F = np.asarray(f, dtype=float)
    if F.ndim == 1:
        F = F[:, None]

    def dist(a, b):
        if metric is not None:
            return np.asarray(metric(a, b), dtype=float)
        return np.linalg.norm(F[a] - F[b], axis=-1)

    pi = g.stationary
    if trials is None and g.n <= DENSE_MAX:
        idx = np.arange(g.n)
        D = dist(idx[:, None], idx[None, :]) ** p
        P = g.transition().toarray()
        den = float(np.sum(pi[:, None] * P * D))
        PT = np.linalg.matrix_power(P, T)
        num = float(np.sum(pi[:, None] * PT * D))
    else:
        trials = trials or 10_000
        rng = derive_rng(seed, "markov-type")
        x0 = sample_starts(g, "stationary", trials, rng)
        pos = walk_positions(g, x0, [1, T], rng)
        den = float(np.mean(dist(x0, pos[0]) ** p))
        num = float(np.mean(dist(x0, pos[1]) ** p))
    if den == 0:
        raise GraphError("f is constant along edges; the one-step term vanishes")
    return num / (T * den)
