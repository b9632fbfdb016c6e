"""Searching for normalized weights with small balls, and the binary-tree obstruction.

``optimize_weight`` runs projected descent on a smoothed version of
``max_x |B_w(x, R)| / R^2``.  ``cbt_certificate`` turns the leaf-to-leaf path
counting argument on the complete binary tree into an explicit number: every
normalized weight on ``T_n`` has ``sup_{R >= 1} |B_w(x, R)| / R^2 >= Q*_n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import dijkstra
from scipy.special import expit, logsumexp

from .generators import binary_tree
from .graph import ConformalWeight, Graph, GraphError, length_matrix
from .rng import derive_rng

__all__ = [
    "GrowthObjective",
    "growth_objective",
    "sup_growth_ratio",
    "optimize_weight",
    "CbtCertificate",
    "cbt_path_counts",
    "cbt_certificate",
    "cbt_audit",
]


@dataclass(frozen=True)
class GrowthObjective:
    R: float
    value: float
    vertex: int


def _all_distances(g: Graph, w: ConformalWeight, predecessors: bool = False):
    return dijkstra(length_matrix(g, w), directed=False, return_predecessors=predecessors)


def growth_objective(g: Graph, w: ConformalWeight, R: float) -> GrowthObjective:
    """Exact ``max_x |B_w(x, R)| / R^2``."""
    D = _all_distances(g, w)
    counts = np.sum(D <= R, axis=1)
    x = int(np.argmax(counts))
    return GrowthObjective(float(R), float(counts[x]) / R**2, x)


def sup_growth_ratio(g: Graph, w: ConformalWeight, r_min: float = 1.0) -> tuple[float, int, float]:
    """Exact ``sup_{x, R >= r_min} |B_w(x, R)| / R^2`` and where it is attained.

    For fixed ``x`` the ratio only jumps up at realised distances, so the supremum is a
    maximum over ``R = r_min`` and the distances above it.
    """
    D = _all_distances(g, w)
    best, bx, bR = 0.0, 0, r_min
    for x in range(g.n):
        d = np.sort(D[x][np.isfinite(D[x])])
        cand = np.concatenate([[r_min], d[d > r_min]])
        cnt = np.searchsorted(d, cand, side="right")
        ratio = cnt / cand**2
        i = int(np.argmax(ratio))
        if ratio[i] > best:
            best, bx, bR = float(ratio[i]), x, float(cand[i])
    return best, bx, bR


def _soft_counts_and_grad(g: Graph, w: ConformalWeight, R: float, temp: float):
    """Sigmoid-smoothed ball sizes ``s_x`` and ``d s / d w`` through shortest-path trees."""
    D, pred = _all_distances(g, w, predecessors=True)
    n = g.n
    S = expit((R - D) / temp)
    s = S.sum(axis=1)
    gy = -S * (1 - S) / temp  # d s_x / d dist(x, y)
    # subtree sums over each shortest-path tree, deepest vertices first
    G = gy.copy()
    order = np.argsort(-D, axis=1)
    rows = np.arange(n)
    for j in range(n - 1):
        v = order[:, j]
        p = pred[rows, v]
        ok = p >= 0
        np.add.at(G, (rows[ok], p[ok]), G[rows[ok], v[ok]])
    # each interior vertex of the path to y carries w(v) once, the endpoints half
    grad = G - 0.5 * gy
    grad[rows, rows] = 0.5 * (G[rows, rows] - gy[rows, rows])
    return s, grad


def optimize_weight(g: Graph, R: float, iterations: int, seed: int, temp: float | None = None, step0: float = 0.1) -> tuple[ConformalWeight, GrowthObjective, dict]:
    """Projected descent on a soft-max of soft ball counts over the unit ``L2`` sphere.

    Temperature ``1/R`` for both smoothings, step ``step0 / sqrt(k)`` in units of the
    RMS gradient.  A step is kept only if the exact objective does not increase; the
    uniform weight is the starting point, so the result is never worse than it.
    """
    if R < 1 or iterations < 1:
        raise GraphError("need R >= 1 and iterations >= 1")
    temp = 1.0 / R if temp is None else temp
    rng = derive_rng(seed, "optimize")
    w = ConformalWeight.uniform(g.n)
    best = growth_objective(g, w, R)
    base = best.value
    history = [best.value]
    accepted = 0
    for k in range(1, iterations + 1):
        s, grad = _soft_counts_and_grad(g, w, R, temp)
        z = s / R**2
        soft = np.exp(z / temp - logsumexp(z / temp))
        gvec = soft @ grad / R**2
        gvec = gvec - np.mean(gvec * w.values) * w.values  # tangent to the sphere
        rms = math.sqrt(float(np.mean(gvec**2)))
        if rms == 0:
            break
        noise = 1e-3 * rng.standard_normal(g.n)
        cand = np.maximum(w.values - step0 / math.sqrt(k) * (gvec / rms + noise), 0.0)
        if not np.any(cand > 0):
            continue
        wc = ConformalWeight(cand).normalize()
        obj = growth_objective(g, wc, R)
        if obj.value <= best.value:
            w, best = wc, obj
            accepted += 1
        history.append(best.value)
    return w, best, {"baseline": base, "accepted": accepted, "history": history}


# ----------------------------------------------------------------------
# complete binary tree


@dataclass(frozen=True)
class CbtCertificate:
    n: int
    alpha_vector: np.ndarray
    alpha_l2_sq: float
    q_star: float
    norm_bound_at_one: float
    path_counts: dict = field(default_factory=dict)

    @property
    def alpha_ok(self) -> bool:
        return self.alpha_l2_sq <= self.n * 2.0**self.n * (1 + 1e-12)


def _heights(n: int) -> np.ndarray:
    """Height above the leaves of each heap-ordered vertex of ``T_n``."""
    depth = np.floor(np.log2(np.arange(1, 2 ** (n + 1)))).astype(int)
    return n - depth


def cbt_path_counts(n: int) -> np.ndarray:
    """``N[k, v]``: leaf-to-leaf paths through the apex of the height-``k`` subtree containing ``v``.

    Row ``k`` (1..n) counts, for ``v`` at height ``j <= k``, the paths joining a leaf on
    one side of that apex to a leaf on the other that pass through ``v``:
    ``2^(j + k - 1)`` below the apex and ``4^(k - 1)`` at it.
    """
    h = _heights(n)
    N = np.zeros((n + 1, len(h)))
    for k in range(1, n + 1):
        below = h < k
        N[k, below] = 2.0 ** (h[below] + k - 1)
        N[k, h == k] = 4.0 ** (k - 1)
    return N


def _long_paths(n: int, k: int, Q: float) -> float:
    """Lower bound on ``sum_{gamma} len_w(gamma)`` over long apex paths of height-``k`` subtrees.

    From a left leaf at most ``Q L^2`` right leaves lie within ``dist_w <= L``; the rest
    are joined by paths longer than ``L``.  ``L >= 1`` is chosen to maximize
    ``L (2^(k-1) - Q L^2)``.
    """
    half = 2.0 ** (k - 1)
    if Q >= half:
        return 0.0
    L = max(1.0, math.sqrt(half / (3 * Q)))
    return 2.0 ** (n - k) * half * L * (half - Q * L * L)


def _norm_bound(n: int, Q: float, alpha_norm: float) -> float:
    total = sum(2.0 ** (-1.5 * k) * _long_paths(n, k, Q) for k in range(1, n + 1))
    return total / alpha_norm


def cbt_certificate(n: int, enumerate_paths: bool | None = None) -> CbtCertificate:
    """Exact certificate for ``T_n``.

    ``alpha(v) = sum_k 2^(-3k/2) N_k(v)`` bounds the weighted number of long paths
    through ``v``.  If ``sup_{R>=1} |B_w|/R^2 <= Q`` then
    ``||w||_2 >= sum_k 2^(-3k/2) (long length mass)_k / ||alpha||_2``; ``Q*_n`` is the
    ``Q`` at which this equals ``sqrt(|V|)``, so every normalized weight has ratio at least ``Q*_n``.
    """
    if n < 2:
        raise GraphError("n must be >= 2")
    N = cbt_path_counts(n)
    coef = 2.0 ** (-1.5 * np.arange(n + 1))
    coef[0] = 0.0
    alpha = coef @ N
    a2 = float(np.sum(alpha**2))
    anorm = math.sqrt(a2)
    target = math.sqrt(2 ** (n + 1) - 1)
    lo, hi = 1e-12, 2.0 ** (n - 1)
    if _norm_bound(n, lo, anorm) <= target:
        q = 0.0
    else:
        for _ in range(200):
            mid = math.sqrt(lo * hi)
            if _norm_bound(n, mid, anorm) > target:
                lo = mid
            else:
                hi = mid
        q = lo
    counts = {}
    if enumerate_paths or (enumerate_paths is None and n <= 8):
        counts = {"enumerated": bool(np.array_equal(_enumerate_counts(n), N))}
    return CbtCertificate(n, alpha, a2, q, _norm_bound(n, 1.0, anorm), counts)


def _enumerate_counts(n: int) -> np.ndarray:
    """Brute-force ``N[k, v]`` by listing every apex path (small ``n`` only)."""
    h = _heights(n)
    N = np.zeros((n + 1, len(h)))
    for apex in range(len(h)):
        k = h[apex]
        if k < 1:
            continue
        left, right = 2 * apex + 1, 2 * apex + 2

        def leaves(v):
            out, stack = [], [v]
            while stack:
                u = stack.pop()
                if h[u] == 0:
                    out.append(u)
                else:
                    stack += [2 * u + 1, 2 * u + 2]
            return out

        def up(a, stop):
            out = []
            while a != stop:
                out.append(a)
                a = (a - 1) // 2
            return out

        for a in leaves(left):
            pa = up(a, apex)
            for b in leaves(right):
                for v in pa + up(b, apex) + [apex]:
                    N[k, v] += 1
    return N


def cbt_audit(n: int, w: ConformalWeight, Q: float | None = None) -> dict:
    """Check the implication on a concrete weight.

    Computes the exact ``sup_{R>=1}`` ratio and the dyadic-grid ratio times the factor-4
    slack; if the claimed ``Q`` bounds the exact ratio, the certificate forces
    ``||w||_2 >= bound(Q)``, which is compared against the actual norm.
    """
    g = binary_tree(n)
    if len(w) != g.n:
        raise GraphError("weight size does not match T_n")
    cert = cbt_certificate(n, enumerate_paths=False)
    exact, x, R = sup_growth_ratio(g, w)
    D = _all_distances(g, w)
    diam = float(D[np.isfinite(D)].max())
    grid = [2.0**i for i in range(0, max(1, int(math.ceil(math.log2(max(2 * diam, 1.0))))) + 1)]
    dyadic = max(float(np.max(np.sum(D <= r, axis=1))) / r**2 for r in grid)
    Q = exact if Q is None else float(Q)
    norm = float(np.linalg.norm(w.values))
    holds = Q >= exact * (1 - 1e-12)
    bound = _norm_bound(n, Q, math.sqrt(cert.alpha_l2_sq)) if holds else float("nan")
    violated = bool(holds and norm < bound * (1 - 1e-12))
    return {
        "n": n,
        "claimed_Q": Q,
        "exact_sup_ratio": exact,
        "attained_at": (x, R),
        "dyadic_ratio": dyadic,
        "dyadic_upper": 4 * dyadic,
        "claim_holds": bool(holds),
        "norm_l2": norm,
        "norm_lower_bound": bound,
        "q_star": cert.q_star,
        "violated": violated,
    }
