"""Effective resistance, regulated weights and annulus test functions.

Resistances come from the Dirichlet principle: the minimizer of
``E(f) = sum_{edges} (f(u) - f(v))^2`` with ``f = 0`` on ``S`` and ``f = 1`` on ``T``
is harmonic off ``S u T`` and ``R_eff(S <-> T) = 1 / E(f)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import dijkstra

from .graph import ConformalWeight, Graph, GraphError, conformal_distance, graph_ball
from .rng import derive_rng

__all__ = [
    "ResistanceQuery",
    "dirichlet_energy",
    "effective_resistance",
    "regulate",
    "is_regulated",
    "ball_comparison_check",
    "AnnulusCertificate",
    "annulus_test_function",
    "recurrence_profile",
]

DIRECT_MAX = 100_000
CG_RTOL = 1e-10


@dataclass(frozen=True)
class ResistanceQuery:
    source: np.ndarray
    target: np.ndarray
    value: float
    potential: np.ndarray

    def energy(self, g: Graph) -> float:
        return dirichlet_energy(g, self.potential)


def dirichlet_energy(g: Graph, f: np.ndarray) -> float:
    """``sum_{{u,v} in E} (f(u) - f(v))^2``."""
    f = np.asarray(f, dtype=float)
    e = g.edges
    return float(np.sum((f[e[:, 0]] - f[e[:, 1]]) ** 2))


def _vertex_set(g: Graph, S) -> np.ndarray:
    S = np.unique(np.atleast_1d(np.asarray(S, dtype=np.int64)))
    if S.size == 0:
        raise GraphError("empty vertex set")
    if S[0] < 0 or S[-1] >= g.n:
        raise GraphError("vertex out of range")
    return S


def effective_resistance(g: Graph, S, T) -> ResistanceQuery:
    """Exact ``R_eff(S <-> T)`` by a Dirichlet-boundary Laplacian solve."""
    S, T = _vertex_set(g, S), _vertex_set(g, T)
    if np.intersect1d(S, T).size:
        raise GraphError("source and target sets intersect")
    f = np.zeros(g.n)
    f[T] = 1.0
    free = np.ones(g.n, dtype=bool)
    free[S] = free[T] = False
    U = np.flatnonzero(free)
    if U.size:
        A = g.adjacency()
        L = (sp.diags(g.degrees.astype(float)) - A).tocsr()
        LUU = L[U][:, U].tocsc()
        rhs = np.asarray(A[U][:, T].sum(axis=1)).ravel()
        if U.size <= DIRECT_MAX:
            fU = spla.spsolve(LUU, rhs)
        else:
            fU, info = spla.cg(LUU, rhs, rtol=CG_RTOL, maxiter=20 * U.size)
            if info != 0:
                raise GraphError("conjugate gradient did not converge")
        f[U] = fU
    energy = dirichlet_energy(g, f)
    return ResistanceQuery(S, T, 1.0 / energy, f)


# ----------------------------------------------------------------------
# regulated weights


def regulate(g: Graph, w: ConformalWeight, d: int, tol: float = 1e-16) -> ConformalWeight:
    """``sqrt(1/4 + 3/8 * w0^2)`` with ``w0(x)^2 = sum_y w(y)^2 (2d)^(-dist_G(x, y))``.

    The sum is cut at the hop radius beyond which the remaining terms total less than
    ``tol`` (each sphere around ``x`` has at most ``d^k`` vertices).
    """
    if d < g.d_max:
        raise GraphError(f"d = {d} is below the maximum degree {g.d_max}")
    if not w.normalized:
        raise GraphError("regulate expects a normalized weight")
    w2 = w.values**2
    # tail beyond radius K is at most sum(w^2) * sum_{k>K} 2^-k = sum(w^2) 2^-K
    total = float(w2.sum())
    K = 0 if total == 0 else max(0, int(math.ceil(math.log2(max(total / tol, 1.0)))))
    K = min(K, g.n - 1)
    w0sq = np.zeros(g.n)
    chunk = max(1, min(g.n, 20_000_000 // max(g.n, 1)))
    A = g.adjacency()
    base = 1.0 / (2.0 * d)
    for lo in range(0, g.n, chunk):
        idx = np.arange(lo, min(g.n, lo + chunk))
        if g.n == 1:
            D = np.zeros((1, 1))
        else:
            D = dijkstra(A, directed=False, indices=idx, limit=K, unweighted=True)
        fac = np.where(np.isfinite(D), base ** np.where(np.isfinite(D), D, 0), 0.0)
        w0sq[idx] = fac @ w2
    return ConformalWeight(np.sqrt(0.25 + 0.375 * w0sq))


def is_regulated(g: Graph, w: ConformalWeight, C: float) -> bool:
    """``w >= 1/2`` everywhere and ``w(u) <= C w(v)`` across every edge."""
    v = w.values
    e = g.edges
    if np.any(v < 0.5):
        return False
    if len(e) == 0:
        return True
    a, b = v[e[:, 0]], v[e[:, 1]]
    return bool(np.all(a <= C * b * (1 + 1e-12)) and np.all(b <= C * a * (1 + 1e-12)))


def _inner_radius(r: float, wx: float, C: float) -> float:
    if r <= 0:
        return -np.inf
    return math.log(r / (2.0 * wx)) / math.log(C)


def ball_comparison_check(g: Graph, w: ConformalWeight, x: int, r: float, C: float) -> dict:
    """Check ``B_G(x, log(r/2w(x))/log C) <= B_w(x, r) <= B_G(x, 2r)``."""
    if C < 2:
        raise GraphError("C must be at least 2")
    if not is_regulated(g, w, C):
        raise GraphError("weight is not C-regulated")
    g.check_vertex(x)
    rin = _inner_radius(r, float(w.values[x]), C)
    dw = conformal_distance(g, w, x)
    ball = dw <= r
    inner = graph_ball(g, x, math.floor(rin)) if rin >= 0 else np.zeros(0, dtype=np.int64)
    outer = graph_ball(g, x, 2 * r)
    outer_mask = np.zeros(g.n, dtype=bool)
    outer_mask[outer] = True
    return {
        "inner_radius": rin,
        "inner_size": int(inner.size),
        "ball_size": int(ball.sum()),
        "outer_size": int(outer.size),
        "inner_ok": bool(np.all(ball[inner])),
        "outer_ok": bool(np.all(outer_mask[ball])),
    }


# ----------------------------------------------------------------------
# annulus test function


@dataclass(frozen=True)
class AnnulusCertificate:
    x: int
    R: float
    C: float
    f: np.ndarray | None
    energy: float
    area: float
    energy_bound: float
    bound: float
    exact: float | None
    degenerate: bool
    reason: str = ""

    @property
    def ok(self) -> bool:
        if self.degenerate:
            return True
        ok = self.energy <= self.energy_bound * (1 + 1e-8) and self.bound <= 1.0 / self.energy * (1 + 1e-8)
        if self.exact is not None:
            ok = ok and 1.0 / self.energy <= self.exact * (1 + 1e-8)
        return ok

    def report(self) -> dict:
        return {
            "x": self.x,
            "R": self.R,
            "C": self.C,
            "energy": self.energy,
            "energy_bound": self.energy_bound,
            "area": self.area,
            "bound": self.bound,
            "dual": (1.0 / self.energy) if self.energy > 0 else None,
            "exact": self.exact,
            "ratio": (self.bound / self.exact) if self.exact else None,
            "degenerate": self.degenerate,
            "reason": self.reason,
            "ok": self.ok,
        }


def annulus_test_function(g: Graph, w: ConformalWeight, x: int, R: float, C: float, exact: bool = True) -> AnnulusCertificate:
    """Piecewise-linear potential across the annulus ``R/2 < dist_w(x, .) <= R``.

    ``f = (2/R) min(R/2, max(0, dist_w(x, .) - R/2))`` is feasible between ``B_w(x, R/2)``
    and the complement of ``B_w(x, R)``; its energy is at most
    ``4 d_max (1+C)^2 area_w(x, R) / R^2``.  The resulting lower bound applies to the hop
    balls ``B_G(x, log(R/4w(x))/log C)`` (or ``{x}`` when that radius is negative) and
    ``V \\ B_G(x, 2R)``, against which the exact resistance is computed when ``exact``.
    """
    if not is_regulated(g, w, C):
        raise GraphError("weight is not C-regulated")
    g.check_vertex(x)
    nan = float("nan")
    if R <= 0:
        return AnnulusCertificate(x, R, C, None, nan, nan, nan, nan, None, True, "R must be positive")
    outer = graph_ball(g, x, 2 * R)
    if outer.size == g.n:
        return AnnulusCertificate(x, R, C, None, nan, nan, nan, nan, None, True, "B_G(x, 2R) is all of V")
    dw = conformal_distance(g, w, x)
    f = (2.0 / R) * np.minimum(R / 2, np.maximum(0.0, dw - R / 2))
    ball = dw <= R
    area = float(np.sum(w.values[ball] ** 2))
    energy = dirichlet_energy(g, f)
    ebound = 4.0 * g.d_max * (1 + C) ** 2 * area / R**2
    bound = 1.0 / ebound
    val = None
    if exact:
        rin = _inner_radius(R / 2, float(w.values[x]), C)
        inner = graph_ball(g, x, math.floor(rin)) if rin >= 0 else np.array([x])
        mask = np.ones(g.n, dtype=bool)
        mask[outer] = False
        val = effective_resistance(g, inner, np.flatnonzero(mask)).value
    return AnnulusCertificate(x, float(R), float(C), f, energy, area, ebound, bound, val, False)


def recurrence_profile(
    g: Graph,
    weight_family: Callable[[float], ConformalWeight],
    scales: Sequence[float],
    C: float,
    roots: Sequence[int] | int = 16,
    threshold: float | None = None,
    seed: int = 0,
    collar: bool = False,
    exact: bool = True,
) -> list[dict]:
    """Per-scale annulus certificates over sampled roots.

    ``roots`` is either an explicit list or a count of uniform roots.  With ``collar``
    the roots are drawn from vertices whose hop distance to the set of minimum-degree
    vertices exceeds ``2R`` at the largest scale (the boundary collar of a grid).
    ``threshold`` defaults to the smallest bound observed at the first scale.
    """
    rng = derive_rng(seed, "recurrence-roots")
    if isinstance(roots, (int, np.integer)):
        pool = np.arange(g.n)
        if collar:
            rmax = 2 * max(scales)
            edge = np.flatnonzero(g.degrees < g.d_max)
            if edge.size:
                from .graph import graph_distance

                pool = np.flatnonzero(graph_distance(g, edge) > rmax)
            if pool.size == 0:
                raise GraphError("no vertex lies outside the boundary collar")
        roots = rng.choice(pool, size=min(int(roots), pool.size), replace=False)
    roots = [int(r) for r in roots]
    rows = []
    for R in scales:
        w = weight_family(R)
        if not is_regulated(g, w, C):
            raise GraphError(f"weight at scale {R} is not {C}-regulated")
        certs = [annulus_test_function(g, w, x, R, C, exact=exact) for x in roots]
        vals = np.array([c.bound for c in certs if not c.degenerate])
        if threshold is None and vals.size:
            threshold = float(vals.min())
        rows.append(
            {
                "R": float(R),
                "roots": len(roots),
                "degenerate": sum(c.degenerate for c in certs),
                "bounds": vals.tolist(),
                "exact": [c.exact for c in certs if not c.degenerate],
                "threshold": threshold,
                "fraction": float(np.mean(vals >= threshold * (1 - 1e-12))) if vals.size else 0.0,
                "all_ok": all(c.ok for c in certs),
            }
        )
    return rows
