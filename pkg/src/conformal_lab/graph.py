"""Finite graphs, conformal weights and the metrics they induce.

A conformal weight ``w`` assigns a nonnegative length to every vertex; the edge
``{u, v}`` then has length ``(w[u] + w[v]) / 2`` and ``dist_w`` is the induced
shortest-path (pseudo-)metric.  Balls are closed: ``B_w(x, R) = {y : dist_w(x, y) <= R}``.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, dijkstra

__all__ = [
    "GraphError",
    "Graph",
    "ConformalWeight",
    "DegreeProfile",
    "PairTable",
    "conformal_distance",
    "graph_distance",
    "conformal_ball",
    "graph_ball",
    "area_omega",
    "degree_stats",
    "combine_weights",
    "mass_transport_check",
    "ball_area_check",
    "pair_table",
    "read_graph",
    "write_graph",
    "read_weight",
    "write_weight",
]

# relative slack for float comparisons of path sums against radii
DIST_RTOL = 1e-9


class GraphError(ValueError):
    """Raised for malformed graphs, weights, or out-of-range vertices."""


class Graph:
    """Immutable, connected, simple undirected graph stored in CSR form.

    Parameters
    ----------
    n : int
        Number of vertices, labelled ``0 .. n-1``.
    edges : iterable of (u, v)
        Undirected edges.  Loops and repeated edges are rejected.
    """

    def __init__(self, n: int, edges: Iterable[Sequence[int]] | np.ndarray):
        n = int(n)
        if n < 1:
            raise GraphError("a graph needs at least one vertex")
        e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        if e.size == 0:
            e = e.reshape(0, 2)
        if e.ndim != 2 or e.shape[1] != 2:
            raise GraphError("edges must be pairs")
        if e.size and (e.min() < 0 or e.max() >= n):
            raise GraphError("edge endpoint out of range")
        if np.any(e[:, 0] == e[:, 1]):
            raise GraphError("loops are not allowed")
        e = np.sort(e, axis=1)
        order = np.lexsort((e[:, 1], e[:, 0]))
        e = e[order]
        if len(e) > 1 and np.any(np.all(e[1:] == e[:-1], axis=1)):
            raise GraphError("multi-edges are not allowed")
        self._cache: dict = {}
        self.n = n
        self.m = int(len(e))
        self.edges = e
        self.edges.setflags(write=False)

        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        self.indices = dst
        self.indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(self.indptr, src + 1, 1)
        self.indptr = np.cumsum(self.indptr)
        self.degrees = np.diff(self.indptr)
        for arr in (self.indices, self.indptr, self.degrees):
            arr.setflags(write=False)

        if n > 1:
            ncomp, _ = connected_components(self.adjacency(), directed=False)
            if ncomp != 1 or np.any(self.degrees == 0):
                raise GraphError("graph is disconnected")

    # ------------------------------------------------------------------
    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Graph) and self.n == other.n and np.array_equal(self.edges, other.edges)

    def __hash__(self) -> int:
        return hash((self.n, self.key))

    @property
    def key(self) -> str:
        if "key" not in self._cache:
            self._cache["key"] = hashlib.sha1(self.edges.tobytes()).hexdigest()
        return self._cache["key"]

    def neighbors(self, x: int) -> np.ndarray:
        self.check_vertex(x)
        return self.indices[self.indptr[x] : self.indptr[x + 1]]

    def check_vertex(self, x) -> int:
        if not (0 <= int(x) < self.n):
            raise GraphError(f"vertex {x} out of range for n={self.n}")
        return int(x)

    @property
    def d_max(self) -> int:
        return int(self.degrees.max()) if self.n > 1 else 0

    @property
    def stationary(self) -> np.ndarray:
        """Stationary measure ``pi(x) = deg(x) / 2m`` of the simple random walk."""
        if self.m == 0:
            return np.ones(1)
        return self.degrees / (2.0 * self.m)

    def adjacency(self) -> sp.csr_matrix:
        if "adj" not in self._cache:
            data = np.ones(len(self.indices))
            self._cache["adj"] = sp.csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))
        return self._cache["adj"]

    def transition(self) -> sp.csr_matrix:
        """Sparse ``P = D^{-1} A``."""
        if "P" not in self._cache:
            inv = 1.0 / np.maximum(self.degrees, 1)
            self._cache["P"] = sp.diags(inv) @ self.adjacency()
        return self._cache["P"]

    def induced_components(self, keep: np.ndarray) -> tuple[int, np.ndarray]:
        """Connected components of ``G[keep]``; label -1 marks removed vertices."""
        keep = np.asarray(keep, dtype=bool)
        idx = np.flatnonzero(keep)
        labels = np.full(self.n, -1, dtype=np.int64)
        if len(idx) == 0:
            return 0, labels
        sub = self.adjacency()[idx][:, idx]
        k, lab = connected_components(sub, directed=False)
        labels[idx] = lab
        return int(k), labels


@dataclass(frozen=True, eq=False)
class ConformalWeight:
    """Nonnegative vertex weight with its uniform-root L2 norm cached.

    ``l2_norm`` is ``sqrt(mean(values**2))``; the weight is *normalized* when that
    equals one to within ``1e-9``.
    """

    values: np.ndarray
    l2_norm: float = field(init=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True).ravel()
        if v.size == 0:
            raise GraphError("empty weight")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise GraphError("conformal weights must be finite and nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "l2_norm", float(np.sqrt(np.mean(v * v))))

    @classmethod
    def uniform(cls, n: int, value: float = 1.0) -> "ConformalWeight":
        return cls(np.full(n, float(value)))

    @property
    def normalized(self) -> bool:
        return abs(self.l2_norm - 1.0) <= 1e-9

    def normalize(self) -> "ConformalWeight":
        if self.l2_norm == 0:
            raise GraphError("cannot normalize the zero weight")
        return ConformalWeight(self.values / self.l2_norm)

    def scaled(self, c: float) -> "ConformalWeight":
        return ConformalWeight(self.values * float(c))

    @property
    def key(self) -> str:
        return hashlib.sha1(self.values.tobytes()).hexdigest()

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]


def _check_weight(g: Graph, w: ConformalWeight) -> None:
    if len(w) != g.n:
        raise GraphError(f"weight has {len(w)} entries, graph has {g.n} vertices")


def length_matrix(g: Graph, w: ConformalWeight) -> sp.csr_matrix:
    """Sparse matrix of edge lengths ``(w[u]+w[v])/2``; zero lengths kept explicitly."""
    _check_weight(g, w)
    ck = ("len", w.key)
    if ck not in g._cache:
        rows = np.repeat(np.arange(g.n), g.degrees)
        data = 0.5 * (w.values[rows] + w.values[g.indices])
        g._cache[ck] = sp.csr_matrix((data, g.indices.copy(), g.indptr.copy()), shape=(g.n, g.n))
    return g._cache[ck]


def _sources(g: Graph, source) -> np.ndarray:
    src = np.atleast_1d(np.asarray(source, dtype=np.int64))
    if src.size == 0:
        raise GraphError("empty source set")
    if src.min() < 0 or src.max() >= g.n:
        raise GraphError("source vertex out of range")
    return src


def conformal_distance(g: Graph, w: ConformalWeight, source, limit: float = np.inf) -> np.ndarray:
    """Exact ``dist_w`` from ``source`` (a vertex or a set of vertices) to every vertex.

    Distances larger than ``limit`` are reported as ``inf``.
    """
    src = _sources(g, source)
    if g.n == 1:
        return np.zeros(1)
    d = dijkstra(length_matrix(g, w), directed=False, indices=src, limit=limit, min_only=True)
    return np.asarray(d, dtype=float)


def graph_distance(g: Graph, source, limit: float = np.inf) -> np.ndarray:
    """Hop distance ``dist_G`` from a vertex or a vertex set."""
    src = _sources(g, source)
    if g.n == 1:
        return np.zeros(1)
    d = dijkstra(g.adjacency(), directed=False, indices=src, limit=limit, min_only=True, unweighted=True)
    return np.asarray(d, dtype=float)


def conformal_ball(g: Graph, w: ConformalWeight, x: int, R: float) -> np.ndarray:
    """Closed ball ``{y : dist_w(x, y) <= R}`` as a sorted vertex array."""
    if R < 0:
        raise GraphError("radius must be nonnegative")
    g.check_vertex(x)
    d = conformal_distance(g, w, x, limit=R)
    return np.flatnonzero(d <= R)


def graph_ball(g: Graph, x, r: float) -> np.ndarray:
    """Closed hop ball; empty when ``r < 0``."""
    if r < 0:
        return np.zeros(0, dtype=np.int64)
    d = graph_distance(g, x, limit=r)
    return np.flatnonzero(d <= r)


def area_omega(g: Graph, w: ConformalWeight, x: int, R: float) -> float:
    """Sum of ``w**2`` over the closed ball ``B_w(x, R)``."""
    ball = conformal_ball(g, w, x, R)
    return float(np.sum(w.values[ball] ** 2))


# ----------------------------------------------------------------------
# all pairs within a radius


@dataclass(frozen=True)
class PairTable:
    """All ordered pairs ``(src, dst)`` with ``dist(src, dst) <= radius``, grouped by ``src``."""

    n: int
    radius: float
    indptr: np.ndarray
    dst: np.ndarray
    dist: np.ndarray

    @property
    def src(self) -> np.ndarray:
        return np.repeat(np.arange(self.n), np.diff(self.indptr))

    def ball(self, x: int, r: float | None = None) -> np.ndarray:
        lo, hi = self.indptr[x], self.indptr[x + 1]
        if r is None:
            return self.dst[lo:hi]
        return self.dst[lo:hi][self.dist[lo:hi] <= r]

    def ball_sizes(self, r: float | None = None) -> np.ndarray:
        if r is None:
            return np.diff(self.indptr)
        return np.bincount(self.src[self.dist <= r], minlength=self.n)

    def restrict(self, r: float) -> "PairTable":
        if r > self.radius:
            raise ValueError("cannot restrict to a larger radius")
        keep = self.dist <= r
        counts = np.bincount(self.src[keep], minlength=self.n)
        indptr = np.concatenate([[0], np.cumsum(counts)])
        return PairTable(self.n, float(r), indptr, self.dst[keep], self.dist[keep])


def pair_table(g: Graph, w: ConformalWeight | None, radius: float, chunk: int = 256) -> PairTable:
    """Build (and cache on ``g``) the table of pairs within ``radius``.

    ``w=None`` selects the hop metric.
    """
    if radius < 0:
        raise GraphError("radius must be nonnegative")
    wkey = "graph" if w is None else w.key
    ck = ("pairs", wkey, float(radius))
    if ck in g._cache:
        return g._cache[ck]
    mat = g.adjacency() if w is None else length_matrix(g, w)
    counts = np.zeros(g.n, dtype=np.int64)
    dsts, dists = [], []
    for lo in range(0, g.n, chunk):
        idx = np.arange(lo, min(g.n, lo + chunk))
        if g.n == 1:
            block = np.zeros((1, 1))
        else:
            block = dijkstra(mat, directed=False, indices=idx, limit=radius, unweighted=w is None)
        rows, cols = np.nonzero(block <= radius)
        counts[idx] = np.bincount(rows, minlength=len(idx))
        dsts.append(cols)
        dists.append(block[rows, cols])
    indptr = np.concatenate([[0], np.cumsum(counts)])
    table = PairTable(g.n, float(radius), indptr, np.concatenate(dsts), np.concatenate(dists))
    g._cache[ck] = table
    return table


# ----------------------------------------------------------------------
# degree statistics


@dataclass(frozen=True)
class DegreeProfile:
    """Sorted degrees with prefix sums; ``prefix_sums[k]`` is the sum of the k largest degrees."""

    sorted_degrees: np.ndarray
    prefix_sums: np.ndarray
    degrees: np.ndarray
    m: int

    @property
    def n(self) -> int:
        return len(self.sorted_degrees)

    def Delta(self, k) -> float:
        """Largest total degree of a set of at most ``k`` vertices."""
        if k < 0:
            raise GraphError("k must be nonnegative")
        k = min(int(math.floor(k + 1e-12)), self.n)
        return float(self.prefix_sums[k])

    def _ceil(self, eps: float) -> int:
        return max(1, int(math.ceil(eps * self.n - 1e-9)))

    def dbar(self, eps: float) -> float:
        """Average degree of the ``ceil(eps * n)`` vertices of largest degree.

        For ``eps > 1`` the set size exceeds ``n`` and the value is ``2m / ceil(eps n)``.
        """
        if eps <= 0:
            raise GraphError("eps must be positive")
        k = self._ceil(eps)
        return self.Delta(k) / k

    def pi(self, x: int) -> float:
        return float(self.degrees[x]) / (2.0 * self.m)

    def pi_star(self, beta: float) -> float:
        """Largest stationary mass of a set of at most ``beta * n`` vertices."""
        if beta < 0:
            raise GraphError("beta must be nonnegative")
        k = int(math.floor(beta * self.n + 1e-9))
        return self.Delta(k) / (2.0 * self.m)


def degree_stats(g: Graph) -> DegreeProfile:
    s = np.sort(g.degrees)[::-1].astype(np.int64)
    prefix = np.concatenate([[0], np.cumsum(s)])
    return DegreeProfile(s, prefix, np.asarray(g.degrees), g.m)


# ----------------------------------------------------------------------


def combine_weights(weights: Sequence[ConformalWeight], coefficients: Sequence[float]) -> ConformalWeight:
    """Pointwise ``sqrt(sum_k c_k w_k**2)``."""
    if len(weights) == 0:
        raise GraphError("need at least one weight")
    if len(weights) != len(coefficients):
        raise GraphError("one coefficient per weight")
    c = np.asarray(coefficients, dtype=float)
    if not np.all(np.isfinite(c)) or np.any(c <= 0):
        raise GraphError("coefficients must be finite and positive")
    n = len(weights[0])
    acc = np.zeros(n)
    for wk, ck in zip(weights, c):
        if len(wk) != n:
            raise GraphError("weights live on different vertex sets")
        acc += ck * wk.values**2
    return ConformalWeight(np.sqrt(acc))


def basel_coefficients(K: int) -> np.ndarray:
    """``(6/pi^2) / k^2`` for ``k = 1..K``; they sum to less than one."""
    k = np.arange(1, K + 1, dtype=float)
    return (6.0 / math.pi**2) / k**2


def mass_transport_check(g: Graph, F: Callable[[np.ndarray, np.ndarray], np.ndarray], radius: float) -> tuple[float, float]:
    """Return ``(sum_x sum_y F(x, y), sum_x sum_y F(y, x))`` over pairs with ``dist_G <= radius``.

    ``F`` is evaluated on index arrays.  Both totals are correctly rounded
    (``math.fsum``) sums of the same multiset, so they agree exactly.
    """
    table = pair_table(g, None, radius)
    x, y = table.src, table.dst
    out_flow = np.asarray(F(x, y), dtype=float)
    in_flow = np.asarray(F(y, x), dtype=float)
    return math.fsum(out_flow.tolist()), math.fsum(in_flow.tolist())


def ball_area_check(g: Graph, w: ConformalWeight, R: float) -> tuple[float, float]:
    """Mean ball area versus ``max_x |B_w(x,R)| * mean(w**2)``; the first never exceeds the second."""
    table = pair_table(g, w, R)
    area = np.bincount(table.src, weights=w.values[table.dst] ** 2, minlength=g.n)
    lhs = float(np.mean(area))
    rhs = float(table.ball_sizes().max() * np.mean(w.values**2))
    return lhs, rhs


# ----------------------------------------------------------------------
# file formats


def write_graph(g: Graph, path) -> None:
    lines = [f"{g.n} {g.m}"] + [f"{u} {v}" for u, v in g.edges.tolist()]
    Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def read_graph(path) -> Graph:
    tokens = Path(path).read_text().split()
    if len(tokens) < 2:
        raise GraphError("graph file must start with 'n m'")
    n, m = int(tokens[0]), int(tokens[1])
    body = np.array(tokens[2:], dtype=np.int64)
    if body.size != 2 * m:
        raise GraphError(f"expected {m} edges, found {body.size / 2:g}")
    return Graph(n, body.reshape(m, 2))


def write_weight(w: ConformalWeight, path) -> None:
    Path(path).write_text("\n".join(repr(float(v)) for v in w.values) + "\n", newline="\n")


def read_weight(path, n: int | None = None) -> ConformalWeight:
    vals = [float(t) for t in Path(path).read_text().split()]
    if n is not None and len(vals) != n:
        raise GraphError(f"weight file has {len(vals)} entries, expected {n}")
    return ConformalWeight(np.array(vals))
