"""Seeded generators for the finite graph families used in the experiments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .graph import Graph, GraphError
from .rng import derive_rng

__all__ = [
    "GeneratorSpec",
    "generate",
    "KINDS",
    "MAX_VERTICES",
    "grid",
    "tri_grid",
    "path",
    "cycle",
    "star",
    "binary_tree",
    "canopy_tree",
    "prism",
    "stacked_triangulation",
    "decorated_tree",
    "transient_tree",
    "transient_multiplicities",
]

MAX_VERTICES = 10**6

KINDS = (
    "grid",
    "tri_grid",
    "cycle",
    "path",
    "binary_tree",
    "canopy_tree",
    "prism",
    "stacked_triangulation",
    "decorated_tree",
    "transient_tree",
    "star",
)


@dataclass(frozen=True)
class GeneratorSpec:
    """Family name, its size parameters and a seed.

    Recognised parameters per kind::

        grid            a, b (=a), torus (False)
        tri_grid        k, torus (False)
        cycle, path     n
        star            n  (number of leaves)
        binary_tree     h
        canopy_tree     h
        prism           L
        stacked_triangulation  n  (number of inserted vertices)
        decorated_tree  depth (10), alpha (1.0), L_max (10_000)
        transient_tree  h, d  (table d[k] = d_{2^k}, k = 0..h+1, or callable t -> d_t)
    """

    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    max_vertices: int = MAX_VERTICES

    def __post_init__(self):
        if self.kind not in KINDS:
            raise GraphError(f"unknown generator kind {self.kind!r}")


def _check_size(n: int, spec: GeneratorSpec) -> None:
    if n > spec.max_vertices:
        raise GraphError(f"{spec.kind} would have {n} vertices (max {spec.max_vertices})")


def _pos(spec: GeneratorSpec, name: str, default=None) -> int:
    v = spec.params.get(name, default)
    if v is None:
        raise GraphError(f"{spec.kind} needs parameter {name!r}")
    v = int(v)
    if v < 1:
        raise GraphError(f"{name} must be positive")
    return v


def _grid_edges(a: int, b: int, torus: bool) -> np.ndarray:
    idx = np.arange(a * b).reshape(a, b)
    if torus:
        if a < 3 or b < 3:
            raise GraphError("torus needs both sides >= 3")
        right = np.stack([idx.ravel(), np.roll(idx, -1, axis=1).ravel()], axis=1)
        down = np.stack([idx.ravel(), np.roll(idx, -1, axis=0).ravel()], axis=1)
    else:
        right = np.stack([idx[:, :-1].ravel(), idx[:, 1:].ravel()], axis=1)
        down = np.stack([idx[:-1, :].ravel(), idx[1:, :].ravel()], axis=1)
    return np.concatenate([right, down])


def grid(a: int, b: int | None = None, torus: bool = False) -> Graph:
    b = a if b is None else b
    return Graph(a * b, _grid_edges(a, b, torus))


def tri_grid(k: int, torus: bool = False) -> Graph:
    """``k x k`` grid with the diagonal ``(i, j) - (i+1, j+1)`` in every unit square."""
    idx = np.arange(k * k).reshape(k, k)
    if torus:
        diag = np.stack([idx.ravel(), np.roll(np.roll(idx, -1, 0), -1, 1).ravel()], axis=1)
    else:
        diag = np.stack([idx[:-1, :-1].ravel(), idx[1:, 1:].ravel()], axis=1)
    return Graph(k * k, np.concatenate([_grid_edges(k, k, torus), diag]))


def path(n: int) -> Graph:
    return Graph(n, np.stack([np.arange(n - 1), np.arange(1, n)], axis=1))


def cycle(n: int) -> Graph:
    if n < 3:
        raise GraphError("a simple cycle needs n >= 3")
    return Graph(n, np.stack([np.arange(n), (np.arange(n) + 1) % n], axis=1))


def star(leaves: int) -> Graph:
    return Graph(leaves + 1, np.stack([np.zeros(leaves, dtype=int), np.arange(1, leaves + 1)], axis=1))


def binary_tree(h: int) -> Graph:
    """Complete binary tree of height ``h`` in heap order (root 0, children 2i+1, 2i+2)."""
    n = 2 ** (h + 1) - 1
    child = np.arange(1, n)
    return Graph(n, np.stack([(child - 1) // 2, child], axis=1))


def canopy_tree(h: int) -> tuple[Graph, np.ndarray]:
    """Binary tree of height ``h`` relabelled so that vertex 0 is a leaf.

    Returns the graph and the height (distance to the leaf level) of every vertex.
    """
    n = 2 ** (h + 1) - 1
    first_leaf = 2**h - 1
    perm = np.arange(n)
    perm[[0, first_leaf]] = perm[[first_leaf, 0]]
    t = binary_tree(h)
    level = np.floor(np.log2(np.arange(n) + 1)).astype(int)
    height = np.empty(n, dtype=int)
    height[perm] = h - level
    return Graph(n, perm[t.edges]), height


def prism(L: int) -> Graph:
    """Triangle times a path with ``L`` edges; vertex ``3 t + i`` is corner ``i`` of layer ``t``."""
    layers = L + 1
    edges = []
    for t in range(layers):
        b = 3 * t
        edges += [(b, b + 1), (b + 1, b + 2), (b, b + 2)]
        if t + 1 < layers:
            edges += [(b + i, b + 3 + i) for i in range(3)]
    return Graph(3 * layers, edges)


def stacked_triangulation(n_insert: int, rng: np.random.Generator) -> Graph:
    """Start from a triangle; repeatedly pick a uniform bounded face and insert a vertex in it."""
    faces = [(0, 1, 2)]
    edges = [(0, 1), (1, 2), (0, 2)]
    for v in range(3, 3 + n_insert):
        i = int(rng.integers(len(faces)))
        a, b, c = faces[i]
        faces[i] = (a, b, v)
        faces += [(b, c, v), (a, c, v)]
        edges += [(a, v), (b, v), (c, v)]
    return Graph(3 + n_insert, edges)


def _path_length_sampler(alpha: float, L_max: int, rng: np.random.Generator, size_bias: bool) -> Callable[[int], np.ndarray]:
    ell = np.arange(1, L_max + 1, dtype=float)
    p = ell ** (-2.0 - alpha)
    if size_bias:
        p = p * (ell + 1)
    cdf = np.cumsum(p / p.sum())
    cdf[-1] = 1.0

    def draw(k: int) -> np.ndarray:
        return np.searchsorted(cdf, rng.random(k), side="right") + 1

    return draw


def decorated_tree(depth: int, alpha: float, L_max: int, rng: np.random.Generator, max_vertices: int) -> tuple[Graph, np.ndarray]:
    """3-regular tree truncated at ``depth`` with a random hanging path at every tree vertex.

    The root's path length has law proportional to ``(l+1) l^(-2-alpha)``, all others
    ``l^(-2-alpha)``, for ``1 <= l <= L_max``.  Returns the graph and a mask of tree vertices.
    """
    tree_edges = []
    frontier = [0]
    nt = 1
    for d in range(depth):
        nxt = []
        for v in frontier:
            for _ in range(3 if d == 0 else 2):
                tree_edges.append((v, nt))
                nxt.append(nt)
                nt += 1
        frontier = nxt
    lengths = np.empty(nt, dtype=np.int64)
    lengths[0] = _path_length_sampler(alpha, L_max, rng, True)(1)[0]
    if nt > 1:
        lengths[1:] = _path_length_sampler(alpha, L_max, rng, False)(nt - 1)
    total = nt + int(lengths.sum())
    if total > max_vertices:
        raise GraphError(f"decorated_tree would have {total} vertices (max {max_vertices})")
    chunks = [np.asarray(tree_edges, dtype=np.int64).reshape(-1, 2)]
    nxt = nt
    for v in range(nt):
        ell = int(lengths[v])
        ids = np.arange(nxt, nxt + ell)
        chunks.append(np.stack([np.concatenate([[v], ids[:-1]]), ids], axis=1))
        nxt += ell
    mask = np.zeros(total, dtype=bool)
    mask[:nt] = True
    return Graph(total, np.concatenate(chunks)), mask


def transient_multiplicities(h: int, d: Sequence[float] | Callable[[int], float]) -> np.ndarray:
    """``f(k) = 2 d_{2^k} - d_{2^{k+1}}`` for ``k = 1..h`` (entry ``k-1``), rounded and floored at 1.

    ``d`` is either a table indexed by ``k`` holding ``d_{2^k}`` or a callable ``t -> d_t``.
    Raises when the cap ``d_{2^k} <= 2^{k/4}`` fails.
    """
    def dk(k: int) -> float:
        if callable(d):
            return float(d(2**k))
        if k >= len(d):
            raise GraphError(f"d table needs entries up to k={h + 1}")
        return float(d[k])

    for k in range(1, h + 2):
        if dk(k) > 2 ** (k / 4) + 1e-12:
            raise GraphError(f"d_{{2^{k}}} = {dk(k)} exceeds the cap 2^(k/4)")
    f = np.array([2 * dk(k) - dk(k + 1) for k in range(1, h + 1)])
    return np.maximum(1, np.rint(f)).astype(np.int64)


def transient_tree(h: int, d, max_vertices: int) -> Graph:
    """Binary tree of height ``h`` where an edge at height ``k`` carries ``f(k)`` parallel
    edges, each subdivided into a path of length two when ``f(k) >= 2``."""
    f = transient_multiplicities(h, d)
    n_tree = 2 ** (h + 1) - 1
    level = np.floor(np.log2(np.arange(n_tree) + 1)).astype(int)
    edges = []
    nxt = n_tree
    for child in range(1, n_tree):
        parent = (child - 1) // 2
        k = h - level[child] + 1
        mult = int(f[k - 1])
        if mult == 1:
            edges.append((parent, child))
            continue
        if nxt + mult > max_vertices:
            raise GraphError(f"transient_tree exceeds {max_vertices} vertices")
        for _ in range(mult):
            edges += [(parent, nxt), (nxt, child)]
            nxt += 1
    return Graph(nxt, edges)


def generate(spec: GeneratorSpec, with_labels: bool = False):
    """Build the graph described by ``spec``.

    With ``with_labels=True`` returns ``(graph, labels)`` where ``labels`` is a dict of
    per-vertex arrays (possibly empty).
    """
    kind, p = spec.kind, spec.params
    labels: dict = {}
    rng = derive_rng(spec.seed, "generate", kind)
    if kind == "grid":
        a = _pos(spec, "a")
        b = _pos(spec, "b", a)
        _check_size(a * b, spec)
        g = grid(a, b, bool(p.get("torus", False)))
    elif kind == "tri_grid":
        k = _pos(spec, "k")
        _check_size(k * k, spec)
        g = tri_grid(k, bool(p.get("torus", False)))
    elif kind in ("cycle", "path"):
        n = _pos(spec, "n")
        _check_size(n, spec)
        g = cycle(n) if kind == "cycle" else path(n)
    elif kind == "star":
        n = _pos(spec, "n")
        _check_size(n + 1, spec)
        g = star(n)
    elif kind in ("binary_tree", "canopy_tree"):
        h = int(p.get("h", -1))
        if h < 0:
            raise GraphError("tree height must be >= 0")
        _check_size(2 ** (h + 1) - 1, spec)
        if kind == "binary_tree":
            g = binary_tree(h)
        else:
            g, labels["height"] = canopy_tree(h)
    elif kind == "prism":
        L = _pos(spec, "L")
        _check_size(3 * (L + 1), spec)
        g = prism(L)
    elif kind == "stacked_triangulation":
        n = int(p.get("n", 0))
        if n < 0:
            raise GraphError("n must be nonnegative")
        _check_size(n + 3, spec)
        g = stacked_triangulation(n, rng)
    elif kind == "decorated_tree":
        depth = int(p.get("depth", 10))
        alpha = float(p.get("alpha", 1.0))
        L_max = int(p.get("L_max", 10_000))
        if depth < 0 or alpha <= 0 or L_max < 1:
            raise GraphError("decorated_tree needs depth >= 0, alpha > 0, L_max >= 1")
        g, labels["tree"] = decorated_tree(depth, alpha, L_max, rng, spec.max_vertices)
    else:
        h = _pos(spec, "h")
        if "d" not in p:
            raise GraphError("transient_tree needs the d sequence")
        _check_size(2 ** (h + 1) - 1, spec)
        g = transient_tree(h, p["d"], spec.max_vertices)
    return (g, labels) if with_labels else g
