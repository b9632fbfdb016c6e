"""Normalized Laplacian spectra, heat kernels and the return-probability certificate chain.

Conventions: ``L = I - D^{-1/2} A D^{-1/2}`` with eigenvalues ``0 = lam_0 <= ... <= lam_{n-1}``
(0-indexed), ``P = D^{-1} A`` acting on functions by ``(P f)(x) = mean of f over neighbours``,
``pi(x) = deg(x) / 2m`` and ``<f, g>_pi = sum_x pi(x) f(x) g(x)``.  If ``u`` is a unit
eigenvector of ``L`` then ``phi = u / sqrt(pi)`` is an ``L2(pi)``-unit eigenfunction of ``P``.
The matrix ``S = D^{1/2} P D^{-1/2} = I - L`` is symmetric and ``P^T = D^{-1/2} S^T D^{1/2}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .graph import ConformalWeight, Graph, GraphError, degree_stats

__all__ = [
    "SpectralData",
    "HeatKernel",
    "spectrum",
    "normalized_laplacian",
    "return_probability",
    "diag_trace",
    "eigenvalue_degree_report",
    "SweepResult",
    "cheeger_sweep",
    "smoothed_rayleigh_check",
    "Certificate",
    "bump_return_certificate",
    "heat_embedding",
    "cone_set",
    "spreading_check",
    "isotropic_check",
    "heat_kernel_weight",
    "spectral_dimension_estimate",
    "DENSE_MAX",
]

DENSE_MAX = 3000
TOL = 1e-8


def normalized_laplacian(g: Graph) -> sp.csr_matrix:
    s = 1.0 / np.sqrt(g.degrees)
    A = g.adjacency()
    return (sp.identity(g.n, format="csr") - sp.diags(s) @ A @ sp.diags(s)).tocsr()


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Sorted eigenvalues of ``L`` and optionally its orthonormal eigenvectors (columns)."""

    eigenvalues: np.ndarray
    vectors: np.ndarray | None
    mode: str
    pi: np.ndarray
    residual: float = 0.0

    @property
    def n(self) -> int:
        return len(self.pi)

    @property
    def complete(self) -> bool:
        return len(self.eigenvalues) == self.n

    @property
    def phi(self) -> np.ndarray:
        """``L2(pi)``-orthonormal eigenfunctions of ``P`` as columns."""
        if self.vectors is None:
            raise GraphError("eigenvectors were not computed")
        return self.vectors / np.sqrt(self.pi)[:, None]

    def check(self) -> dict:
        lam = self.eigenvalues
        out = {
            "lambda0": float(lam[0]),
            "min": float(lam.min()),
            "max": float(lam.max()),
            "ok_range": bool(abs(lam[0]) <= 1e-9 and lam.min() >= -1e-9 and lam.max() <= 2 + 1e-9),
        }
        if self.complete:
            out["trace_error"] = float(abs(lam.sum() - self.n))
            out["ok_trace"] = out["trace_error"] <= 1e-6
        return out


def spectrum(g: Graph, want_vectors: bool = False, mode: str = "auto", k: int = 256, dense_max: int = DENSE_MAX) -> SpectralData:
    """Eigen-decomposition of the normalized Laplacian.

    ``mode="dense"`` always solves the full problem; ``"partial"`` returns the ``k``
    smallest eigenpairs by shift-invert Lanczos; ``"auto"`` picks dense for ``n <= dense_max``.
    """
    pi = g.stationary
    if g.n == 1:
        return SpectralData(np.zeros(1), np.ones((1, 1)) if want_vectors else None, "dense", pi)
    if mode == "auto":
        mode = "dense" if g.n <= dense_max else "partial"
    L = normalized_laplacian(g)
    if mode == "dense":
        M = L.toarray()
        if want_vectors:
            lam, U = sla.eigh(M)
        else:
            lam, U = sla.eigh(M, eigvals_only=True), None
        return SpectralData(lam, U, "dense", pi)
    if mode != "partial":
        raise ValueError(f"unknown mode {mode!r}")
    k = min(k, g.n - 2)
    lam, U = spla.eigsh(L.tocsc(), k=k, sigma=-1e-3, which="LM")
    order = np.argsort(lam)
    lam, U = lam[order], U[:, order]
    res = float(np.max(np.linalg.norm(L @ U - U * lam, axis=0)))
    if res > 1e-6:
        raise GraphError(f"partial eigensolve did not converge (residual {res:.2e})")
    return SpectralData(lam, U if want_vectors else None, "partial", pi, res)


class HeatKernel:
    """Exact ``p_T(x, y)``; dense powers from the spectrum when available, else sparse mat-vecs."""

    def __init__(self, g: Graph, spec: SpectralData | None = None, dense_max: int = DENSE_MAX):
        self.g = g
        self.spec = spec if (spec is not None and spec.vectors is not None and spec.complete) else None
        self.dense_max = dense_max
        self.pi = g.stationary
        self._sqd = np.sqrt(g.degrees.astype(float))
        self._sym: dict[int, np.ndarray] = {}

    # sparse route
    def apply(self, f: np.ndarray, T: int) -> np.ndarray:
        """``P^T f`` for a vector or a matrix of column vectors."""
        P = self.g.transition()
        out = np.array(f, dtype=float, copy=True)
        for _ in range(int(T)):
            out = P @ out
        return out

    def column(self, x: int, T: int) -> np.ndarray:
        """``v(y) = p_T(y, x)``."""
        e = np.zeros(self.g.n)
        e[x] = 1.0
        return self.apply(e, T)

    def row(self, x: int, T: int) -> np.ndarray:
        """``p_T(x, .)`` via reversibility."""
        return self.column(x, T) * self.pi / self.pi[x]

    def return_probability_matvec(self, x: int, T: int) -> float:
        """``p_T(x, x)`` using ``ceil(T/2)`` mat-vecs and reversibility."""
        h = T // 2
        v = self.column(x, h)
        if T % 2 == 0:
            return float(np.dot(self.pi, v * v) / self.pi[x])
        w = self.apply(v, 1)
        return float(np.dot(self.pi, v * w) / self.pi[x])

    # dense route
    def sym_power(self, T: int) -> np.ndarray:
        """Dense ``S^T`` with ``S = I - L``; symmetric."""
        T = int(T)
        if self.g.n > self.dense_max:
            raise GraphError(f"dense heat kernel limited to n <= {self.dense_max}")
        if T not in self._sym:
            if self.spec is not None:
                U = self.spec.vectors
                mu = (1.0 - self.spec.eigenvalues) ** T
                self._sym[T] = (U * mu) @ U.T
            else:
                s = 1.0 / self._sqd
                S = (sp.diags(s) @ self.g.adjacency() @ sp.diags(s)).toarray()
                self._sym[T] = np.linalg.matrix_power(S, T)
        return self._sym[T]

    def matrix(self, T: int) -> np.ndarray:
        """Dense ``P^T`` with entries ``p_T(x, y)``."""
        return self.sym_power(T) * (self._sqd[None, :] / self._sqd[:, None])

    def return_probabilities(self, T: int) -> np.ndarray:
        """``p_T(x, x)`` for every ``x``."""
        if self.spec is not None:
            mu = (1.0 - self.spec.eigenvalues) ** int(T)
            return (self.spec.vectors**2) @ mu
        if self.g.n <= self.dense_max:
            return np.diag(self.sym_power(T)).copy()
        return np.array([self.return_probability_matvec(x, T) for x in range(self.g.n)])

    def return_probability(self, x: int, T: int) -> float:
        self.g.check_vertex(x)
        if self.spec is not None:
            mu = (1.0 - self.spec.eigenvalues) ** int(T)
            return float(np.dot(self.spec.vectors[x] ** 2, mu))
        return self.return_probability_matvec(x, T)

    def block(self, rows: np.ndarray, cols: np.ndarray, T: int) -> np.ndarray:
        """``p_T(rows, cols)`` as a dense array."""
        rows, cols = np.asarray(rows), np.asarray(cols)
        if T in self._sym or self.spec is not None and self.g.n <= self.dense_max:
            S = self.sym_power(T)[np.ix_(rows, cols)]
            return S * (self._sqd[cols][None, :] / self._sqd[rows][:, None])
        E = np.zeros((self.g.n, len(cols)))
        E[cols, np.arange(len(cols))] = 1.0
        return self.apply(E, T)[rows]

    def check(self, T: int) -> dict:
        """Row sums and reversibility of the dense ``P^T``."""
        M = self.matrix(T)
        F = self.pi[:, None] * M
        return {
            "row_sum_error": float(np.max(np.abs(M.sum(axis=1) - 1))),
            "reversibility_error": float(np.max(np.abs(F - F.T))),
        }


def return_probability(g: Graph, x: int, T: int, heat: HeatKernel | None = None) -> float:
    """Exact ``p_T(x, x)``."""
    if T < 0:
        raise ValueError("T must be >= 0")
    heat = heat or HeatKernel(g)
    return heat.return_probability(x, T)


def diag_trace(g: Graph, T: int, spec: SpectralData | None = None) -> dict:
    """``tr(P^T)/n`` from the spectrum with the counting lower bounds.

    Returns the trace, the count ``#{k : lam_k <= 1/T}``, the bound ``count/(4n)``
    and the sharper ``count (1 - 1/T)^T / n``; both bounds are asserted only for even ``T``.
    """
    spec = spec or spectrum(g)
    if not spec.complete:
        raise GraphError("trace needs the full spectrum")
    lam = spec.eigenvalues
    n = g.n
    tr = float(np.sum((1.0 - lam) ** T)) / n
    count = int(np.sum(lam <= 1.0 / T + 1e-12)) if T > 0 else n
    weak = count / (4.0 * n)
    strong = count * (1 - 1 / T) ** T / n if T > 0 else 1.0
    even = T >= 2 and T % 2 == 0
    return {
        "T": T,
        "trace_over_n": tr,
        "count": count,
        "bound_quarter": weak,
        "bound_strong": strong,
        "asserted": even,
        "ok": (not even) or (tr + TOL >= weak and tr + TOL >= strong),
    }


def eigenvalue_degree_report(g: Graph, spec: SpectralData | None = None) -> dict:
    """Rows ``(k, lam_k, Delta(k)/n, lam_k n / Delta(k))``; the ``k = 0`` ratio is 0."""
    spec = spec or spectrum(g)
    prof = degree_stats(g)
    lam = spec.eigenvalues
    ks = np.arange(len(lam))
    delta = np.array([prof.Delta(k) for k in ks])
    ratio = np.zeros(len(lam))
    ratio[1:] = lam[1:] * g.n / delta[1:]
    return {
        "k": ks,
        "lambda": lam,
        "delta_over_n": delta / g.n,
        "ratio": ratio,
        "max_ratio": float(ratio.max()),
        "argmax": int(ratio.argmax()),
    }


# ----------------------------------------------------------------------
# Cheeger sweep and the bump certificate


def _pi_dot(pi, f, g_):
    return float(np.dot(pi * f, g_))


@dataclass(frozen=True)
class SweepResult:
    S: np.ndarray
    lhs: float
    rhs: float
    inner: float
    mass: float
    level: float

    @property
    def ok(self) -> bool:
        return self.lhs <= self.rhs + TOL


def cheeger_sweep(g: Graph, T: int, psi: np.ndarray, heat: HeatKernel | None = None) -> SweepResult:
    """Best level set ``{psi^2 >= h}`` for the operator ``Q = P^T``.

    ``lhs = <1_S, (I-Q) 1_S>_pi / pi(S)`` is minimised over all level sets and compared
    with ``rhs = sqrt(2 <psi, (I-Q) psi>_pi / ||psi||_pi^2)``.
    """
    psi = np.asarray(psi, dtype=float)
    if psi.shape != (g.n,):
        raise GraphError("psi must be a vertex function")
    if np.any(psi < -1e-15) or np.any(psi > 1 + 1e-15):
        raise GraphError("psi must take values in [0, 1]")
    if not np.any(psi > 0):
        raise GraphError("psi is identically zero")
    heat = heat or HeatKernel(g)
    pi = g.stationary
    norm2 = _pi_dot(pi, psi, psi)
    Qpsi = heat.apply(psi, T)
    rhs = math.sqrt(max(2.0 * (norm2 - _pi_dot(pi, psi, Qpsi)) / norm2, 0.0))

    supp = np.flatnonzero(psi > 0)
    sq = psi[supp] ** 2
    order = np.argsort(-sq, kind="stable")
    supp, sq = supp[order], sq[order]
    q = heat.block(supp, supp, T) * pi[supp][:, None]
    C = np.cumsum(np.cumsum(q, axis=0), axis=1)
    inner = np.diagonal(C)
    mass = np.cumsum(pi[supp])
    ends = np.flatnonzero(np.append(sq[1:] != sq[:-1], True))
    lhs = 1.0 - inner[ends] / mass[ends]
    j = int(ends[np.argmin(lhs)])
    return SweepResult(np.sort(supp[: j + 1]), float(lhs.min()), rhs, float(inner[j]), float(mass[j]), float(sq[j]))


def smoothed_rayleigh_check(g: Graph, psi: np.ndarray, T: int, heat: HeatKernel | None = None, spec: SpectralData | None = None) -> dict:
    """Smoothed Rayleigh bound and the power inequality for ``A = P^2``.

    Checks ``<psi, (I-P^T) psi>_pi / ||psi||^2 <= 2 R_G(psi) (T+1)`` and, for
    ``psi_hat`` the ``L2(pi)``-normalised positive part of ``psi`` (projection onto
    ``lam <= 1``) and for ``psi`` itself, ``<f, P^{2T} f> >= <f, P^2 f>^T``.
    """
    from .bumps import rayleigh_quotient

    psi = np.asarray(psi, dtype=float)
    if not np.any(psi != 0):
        raise GraphError("psi is identically zero")
    if T < 1:
        raise ValueError("T must be >= 1")
    heat = heat or HeatKernel(g, spec)
    pi = g.stationary
    norm2 = _pi_dot(pi, psi, psi)
    lhs = (norm2 - _pi_dot(pi, psi, heat.apply(psi, T))) / norm2
    R = rayleigh_quotient(g, psi)
    bound = 2.0 * R * (T + 1)
    f = psi / math.sqrt(norm2)
    a2 = _pi_dot(pi, f, heat.apply(f, 2))
    a2T = _pi_dot(pi, f, heat.apply(f, 2 * T))
    out = {
        "lhs": lhs,
        "bound": bound,
        "rayleigh": R,
        "ok_ray": lhs <= bound + TOL,
        "psd_lhs": a2T,
        "psd_rhs": a2**T,
        "ok_psd": a2T + TOL >= a2**T,
    }
    if spec is not None and spec.vectors is not None and spec.complete:
        phi = spec.phi
        coef = phi.T @ (pi * psi)
        plus = phi[:, spec.eigenvalues <= 1] @ coef[spec.eigenvalues <= 1]
        if np.any(np.abs(plus) > 1e-12):
            h = plus / math.sqrt(_pi_dot(pi, plus, plus))
            b2 = _pi_dot(pi, h, heat.apply(h, 2))
            bT = _pi_dot(pi, h, heat.apply(h, T))
            b1 = _pi_dot(pi, h, heat.apply(h, 1))
            out.update(
                plus_P_T=bT,
                plus_P_1_pow_T=b1**T,
                ok_plus=bT + TOL >= b1**T and _pi_dot(pi, h, heat.apply(h, 2 * T)) + TOL >= b2**T,
            )
    return out


@dataclass
class Certificate:
    """Outcome of the bump-return certificate."""

    T: int
    epsilon: float
    beta: float
    M: int
    threshold: float
    sets: list
    sweep_ok: list
    pwdsj_ok: list
    certified: np.ndarray
    certified_mass: float
    guaranteed: float
    exact_mass: float
    violations: int
    p2T: np.ndarray = field(repr=False)
    per_set: list = field(default_factory=list, repr=False)

    @property
    def vacuous(self) -> bool:
        return self.guaranteed <= 0

    @property
    def ok(self) -> bool:
        return (
            all(self.sweep_ok)
            and all(self.pwdsj_ok)
            and self.violations == 0
            and self.certified_mass + TOL >= self.guaranteed
            and self.exact_mass + TOL >= self.guaranteed
        )

    def report(self) -> dict:
        return {
            "T": self.T,
            "epsilon": self.epsilon,
            "beta": self.beta,
            "M": self.M,
            "threshold": self.threshold,
            "n_functions": len(self.sets),
            "certified_vertices": int(len(self.certified)),
            "certified_mass": self.certified_mass,
            "guaranteed_mass": self.guaranteed,
            "exact_mass_above_threshold": self.exact_mass,
            "vacuous": self.vacuous,
            "violations": self.violations,
            "sweep_ok": all(self.sweep_ok),
            "pwdsj_ok": all(self.pwdsj_ok),
            "ok": self.ok,
        }


def bump_return_certificate(g: Graph, family, T: int, epsilon: float, beta: float, heat: HeatKernel | None = None) -> Certificate:
    """Certify large return probabilities from disjoint bumps.

    For each bump ``psi_i`` the Cheeger sweep for ``Q = P^T`` gives ``S_i`` with
    ``psi_i^{-1}(1) <= S_i <= supp psi_i``; the vertices ``x in S_i`` with
    ``p_T(x, H) >= 1/2`` (``H`` the part of ``S_i`` with ``pi <= 1/(epsilon n)``) and
    ``pi(x) >= beta/n`` are certified to satisfy ``p_{2T}(x,x) >= epsilon beta / 4M``.
    Each certified vertex is compared with the exact kernel.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if epsilon <= 0 or beta <= 0:
        raise ValueError("epsilon and beta must be positive")
    heat = heat or HeatKernel(g)
    n = g.n
    pi = g.stationary
    prof = degree_stats(g)
    M = max((len(s) for s in family.supports), default=1)
    thr = epsilon * beta / (4.0 * M)
    gamma = 1.0 / (epsilon * n)
    p2T = heat.return_probabilities(2 * T)

    sets, sweep_ok, pw_ok, per_set = [], [], [], []
    cert = np.zeros(n, dtype=bool)
    guaranteed = -2.0 * prof.pi_star(epsilon) - beta
    for i in range(len(family.supports)):
        psi = family.dense(i, n)
        psi = psi / psi.max()  # peak 1; the quotient is scale free
        R = float(family.rayleigh[i])
        sw = cheeger_sweep(g, T, psi, heat)
        S = sw.S
        core = np.flatnonzero(psi >= 1.0)
        pw = sw.inner + TOL >= max(0.0, 1 - 2 * math.sqrt(R * (T + 1))) * sw.mass
        contained = bool(np.all(np.isin(core, S)) and np.all(psi[S] > 0))
        H = S[pi[S] <= gamma]
        ind = np.zeros(n)
        ind[H] = 1.0
        hitH = heat.apply(ind, T)
        good = S[hitH[S] >= 0.5]
        # the lemma's per-vertex bound, checked exactly
        local_bad = int(np.sum(p2T[good] + TOL < pi[good] / (4 * gamma * len(S))))
        cert[good] = True
        guaranteed += max(0.0, 1 - 4 * math.sqrt(R * (T + 1))) * float(pi[core].sum())
        sets.append(S)
        sweep_ok.append(sw.ok and contained)
        pw_ok.append(bool(pw))
        per_set.append(
            {
                "size": int(len(S)),
                "mass": sw.mass,
                "lhs": sw.lhs,
                "rhs": sw.rhs,
                "good_mass": float(pi[good].sum()),
                "local_violations": local_bad,
            }
        )
    cert &= pi >= beta / n
    certified = np.flatnonzero(cert)
    violations = int(np.sum(p2T[certified] + TOL < thr)) + sum(p["local_violations"] for p in per_set)
    return Certificate(
        T=T,
        epsilon=epsilon,
        beta=beta,
        M=M,
        threshold=thr,
        sets=sets,
        sweep_ok=sweep_ok,
        pwdsj_ok=pw_ok,
        certified=certified,
        certified_mass=float(pi[certified].sum()),
        guaranteed=guaranteed,
        exact_mass=float(pi[p2T >= thr].sum()),
        violations=violations,
        p2T=p2T,
        per_set=per_set,
    )


# ----------------------------------------------------------------------
# heat-kernel embedding


def heat_embedding(g: Graph, T: int, heat: HeatKernel | None = None) -> np.ndarray:
    """Coordinates of ``Phi_T(x) = P^T 1_x / sqrt(deg x)`` in the orthonormal basis
    ``1_y / sqrt(deg y)`` of the degree-weighted space; row ``x`` is ``Phi_T(x)``.

    The table equals ``S^T`` and is symmetric; ``||Phi_T(x)||^2 = p_{2T}(x, x)``.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    heat = heat or HeatKernel(g)
    return heat.sym_power(T)


def _sqdist_rows(E: np.ndarray, x: int) -> np.ndarray:
    diff = E - E[x]
    return np.einsum("ij,ij->i", diff, diff)


def cone_set(g: Graph, T: int, x: int, heat: HeatKernel | None = None) -> np.ndarray:
    """``{y : ||Phi_T(x) - Phi_T(y)|| <= ||Phi_T(y)||}``."""
    E = heat_embedding(g, T, heat)
    norms = np.einsum("ij,ij->i", E, E)
    d2 = _sqdist_rows(E, x)
    return np.flatnonzero(d2 <= norms * (1 + 1e-12) + 1e-15)


def spreading_check(g: Graph, T: int, x: int, heat: HeatKernel | None = None) -> dict:
    """Cone size bound ``|C_T(x)| <= 4 / p_{2T}(x,x)`` and ``p_{2T}(x,x) >= p_{4T}(x,x)``."""
    heat = heat or HeatKernel(g)
    C = cone_set(g, T, x, heat)
    p2 = heat.return_probability(x, 2 * T)
    p4 = heat.return_probability(x, 4 * T)
    return {
        "cone_size": int(len(C)),
        "bound": 4.0 / p2,
        "contains_x": bool(x in C),
        "p2T": p2,
        "p4T": p4,
        "ok": bool(len(C) <= 4.0 / p2 + TOL and p2 + TOL >= p4 and x in C),
    }


def isotropic_check(g: Graph, T: int, rho: int, heat: HeatKernel | None = None) -> dict:
    """``sum_x <P^T 1_x, P^T 1_rho>^2 / deg x`` against ``||P^{2T} 1_rho||^2`` (degree-weighted).

    The left side uses the embedding table, the right side independent sparse mat-vecs.
    """
    heat = heat or HeatKernel(g)
    E = heat_embedding(g, T, heat)
    deg = g.degrees.astype(float)
    # <P^T 1_x, P^T 1_rho> = sqrt(deg x deg rho) <Phi(x), Phi(rho)>
    ip = np.sqrt(deg * deg[rho]) * (E @ E[rho])
    lhs = float(np.sum(ip**2 / deg))
    v = heat.column(rho, 2 * T)
    rhs = float(np.sum(deg * v * v))
    return {"lhs": lhs, "rhs": rhs, "error": abs(lhs - rhs), "ok": abs(lhs - rhs) <= 1e-9 * max(1.0, rhs)}


def heat_kernel_weight(g: Graph, T: int, heat: HeatKernel | None = None) -> ConformalWeight:
    """``w_T(x) = sqrt(sum_{y ~ x} ||Phi_T(x) - Phi_T(y)||^2)``."""
    E = heat_embedding(g, T, heat)
    u, v = g.edges[:, 0], g.edges[:, 1]
    diff = E[u] - E[v]
    e2 = np.einsum("ij,ij->i", diff, diff)
    acc = np.zeros(g.n)
    np.add.at(acc, u, e2)
    np.add.at(acc, v, e2)
    return ConformalWeight(np.sqrt(acc))


def edge_energy(g: Graph, T: int, heat: HeatKernel | None = None) -> float:
    """``sum_{edges} ||Phi_T(x) - Phi_T(y)||^2``."""
    E = heat_embedding(g, T, heat)
    diff = E[g.edges[:, 0]] - E[g.edges[:, 1]]
    return float(np.einsum("ij,ij->", diff, diff))


def spectral_dimension_estimate(g: Graph, x: int, T_grid, lambda1: float | None = None) -> dict:
    """Secant slopes of ``-2 log p_{2T}(x,x)`` against ``log T`` (mat-vec route).

    Returns per-pair slopes, the least-squares slope over the whole grid, and the
    relaxation time ``1/lambda_1`` when ``lambda1`` is supplied.
    """
    Ts = np.asarray(sorted(int(t) for t in T_grid))
    if len(Ts) < 2 or Ts[0] < 1:
        raise ValueError("need at least two positive times")
    g.check_vertex(x)
    pi = g.stationary
    P = g.transition()
    v = np.zeros(g.n)
    v[x] = 1.0
    p = np.empty(len(Ts))
    t = 0
    for i, T in enumerate(Ts):
        for _ in range(T - t):
            v = P @ v
        t = T
        p[i] = float(np.dot(pi, v * v) / pi[x])
    underflow = bool(np.any(p < 1e-300))
    logp = np.log(np.maximum(p, 1e-300))
    logT = np.log(Ts)
    secants = -2 * np.diff(logp) / np.diff(logT)
    fit = -2 * np.polyfit(logT, logp, 1)[0]
    out = {
        "T": Ts,
        "p2T": p,
        "secants": secants,
        "slope": float(fit),
        "underflow": underflow,
    }
    if lambda1 is not None and lambda1 > 0:
        out["relaxation_time"] = 1.0 / lambda1
        out["below_mixing"] = bool(Ts.max() < 1.0 / lambda1)
    return out
