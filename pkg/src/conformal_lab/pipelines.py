"""End-to-end runs that chain partitions, bumps and certificates with shared defaults."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bumps import BumpFamily, bump_family_delocalized
from .graph import ConformalWeight, Graph, pair_table
from .partitions import ckr_sampler, measure_alpha
from .spectral import HeatKernel, bump_return_certificate, spectrum

__all__ = ["CertifyConfig", "certify_return"]


@dataclass(frozen=True)
class CertifyConfig:
    """Parameters of the partition -> bumps -> return-probability chain.

    ``K`` defaults to the largest ``|B_w(x, R)|``; ``alpha`` defaults to the value
    measured for the ball-carving sampler at ``tau = R/2`` over ``alpha_trials`` draws.
    """

    R: float
    delta: float = 0.2
    T: tuple = (16,)
    epsilon: float = 0.5
    beta: float = 0.1
    K: int | None = None
    alpha: float | None = None
    alpha_trials: int = 50
    seed: int = 0


def certify_return(g: Graph, w: ConformalWeight, cfg: CertifyConfig, heat: HeatKernel | None = None) -> dict:
    tau = cfg.R / 2
    sampler = ckr_sampler(g, w, tau)
    alpha = cfg.alpha if cfg.alpha is not None else measure_alpha(g, w, sampler, tau, cfg.alpha_trials, cfg.seed)
    K = cfg.K if cfg.K is not None else int(pair_table(g, w, cfg.R).ball_sizes().max())
    fam: BumpFamily = bump_family_delocalized(g, w, cfg.R, K, alpha, cfg.delta, cfg.seed, sampler)
    if heat is None:
        heat = HeatKernel(g, spectrum(g, want_vectors=True) if g.n <= 3000 else None)
    certs = {int(T): bump_return_certificate(g, fam, int(T), cfg.epsilon, cfg.beta, heat) for T in cfg.T}
    return {
        "R": float(cfg.R),
        "alpha": float(alpha),
        "K": int(K),
        "delta": float(cfg.delta),
        "n_functions": len(fam),
        "family": {k: (v if isinstance(v, (bool, int, float, str)) or v is None else float(v)) for k, v in fam.diagnostics.items() if np.isscalar(v) or v is None},
        "certificates": {T: c.report() for T, c in certs.items()},
        "ok": all(c.ok for c in certs.values()),
        "_objects": (fam, certs),
    }
