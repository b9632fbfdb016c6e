"""Walk displacement on the cycle and the grid, and the conformal diffusive ratio
E dist_w(X_0, X_T)^2 / (T (log T)^2) for i.i.d. normalized weights of several laws."""

import argparse
import json
from dataclasses import asdict, dataclass

import numpy as np

from conformal_lab.generators import cycle, grid
from conformal_lab.graph import ConformalWeight
from conformal_lab.rng import derive_rng
from conformal_lab.walks import conformal_diffusive_ratio, loglog_slope, speed_profile

LAWS = {
    "uniform": lambda rng, n: rng.uniform(0.5, 1.5, n),
    "exponential": lambda rng, n: rng.exponential(1.0, n),
    "lognormal": lambda rng, n: rng.lognormal(0.0, 1.0, n),
}


@dataclass
class Config:
    cycle_n: int = 4096
    torus: int = 256
    T_grid: tuple = (64, 256, 1024)
    trials: int = 2000
    laws: tuple = ("uniform", "exponential", "lognormal")
    seed: int = 8


def main(cfg: Config) -> dict:
    out = {"config": asdict(cfg)}
    rows = speed_profile(cycle(cfg.cycle_n), cfg.T_grid, cfg.trials, cfg.seed, start=0)
    out["cycle_slope"] = loglog_slope(cfg.T_grid, [r["mean"] for r in rows])
    g = grid(cfg.torus, torus=True)
    out["ratios"] = {}
    for law in cfg.laws:
        w = ConformalWeight(LAWS[law](derive_rng(cfg.seed, "omega", law), g.n)).normalize()
        r = [row["ratio"] for row in conformal_diffusive_ratio(g, w, cfg.T_grid, cfg.trials, cfg.seed)]
        out["ratios"][law] = {"values": r, "spread": float(np.max(r) / np.min(r))}
    return out


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=Config.trials)
    ap.add_argument("--laws", nargs="+", choices=sorted(LAWS), default=list(Config.laws))
    ap.add_argument("--seed", type=int, default=Config.seed)
    a = ap.parse_args()
    print(json.dumps(main(Config(trials=a.trials, laws=tuple(a.laws), seed=a.seed)), indent=2))
