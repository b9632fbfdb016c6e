"""Largest lambda_k / (Delta(k)/n) over the spectrum of triangulated grids of growing size."""

import argparse
import json
from dataclasses import asdict, dataclass

from conformal_lab.generators import tri_grid
from conformal_lab.spectral import eigenvalue_degree_report, spectrum


@dataclass
class Config:
    sizes: tuple = (20, 40, 80)
    mode: str = "dense"


def main(cfg: Config) -> dict:
    rows = []
    for k in cfg.sizes:
        g = tri_grid(k)
        rep = eigenvalue_degree_report(g, spectrum(g, mode=cfg.mode))
        rows.append({"k": k, "n": g.n, "max_ratio": rep["max_ratio"], "argmax": int(rep["argmax"])})
    vals = [r["max_ratio"] for r in rows]
    return {"config": asdict(cfg), "rows": rows, "spread": max(vals) / min(vals)}


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", type=int, nargs="+", default=list(Config.sizes))
    ap.add_argument("--mode", choices=("dense", "partial", "auto"), default=Config.mode)
    a = ap.parse_args()
    print(json.dumps(main(Config(tuple(a.sizes), a.mode)), indent=2))
