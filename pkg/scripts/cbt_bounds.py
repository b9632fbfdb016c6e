"""Certified lower bounds on the ball-growth ratio of normalized weights on binary trees."""

import argparse
import csv
import sys
from dataclasses import dataclass

from conformal_lab.confopt import cbt_certificate
from conformal_lab.walks import loglog_slope


@dataclass
class Config:
    heights: tuple = tuple(range(4, 15))


def main(cfg: Config) -> list[dict]:
    rows = []
    for n in cfg.heights:
        c = cbt_certificate(n, enumerate_paths=False)
        rows.append({"n": n, "q_star": c.q_star, "alpha_l2_sq": c.alpha_l2_sq, "alpha_over_n2n": c.alpha_l2_sq / (n * 2.0**n)})
    return rows


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--heights", type=int, nargs="+", default=list(Config.heights))
    rows = main(Config(tuple(ap.parse_args().heights)))
    wr = csv.DictWriter(sys.stdout, fieldnames=list(rows[0]), lineterminator="\n")
    wr.writeheader()
    wr.writerows(rows)
    ns = [r["n"] for r in rows]
    print(f"# fitted exponent of q_star in n: {loglog_slope(ns, [r['q_star'] for r in rows]):.3f}", file=sys.stderr)
