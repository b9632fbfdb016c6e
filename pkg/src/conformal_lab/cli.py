"""Command-line harness: ``conformal-lab <subcommand> [options]``.

Every subcommand reads a graph (``--graph FILE`` or ``--gen kind:key=value,...``),
an optional weight (``--weight FILE``, default all ones) and a seed, and writes one
report (``--format csv`` or ``json``) to ``--out`` or stdout.  Reports are a pure
function of the inputs; wall-clock timings go to a ``<out>.timing.json`` sidecar.

Exit codes: 0 success, 2 bad usage or input, 3 an invariant check failed,
4 a randomized construction found no admissible sample.
``conformal-lab schema [subcommand]`` prints the field layout of each report.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .bumps import StatisticalFailure
from .graph import ConformalWeight, GraphError, read_graph, read_weight, write_weight
from .generators import KINDS, GeneratorSpec, generate

__all__ = ["ExperimentConfig", "REPORT_SCHEMAS", "build_parser", "main", "run", "EXIT_OK", "EXIT_USAGE", "EXIT_INVARIANT", "EXIT_STATISTICAL"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INVARIANT = 3
EXIT_STATISTICAL = 4


# ----------------------------------------------------------------------
# config files


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


@dataclass
class ExperimentConfig:
    """One experiment: subcommand, optional generator, parameters, seed and output.

    On disk it is an INI file::

        [experiment]
        kind = certify
        seed = 7
        out = report.json
        format = json

        [generator]
        kind = tri_grid
        k = 48

        [params]
        R = 64
        T = [16, 64]
    """

    kind: str
    params: dict = field(default_factory=dict)
    generator: dict | None = None
    seed: int = 0
    out: str | None = None
    format: str | None = None

    def to_text(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        exp = {"kind": self.kind, "seed": json.dumps(self.seed)}
        if self.out is not None:
            exp["out"] = self.out
        if self.format is not None:
            exp["format"] = self.format
        cp["experiment"] = exp
        if self.generator is not None:
            cp["generator"] = {k: (v if k == "kind" else json.dumps(v)) for k, v in self.generator.items()}
        cp["params"] = {k: json.dumps(v) for k, v in self.params.items()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        cp.read_string(text)
        exp = cp["experiment"]
        gen = None
        if cp.has_section("generator"):
            gen = {k: (v if k == "kind" else _parse_value(v)) for k, v in cp["generator"].items()}
        params = {k: _parse_value(v) for k, v in cp["params"].items()} if cp.has_section("params") else {}
        return cls(
            kind=exp["kind"],
            params=params,
            generator=gen,
            seed=int(_parse_value(exp.get("seed", "0"))),
            out=exp.get("out"),
            format=exp.get("format"),
        )

    def to_argv(self) -> list[str]:
        argv = [self.kind, "--seed", str(self.seed)]
        if self.generator is not None:
            g = dict(self.generator)
            kind = g.pop("kind")
            argv += ["--gen", kind + (":" + ",".join(f"{k}={json.dumps(v)}" for k, v in g.items()) if g else "")]
        if self.out is not None:
            argv += ["--out", self.out]
        if self.format is not None:
            argv += ["--format", self.format]
        for k, v in self.params.items():
            flag = "--" + k.replace("_", "-")
            if isinstance(v, bool):
                if v:
                    argv.append(flag)
            elif isinstance(v, list):
                argv += [flag] + [str(x) for x in v]
            else:
                argv += [flag, str(v)]
        return argv


def run(config: ExperimentConfig) -> int:
    return main(config.to_argv())


# ----------------------------------------------------------------------
# shared inputs


def _parse_gen(text: str) -> GeneratorSpec:
    kind, _, rest = text.partition(":")
    params = {}
    for item in filter(None, rest.split(",")):
        k, _, v = item.partition("=")
        params[k.strip()] = _parse_value(v.strip())
    return GeneratorSpec(kind.strip(), params)


def _load(args):
    if args.gen is not None:
        spec = _parse_gen(args.gen)
        spec = GeneratorSpec(spec.kind, spec.params, seed=args.seed)
        g = generate(spec)
    elif args.graph is not None:
        g = read_graph(args.graph)
    else:
        raise GraphError("one of --graph or --gen is required")
    w = read_weight(args.weight, g.n) if getattr(args, "weight", None) else ConformalWeight.uniform(g.n)
    return g, w


def _common(p: argparse.ArgumentParser, graph: bool = True) -> None:
    if graph:
        p.add_argument("--graph", help="graph file ('n m' header, then 'u v' lines)")
        p.add_argument("--gen", help="inline generator, e.g. tri_grid:k=48")
        p.add_argument("--weight", help="weight file, one value per line")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--threads", type=int, default=None, help="cap on BLAS threads")


# ----------------------------------------------------------------------
# subcommands; each returns (payload, ok) where payload is rows or a dict


def cmd_gen(args):
    params = {}
    for key in ("a", "b", "k", "n", "h", "L", "depth", "alpha", "L_max"):
        v = getattr(args, key)
        if v is not None:
            params[key] = v
    if args.torus:
        params["torus"] = True
    if args.d is not None:
        params["d"] = [float(x) for x in args.d]
    g = generate(GeneratorSpec(args.kind, params, seed=args.seed))
    return ("graph", g), True


def cmd_partition(args):
    from .partitions import boost_sampler, ckr_sampler, exp_sampler, measure_alpha, padding_profile

    g, w = _load(args)
    tau = args.tau
    base = exp_sampler(g, w, tau / 2) if args.method in ("exp", "boost-exp") else ckr_sampler(g, w, tau)
    alpha = args.alpha if args.alpha is not None else measure_alpha(g, w, base, tau, args.alpha_trials, args.seed)
    sampler = boost_sampler(g, w, base, tau, alpha) if args.method.startswith("boost") else base
    first = sampler(args.seed)
    ok = bool(first.diameters_ok(g, w))
    prof = padding_profile(g, w, sampler, tau, alpha, args.deltas, args.trials, args.seed)
    rows = [
        {"delta": float(d), "empirical_pad": float(m), "stderr": float(s), "min_vertex_pad": float(v), "alpha": float(alpha), "tau": float(tau)}
        for d, m, s, v in zip(prof.delta_grid, prof.empirical_pad, prof.stderr, prof.min_vertex_pad)
    ]
    return rows, ok


def cmd_bumps(args):
    from .bumps import bump_family_delocalized, bump_family_easy
    from .graph import pair_table
    from .partitions import ckr_sampler, measure_alpha

    g, w = _load(args)
    sampler = ckr_sampler(g, w, args.R / 2)
    alpha = args.alpha if args.alpha is not None else measure_alpha(g, w, sampler, args.R / 2, args.alpha_trials, args.seed)
    K = args.K if args.K is not None else int(pair_table(g, w, args.R).ball_sizes().max())
    if args.delta is None:
        fam = bump_family_easy(g, w, args.R, K, alpha, args.seed, sampler)
    else:
        fam = bump_family_delocalized(g, w, args.R, K, alpha, args.delta, args.seed, sampler)
    ok = fam.disjoint() and bool(np.allclose(fam.recompute_rayleigh(g), fam.rayleigh, rtol=1e-12, atol=1e-12))
    return fam.rows(g), ok


def cmd_spectrum(args):
    from .spectral import spectrum

    g, _ = _load(args)
    spec = spectrum(g, mode=args.mode)
    chk = spec.check()
    rows = [{"k": int(k), "lambda": float(v)} for k, v in enumerate(spec.eigenvalues)]
    return rows, bool(chk["ok_range"] and chk.get("ok_trace", True))


def cmd_heat(args):
    from .spectral import HeatKernel, diag_trace, spectrum

    g, _ = _load(args)
    x = g.check_vertex(args.x)
    spec = spectrum(g, want_vectors=True) if g.n <= 3000 else None
    heat = HeatKernel(g, spec)
    rows, ok = [], True
    for T in args.T:
        p = heat.return_probability(x, 2 * T)
        row = {"T": int(T), "p2T": float(p)}
        if g.n <= 3000:
            tr = diag_trace(g, 2 * T, spec)
            row["trace_over_n"] = tr["trace_over_n"]
            ok = ok and bool(tr["ok"])
        rows.append(row)
    return rows, ok


def cmd_certify(args):
    from .pipelines import CertifyConfig, certify_return

    g, w = _load(args)
    cfg = CertifyConfig(R=args.R, delta=args.delta, T=tuple(args.T), epsilon=args.epsilon, beta=args.beta, K=args.K, alpha=args.alpha, alpha_trials=args.alpha_trials, seed=args.seed)
    rep = certify_return(g, w, cfg)
    rep.pop("_objects")
    rep["certificates"] = {str(k): v for k, v in rep["certificates"].items()}
    return rep, rep["ok"]


def cmd_resist(args):
    from .resistance import annulus_test_function, effective_resistance, regulate

    g, w = _load(args)
    if args.source is not None:
        if args.target is None:
            raise GraphError("--target is required with --source")
        q = effective_resistance(g, args.source, args.target)
        return {"source": q.source.tolist(), "target": q.target.tolist(), "R_eff": q.value}, True
    if args.regulate:
        w = regulate(g, w.normalize(), g.d_max)
        C = math.sqrt(2 * g.d_max)
    else:
        C = args.C
    rows = []
    ok = True
    for R in args.R:
        c = annulus_test_function(g, w, g.check_vertex(args.x), R, C)
        rep = c.report()
        rows.append(rep)
        ok = ok and c.ok
    return {"x": args.x, "C": C, "scales": rows}, ok


def cmd_separate(args):
    from .graph import graph_distance
    from .separators import min_vertex_cut_annulus, separates

    g, _ = _load(args)
    rows, ok = [], True
    for r in args.r:
        ro = args.r_outer if args.r_outer is not None else args.factor * r
        res = min_vertex_cut_annulus(g, args.x, r, ro)
        d = graph_distance(g, args.x)
        good = separates(g, res.cut, np.flatnonzero(d <= r), np.flatnonzero(d > ro))
        ok = ok and good
        rows.append({"r": float(r), "r_outer": float(ro), "kappa": res.kappa, "q": res.q})
    return rows, ok


def cmd_barrier(args):
    from .separators import barrier

    g, _ = _load(args)
    seeds = [args.seed + i for i in range(args.seeds)]
    rows = []
    for s in seeds:
        b = barrier(g, args.r, args.r_outer, s)
        rows.append({"seed": s, "density": b.density, "q_mean": b.q_mean, "components": b.n_components, "max_component_diameter": b.max_component_diameter, "diameter_ok": b.diameter_ok})
    dens = np.array([r["density"] for r in rows])
    q = rows[0]["q_mean"]
    se = float(dens.std(ddof=1) / math.sqrt(len(dens))) if len(dens) > 1 else 0.0
    rep = {
        "r": args.r,
        "r_outer": args.r_outer,
        "seeds": len(seeds),
        "mean_density": float(dens.mean()),
        "stderr": se,
        "mean_q": q,
        "density_within_q": bool(dens.mean() <= q + 3 * se),
        "all_diameters_ok": all(r["diameter_ok"] for r in rows),
        "per_seed": rows,
    }
    return rep, rep["all_diameters_ok"]


def cmd_subdiff(args):
    from .separators import subdiffusivity_experiment

    g, _ = _load(args)
    rep = subdiffusivity_experiment(g, args.scales, args.T, args.trials, args.seed, outer_factor=args.factor, roots=args.roots)
    return rep, all(rep["barrier_diameter_ok"])


def cmd_walk(args):
    from .walks import speed_profile

    g, w = _load(args)
    start = args.start if args.start in ("uniform", "stationary") else int(args.start)
    rows = speed_profile(g, args.T, args.trials, args.seed, start=start, w=w if args.weight else None)
    return [{"T": r["T"], "mean": r["mean"], "stderr": r["stderr"], "trials": r["trials"]} for r in rows], True


def cmd_optimize(args):
    from .confopt import optimize_weight

    g, _ = _load(args)
    w, obj, info = optimize_weight(g, args.R, args.iterations, args.seed)
    if args.weight_out:
        write_weight(w, args.weight_out)
    rep = {"R": obj.R, "objective": obj.value, "vertex": obj.vertex, "baseline": info["baseline"], "accepted": info["accepted"], "l2_norm": w.l2_norm}
    return rep, bool(w.normalized and obj.value <= info["baseline"])


def cmd_cbt(args):
    from .confopt import cbt_certificate

    rows = []
    for n in args.n:
        c = cbt_certificate(n)
        rows.append({"n": n, "alpha_l2_sq": c.alpha_l2_sq, "n_2n": n * 2.0**n, "q_star": c.q_star})
    return {"certificates": rows}, True


COMMANDS = {
    "gen": cmd_gen,
    "partition": cmd_partition,
    "bumps": cmd_bumps,
    "spectrum": cmd_spectrum,
    "heat": cmd_heat,
    "certify": cmd_certify,
    "resist": cmd_resist,
    "separate": cmd_separate,
    "barrier": cmd_barrier,
    "subdiff": cmd_subdiff,
    "walk": cmd_walk,
    "optimize": cmd_optimize,
    "cbt": cmd_cbt,
}

DEFAULT_FORMAT = {"gen": "txt", "certify": "json", "resist": "json", "barrier": "json", "subdiff": "json", "optimize": "json", "cbt": "json"}

# Report layout per subcommand.  "rows" reports are a list of records (one CSV line
# each); "object" reports are a single record.  JSON output wraps either as
# {"meta": {...}, "result": ...}.  Field types: int, float, bool, str, list, object;
# a trailing "?" marks a field that may be absent.
_CERT_FIELDS = {
    "T": "int", "epsilon": "float", "beta": "float", "M": "int", "threshold": "float",
    "n_functions": "int", "certified_vertices": "int", "certified_mass": "float",
    "guaranteed_mass": "float", "exact_mass_above_threshold": "float", "vacuous": "bool",
    "violations": "int", "sweep_ok": "bool", "pwdsj_ok": "bool", "ok": "bool",
}
_ANNULUS_FIELDS = {
    "x": "int", "R": "float", "C": "float", "energy": "float", "energy_bound": "float",
    "area": "float", "bound": "float", "dual": "float", "exact": "float", "ratio": "float",
    "degenerate": "bool", "reason": "str", "ok": "bool",
}
REPORT_SCHEMAS = {
    "gen": {"shape": "graph", "format": "txt", "description": "'n m' header, then one 'u v' line per edge"},
    "partition": {"shape": "rows", "fields": {"delta": "float", "empirical_pad": "float", "stderr": "float", "min_vertex_pad": "float", "alpha": "float", "tau": "float"}},
    "bumps": {"shape": "rows", "fields": {"index": "int", "support_size": "int", "core_size": "int", "core_mass": "float", "support_mass": "float", "rayleigh": "float"}},
    "spectrum": {"shape": "rows", "fields": {"k": "int", "lambda": "float"}},
    "heat": {"shape": "rows", "fields": {"T": "int", "p2T": "float", "trace_over_n": "float?"}},
    "certify": {
        "shape": "object",
        "fields": {"R": "float", "alpha": "float", "K": "int", "delta": "float", "n_functions": "int", "family": "object", "certificates": "object", "ok": "bool"},
        "certificates": {"keyed_by": "T", "fields": _CERT_FIELDS},
    },
    "resist": {
        "shape": "object",
        "variants": {
            "pair": {"source": "list", "target": "list", "R_eff": "float"},
            "annulus": {"x": "int", "C": "float", "scales": "list"},
        },
        "scales": {"fields": _ANNULUS_FIELDS},
    },
    "separate": {"shape": "rows", "fields": {"r": "float", "r_outer": "float", "kappa": "int", "q": "float"}},
    "barrier": {
        "shape": "object",
        "fields": {"r": "float", "r_outer": "float", "seeds": "int", "mean_density": "float", "stderr": "float", "mean_q": "float", "density_within_q": "bool", "all_diameters_ok": "bool", "per_seed": "list"},
        "per_seed": {"fields": {"seed": "int", "density": "float", "q_mean": "float", "components": "int", "max_component_diameter": "float", "diameter_ok": "bool"}},
    },
    "subdiff": {
        "shape": "object",
        "fields": {
            "radii": "list", "mean_ball": "list", "mean_kappa": "list", "growth_exponent": "float",
            "separator_exponent": "float", "predicted_speed_exponent": "float", "barrier_density": "list",
            "barrier_q": "list", "barrier_diameter_ok": "list", "speed": "list", "speed_exponent": "float", "conformal": "list?",
        },
    },
    "walk": {"shape": "rows", "fields": {"T": "int", "mean": "float", "stderr": "float", "trials": "int"}},
    "optimize": {"shape": "object", "fields": {"R": "float", "objective": "float", "vertex": "int", "baseline": "float", "accepted": "int", "l2_norm": "float"}},
    "cbt": {
        "shape": "object",
        "fields": {"certificates": "list"},
        "certificates": {"fields": {"n": "int", "alpha_l2_sq": "float", "n_2n": "float", "q_star": "float"}},
    },
}
META_FIELDS = {"command": "str", "seed": "int", "versions": "object", "invariants_ok": "bool"}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="conformal-lab", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a graph file")
    _common(p, graph=False)
    p.add_argument("--kind", required=True, choices=KINDS)
    for key, typ in (("a", int), ("b", int), ("k", int), ("n", int), ("h", int), ("L", int), ("depth", int), ("alpha", float)):
        p.add_argument(f"--{key}", type=typ)
    p.add_argument("--L-max", dest="L_max", type=int)
    p.add_argument("--torus", action="store_true")
    p.add_argument("--d", nargs="+", help="d_{2^k} table for transient_tree")

    p = sub.add_parser("partition", help="padding profile of a random partition")
    _common(p)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--alpha", type=float)
    p.add_argument("--alpha-trials", type=int, default=50)
    p.add_argument("--method", choices=("ckr", "exp", "boost", "boost-exp"), default="ckr")
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--deltas", type=float, nargs="+", default=[0.1, 0.25, 0.5])

    p = sub.add_parser("bumps", help="bump family (easy, or delocalized with --delta)")
    _common(p)
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--K", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--alpha-trials", type=int, default=50)
    p.add_argument("--delta", type=float)

    p = sub.add_parser("spectrum", help="normalized Laplacian eigenvalues")
    _common(p)
    p.add_argument("--mode", choices=("auto", "dense", "partial"), default="auto")

    p = sub.add_parser("heat", help="return probabilities p_2T(x,x)")
    _common(p)
    p.add_argument("--x", type=int, default=0)
    p.add_argument("--T", type=int, nargs="+", default=[1, 2, 4, 8, 16])

    p = sub.add_parser("certify", help="bump-based return-probability certificate")
    _common(p)
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--delta", type=float, default=0.2)
    p.add_argument("--T", type=int, nargs="+", default=[16])
    p.add_argument("--epsilon", type=float, default=0.5)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--K", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--alpha-trials", type=int, default=50)

    p = sub.add_parser("resist", help="effective resistance or annulus certificates")
    _common(p)
    p.add_argument("--source", type=int, nargs="+")
    p.add_argument("--target", type=int, nargs="+")
    p.add_argument("--x", type=int, default=0)
    p.add_argument("--R", type=float, nargs="+", default=[8.0])
    p.add_argument("--C", type=float, default=2.0)
    p.add_argument("--regulate", action="store_true")

    p = sub.add_parser("separate", help="minimum annulus vertex separators")
    _common(p)
    p.add_argument("--x", type=int, default=0)
    p.add_argument("--r", type=float, nargs="+", required=True)
    p.add_argument("--r-outer", type=float)
    p.add_argument("--factor", type=float, default=3.0)

    p = sub.add_parser("barrier", help="random barrier sets over several seeds")
    _common(p)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--r-outer", type=float, required=True)
    p.add_argument("--seeds", type=int, default=10)

    p = sub.add_parser("subdiff", help="barrier metrics and walk speed")
    _common(p)
    p.add_argument("--scales", type=int, nargs="+", default=[1, 2, 3])
    p.add_argument("--T", type=int, nargs="+", default=[16, 64, 256])
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--factor", type=float, default=3.0)
    p.add_argument("--roots", type=int, default=8)

    p = sub.add_parser("walk", help="mean displacement of the random walk")
    _common(p)
    p.add_argument("--T", type=int, nargs="+", default=[16, 64, 256])
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--start", default="uniform")

    p = sub.add_parser("optimize", help="search for a weight with small balls")
    _common(p)
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--iterations", type=int, default=50)
    p.add_argument("--weight-out")

    p = sub.add_parser("cbt", help="binary-tree growth certificates")
    _common(p, graph=False)
    p.add_argument("--n", type=int, nargs="+", default=[4, 6, 8, 10, 12])

    p = sub.add_parser("run", help="run an experiment config file")
    p.add_argument("config")

    p = sub.add_parser("schema", help="print the report schema of a subcommand as JSON")
    p.add_argument("name", nargs="?", choices=sorted(REPORT_SCHEMAS), help="subcommand (default: all)")
    return ap


# ----------------------------------------------------------------------
# output


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def _render(command: str, payload, fmt: str, meta: dict) -> str:
    if isinstance(payload, tuple) and payload[0] == "graph":
        buf = io.StringIO()
        g = payload[1]
        buf.write(f"{g.n} {g.m}\n")
        for u, v in g.edges:
            buf.write(f"{u} {v}\n")
        return buf.getvalue()
    if fmt == "json":
        body = {"meta": meta, "result": payload}
        return json.dumps(_jsonable(body), indent=2, sort_keys=True) + "\n"
    rows = payload if isinstance(payload, list) else [payload]
    rows = [_jsonable(r) for r in rows]
    keys = []
    for r in rows:
        for k in r:
            if k not in keys:
                keys.append(k)
    buf = io.StringIO()
    wr = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n", extrasaction="ignore")
    wr.writeheader()
    for r in rows:
        wr.writerow({k: (json.dumps(v) if isinstance(v, (list, dict)) else v) for k, v in r.items()})
    return buf.getvalue()


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    if args.command == "run":
        try:
            cfg = ExperimentConfig.from_text(Path(args.config).read_text())
        except (OSError, KeyError, configparser.Error) as exc:
            print(f"conformal-lab: bad config: {exc}", file=sys.stderr)
            return EXIT_USAGE
        return run(cfg)
    if args.command == "schema":
        body = {"meta": META_FIELDS, "reports": REPORT_SCHEMAS} if args.name is None else REPORT_SCHEMAS[args.name]
        sys.stdout.write(json.dumps(body, indent=2, sort_keys=True) + "\n")
        return EXIT_OK
    ctx = None
    if args.threads:
        from threadpoolctl import threadpool_limits

        ctx = threadpool_limits(limits=args.threads)
    t0 = time.perf_counter()
    try:
        payload, ok = COMMANDS[args.command](args)
    except StatisticalFailure as exc:
        print(f"conformal-lab {args.command}: {exc}", file=sys.stderr)
        return EXIT_STATISTICAL
    except (GraphError, ValueError, OSError) as exc:
        print(f"conformal-lab {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    finally:
        if ctx is not None:
            ctx.unregister()
    elapsed = time.perf_counter() - t0
    fmt = args.format or DEFAULT_FORMAT.get(args.command, "csv")
    meta = {
        "command": args.command,
        "seed": args.seed,
        "versions": {"conformal_lab": __version__, "numpy": np.__version__, "scipy": scipy.__version__},
        "invariants_ok": bool(ok),
    }
    text = _render(args.command, payload, fmt, meta)
    if args.out:
        Path(args.out).write_text(text)
        Path(str(args.out) + ".timing.json").write_text(json.dumps({"command": args.command, "seconds": elapsed}) + "\n")
    else:
        sys.stdout.write(text)
    if not ok:
        print(f"conformal-lab {args.command}: invariant check failed", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
