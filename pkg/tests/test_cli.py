import json
import subprocess
import sys

import numpy as np
import pytest

from conformal_lab.cli import EXIT_INVARIANT, EXIT_STATISTICAL, EXIT_USAGE, REPORT_SCHEMAS, ExperimentConfig, main
from conformal_lab.generators import grid
from conformal_lab.graph import Graph, read_graph, write_graph

TYPES = {
    "int": lambda v: isinstance(v, int) and not isinstance(v, bool),
    "float": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool) or v in ("nan", "inf", "-inf") or v is None,
    "bool": lambda v: isinstance(v, bool),
    "str": lambda v: isinstance(v, str),
    "list": lambda v: isinstance(v, list),
    "object": lambda v: isinstance(v, dict),
}


def check_fields(record, fields):
    for name, typ in fields.items():
        optional = typ.endswith("?")
        typ = typ.rstrip("?")
        if name not in record:
            assert optional, f"missing field {name}"
            continue
        assert TYPES[typ](record[name]), f"{name}: {record[name]!r} is not {typ}"
    assert set(record) <= set(fields), f"undeclared fields {set(record) - set(fields)}"


def check_report(command, body):
    schema = REPORT_SCHEMAS[command]
    check_fields(body["meta"], {"command": "str", "seed": "int", "versions": "object", "invariants_ok": "bool"})
    res = body["result"]
    if schema["shape"] == "rows":
        assert isinstance(res, list) and res
        for row in res:
            check_fields(row, schema["fields"])
    elif "variants" in schema:
        assert any(set(res) == set(v) for v in schema["variants"].values())
        for v in schema["variants"].values():
            if set(res) == set(v):
                check_fields(res, v)
    else:
        check_fields(res, schema["fields"])
    for sub in ("certificates", "per_seed", "scales"):
        if sub in schema and sub in res:
            items = res[sub].values() if isinstance(res[sub], dict) else res[sub]
            for item in items:
                check_fields(item, schema[sub]["fields"])


def cli(tmp_path, *argv):
    out = tmp_path / "report"
    code = main([*argv, "--out", str(out), "--format", "json"])
    return code, json.loads(out.read_text())


@pytest.fixture
def k3(tmp_path):
    path = tmp_path / "k3.txt"
    write_graph(Graph(3, [(0, 1), (1, 2), (0, 2)]), path)
    return path


def test_gen_binary_tree(tmp_path):
    out = tmp_path / "t.txt"
    assert main(["gen", "--kind", "binary_tree", "--h", "3", "--out", str(out)]) == 0
    g = read_graph(out)
    assert (g.n, g.m) == (15, 14)
    assert (tmp_path / "t.txt.timing.json").exists()


def test_spectrum_csv_on_k3(k3, tmp_path):
    out = tmp_path / "spec.csv"
    assert main(["spectrum", "--graph", str(k3), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "k,lambda"
    rows = [tuple(float(x) for x in ln.split(",")) for ln in lines[1:]]
    assert np.allclose(rows, [(0, 0), (1, 1.5), (2, 1.5)])
    assert "\r" not in out.read_text()


def test_certify_is_byte_identical(tmp_path):
    g = tmp_path / "grid48.txt"
    write_graph(grid(48), g)
    texts = []
    for i in range(2):
        out = tmp_path / f"c{i}.json"
        code = main(["certify", "--graph", str(g), "--R", "10", "--delta", "0.2", "--T", "16", "--seed", "7", "--out", str(out)])
        assert code == 0
        texts.append(out.read_bytes())
    assert texts[0] == texts[1]
    body = json.loads(texts[0])
    check_report("certify", body)
    # timings live in the sidecar, never in the report
    assert "seconds" in json.loads((tmp_path / "c0.json.timing.json").read_text())
    assert "seconds" not in texts[0].decode()


def test_exit_codes(tmp_path, k3, capsys):
    assert main(["spectrum"]) == EXIT_USAGE
    assert main(["spectrum", "--graph", str(tmp_path / "missing.txt")]) == EXIT_USAGE
    assert main(["nonsense"]) == EXIT_USAGE
    assert main(["resist", "--graph", str(k3), "--source", "0", "--target", "0"]) == EXIT_USAGE
    # a weight that is not 2-regulated makes the annulus check fail its precondition
    wpath = tmp_path / "w.txt"
    wpath.write_text("0.1\n0.1\n0.1\n")
    assert main(["resist", "--graph", str(k3), "--weight", str(wpath), "--R", "2"]) == EXIT_USAGE


def test_statistical_failure_exit_code(tmp_path):
    # blocks of diameter R/2 on a 16-grid never merge into a set of size K/2 at alpha 2
    code = main(["bumps", "--gen", "grid:a=16", "--R", "4", "--alpha", "2", "--out", str(tmp_path / "b.csv")])
    assert code == EXIT_STATISTICAL


def test_invariant_failure_exit_code(tmp_path, monkeypatch):
    import conformal_lab.cli as cli_mod

    monkeypatch.setitem(cli_mod.COMMANDS, "walk", lambda args: ([{"T": 1, "mean": 0.0, "stderr": 0.0, "trials": 1}], False))
    out = tmp_path / "w.csv"
    assert main(["walk", "--gen", "cycle:n=8", "--out", str(out)]) == EXIT_INVARIANT
    assert out.exists()


SMALL_RUNS = {
    "partition": ["--gen", "grid:a=12", "--tau", "4", "--trials", "20", "--alpha-trials", "10"],
    "bumps": ["--gen", "path:n=64", "--R", "8"],
    "spectrum": ["--gen", "cycle:n=9"],
    "heat": ["--gen", "cycle:n=9", "--T", "1", "2"],
    "certify": ["--gen", "grid:a=16", "--R", "4", "--T", "2", "--alpha", "2"],
    "resist": ["--gen", "cycle:n=40", "--R", "4", "8"],
    "separate": ["--gen", "grid:a=15", "--x", "112", "--r", "1", "2"],
    "barrier": ["--gen", "grid:a=16", "--r", "1", "--r-outer", "3", "--seeds", "3"],
    "subdiff": ["--gen", "cycle:n=128", "--scales", "1", "2", "--T", "4", "16", "--trials", "50", "--roots", "3"],
    "walk": ["--gen", "cycle:n=64", "--T", "4", "16", "--trials", "50"],
    "optimize": ["--gen", "binary_tree:h=4", "--R", "2", "--iterations", "3"],
    "cbt": ["--n", "2", "3"],
}


@pytest.mark.parametrize("command", sorted(SMALL_RUNS))
def test_every_report_matches_its_schema(command, tmp_path):
    code, body = cli(tmp_path, command, *SMALL_RUNS[command])
    assert code == 0
    assert body["meta"]["command"] == command and body["meta"]["invariants_ok"]
    check_report(command, body)


def test_resist_pair_report(tmp_path):
    code, body = cli(tmp_path, "resist", "--gen", "cycle:n=4", "--source", "0", "--target", "2")
    assert code == 0
    check_report("resist", body)
    assert body["result"]["R_eff"] == pytest.approx(1.0)


def test_schema_subcommand(capsys):
    assert main(["schema"]) == 0
    body = json.loads(capsys.readouterr().out)
    assert set(body["reports"]) == set(REPORT_SCHEMAS)
    assert main(["schema", "walk"]) == 0
    assert json.loads(capsys.readouterr().out)["shape"] == "rows"


def test_config_round_trip_and_run(tmp_path):
    out = tmp_path / "heat.csv"
    cfg = ExperimentConfig("heat", {"T": [1, 2], "x": 0}, {"kind": "cycle", "n": 10}, seed=3, out=str(out), format="csv")
    text = cfg.to_text()
    assert ExperimentConfig.from_text(text) == cfg
    path = tmp_path / "exp.ini"
    path.write_text(text)
    assert main(["run", str(path)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("T,p2T") and len(lines) == 3
    bad = tmp_path / "bad.ini"
    bad.write_text("[params]\nx = 1\n")
    assert main(["run", str(bad)]) == EXIT_USAGE


def test_console_script_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "conformal_lab.cli", "cbt", "--n", "2"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["result"]["certificates"][0]["n"] == 2
