"""CLI exit codes, output schemas, format stability, verify suite."""

import json
import math
import subprocess
from importlib import resources

import jsonschema
import pytest

from pushsum_rate.cli import main

SCHEMA = json.loads(
    resources.files("pushsum_rate").joinpath("schemas/output.schema.json").read_text()
)


def _validate(doc):
    jsonschema.validate(doc, SCHEMA, cls=jsonschema.Draft7Validator)


@pytest.fixture
def k3_edges(tmp_path):
    path = tmp_path / "k3.edges"
    path.write_text("0 1\n1 2\n0 2\n")
    return str(path)


@pytest.fixture
def c6_edges(tmp_path):
    path = tmp_path / "c6.edges"
    path.write_text("0 1\n1 2\n2 3\n3 4\n4 5\n0 5\n")
    return str(path)


def _run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def _k3_args(k3_edges):
    return ["--graph", k3_edges, "--mixing", "row-stochastic-regular"]


def _c6_args(c6_edges):
    return ["--graph", c6_edges, "--mixing", "row-stochastic-regular"]


def test_rate_json_schema_and_values(capsys, k3_edges):
    code, out, _ = _run(
        capsys, ["rate", *_k3_args(k3_edges), "--q", "0.2", "--r", "0.5"]
    )
    assert code == 0
    doc = json.loads(out)
    _validate(doc)
    assert doc["command"] == "rate"
    assert doc["meta"]["n"] == 3
    assert doc["xi1"] == pytest.approx(0.42, abs=2e-16)
    assert doc["gamma_half"] == pytest.approx(0.5 * math.log(0.42), rel=1e-12)
    assert doc["derivative"] == pytest.approx(-2.8, abs=1e-9)
    assert doc["warnings"] == []


def test_rate_csv_round_trips_17_digits(capsys, k3_edges):
    code, out, _ = _run(
        capsys,
        ["rate", *_k3_args(k3_edges), "--q", "0.2", "--r", "0.5",
         "--output", "csv"],
    )
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "q,xi1,gamma_half,derivative,spectral_radius"
    vals = lines[1].split(",")
    assert float(vals[0]) == 0.2
    assert float(vals[1]) == 0.41999999999999993
    assert float(vals[4]) == float(vals[1])


def test_rate_zero_q_is_exact(capsys, k3_edges):
    code, out, _ = _run(
        capsys, ["rate", *_k3_args(k3_edges), "--q", "0", "--r", "0.5"]
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["xi1"] == 1.0
    assert doc["gamma_half"] == 0.0
    assert doc["derivative"] == -3.0


def test_rate_warning_exit_code(capsys, k3_edges):
    code, out, _ = _run(
        capsys, ["rate", *_k3_args(k3_edges), "--q", "0.9", "--r", "0.5"]
    )
    assert code == 3
    doc = json.loads(out)
    _validate(doc)
    assert doc["xi1"] < 0.0
    assert any("half-log rate undefined" in w for w in doc["warnings"])


def test_missing_graph_is_validation_error(capsys):
    code, _, err = _run(capsys, ["rate", "--q", "0.2", "--r", "0.5"])
    assert code == 1
    assert "validation error" in err


def test_invalid_params_exit_one(capsys, k3_edges):
    code, _, err = _run(
        capsys, ["rate", *_k3_args(k3_edges), "--q", "0.2", "--r", "1.5"]
    )
    assert code == 1
    assert "r in (0,1)" in err


def test_missing_graph_file_is_io_error(capsys, tmp_path):
    code, _, err = _run(
        capsys,
        ["rate", "--graph", str(tmp_path / "nope.edges"), "--q", "0.2",
         "--r", "0.5"],
    )
    assert code == 2
    assert "i/o error" in err


def test_malformed_graph_reports_line(capsys, tmp_path):
    bad = tmp_path / "bad.edges"
    bad.write_text("0 1\n1 2 3\n")
    code, _, err = _run(
        capsys, ["rate", "--graph", str(bad), "--q", "0.2", "--r", "0.5"]
    )
    assert code == 2
    assert "line 2" in err


def test_config_file_supplies_and_cli_overrides(capsys, k3_edges, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# base\nq = 0.2\nr = 0.5\nmixing = row-stochastic-regular\n")
    code, out, _ = _run(
        capsys, ["rate", "--graph", k3_edges, "--config", str(cfg)]
    )
    assert code == 0
    assert json.loads(out)["params"]["q"] == 0.2
    code, out, _ = _run(
        capsys, ["rate", "--graph", k3_edges, "--config", str(cfg), "--q", "0.3"]
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["params"]["q"] == 0.3
    assert doc["params"]["r"] == 0.5


def test_config_unknown_key_reports_line(capsys, k3_edges, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("q = 0.2\nbogus = 1\n")
    code, _, err = _run(
        capsys,
        ["rate", "--graph", k3_edges, "--config", str(cfg), "--r", "0.5"],
    )
    assert code == 2
    assert "line 2" in err and "bogus" in err


def test_adjacency_format_agrees_with_edge_list(capsys, k3_edges, tmp_path):
    adj = tmp_path / "k3.adj"
    adj.write_text("3\n0 1 1\n1 0 1\n1 1 0\n")
    code, out, _ = _run(
        capsys, ["rate", *_k3_args(k3_edges), "--q", "0.2", "--r", "0.5"]
    )
    assert code == 0
    ref = json.loads(out)["xi1"]
    code, out, _ = _run(
        capsys,
        ["rate", "--graph", str(adj), "--graph-format", "adjacency",
         "--mixing", "row-stochastic-regular", "--q", "0.2", "--r", "0.5"],
    )
    assert code == 0
    assert json.loads(out)["xi1"] == ref


def test_optimize_json_schema_with_grid_check(capsys, c6_edges):
    code, out, _ = _run(
        capsys,
        ["optimize", *_c6_args(c6_edges), "--r", "0.9", "--alpha", "0.8",
         "--u", "0.25", "--verify-grid", "41"],
    )
    assert code == 0
    doc = json.loads(out)
    _validate(doc)
    assert doc["method"] == "derivative-bisection"
    assert doc["verify_grid"]["agrees"] is True
    assert doc["xi1"] <= doc["verify_grid"]["grid_min_xi1"] + 1e-6
    lo, hi = doc["certificate"]
    assert lo <= 0.0 <= hi


def test_optimize_csv_shape(capsys, c6_edges):
    code, out, _ = _run(
        capsys,
        ["optimize", *_c6_args(c6_edges), "--r", "0.9", "--alpha", "0.8",
         "--u", "0.25", "--output", "csv"],
    )
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == (
        "q_star,xi1,gamma_half,derivative,iterations,bracket_lo,"
        "bracket_hi,certificate_lo,certificate_hi,method"
    )
    vals = lines[1].split(",")
    assert vals[-1] == "derivative-bisection"
    assert 0.0 < float(vals[0]) < 1.0


def test_sweep_csv_exact_header_and_flags(capsys, c6_edges):
    code, out, _ = _run(
        capsys,
        ["sweep", *_c6_args(c6_edges), "--r", "0.4", "--alpha", "0.1",
         "--q-start", "0.05", "--q-stop", "0.2", "--q-points", "7",
         "--output", "csv"],
    )
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "q,xi1,gamma_half,derivative,convexity_flag"
    assert len(lines) == 8
    flags = [ln.split(",")[-1] for ln in lines[1:]]
    assert flags == ["", "ok", "ok", "ok", "ok", "ok", ""]
    xi = [float(ln.split(",")[1]) for ln in lines[1:]]
    assert all(a > b for a, b in zip(xi, xi[1:]))


def test_sweep_json_schema(capsys, c6_edges):
    code, out, _ = _run(
        capsys, ["sweep", *_c6_args(c6_edges), "--r", "0.4", "--alpha", "0.1"]
    )
    assert code == 0
    doc = json.loads(out)
    _validate(doc)
    assert len(doc["rows"]) == 19
    assert doc["convexity_violations"] == 0


def test_sweep_bound_warning_exit_code(capsys, k3_edges):
    # the wide default grid reaches xi1 < 0 on this instance
    code, out, _ = _run(capsys, ["sweep", *_k3_args(k3_edges), "--r", "0.5"])
    assert code == 3
    doc = json.loads(out)
    assert doc["rows"][-1]["xi1"] < 0.0


def test_simulate_json_schema(capsys, c6_edges):
    code, out, _ = _run(
        capsys,
        ["simulate", *_c6_args(c6_edges), "--protocol", "broadcast",
         "--w", "0.2", "--q", "0.4", "--runs", "3", "--steps", "200",
         "--samples", "10000", "--seed", "11"],
    )
    assert code == 0
    doc = json.loads(out)
    _validate(doc)
    assert doc["protocol"] == "broadcast"
    assert len(doc["slopes"]) == 3
    assert doc["median_slope"] < 0.0
    assert doc["margin"] == doc["bound_gamma_half"] - doc["median_slope"]


def test_simulate_csv_trajectory(capsys, c6_edges):
    code, out, _ = _run(
        capsys,
        ["simulate", *_c6_args(c6_edges), "--protocol", "broadcast",
         "--w", "0.2", "--q", "0.4", "--runs", "2", "--steps", "100",
         "--samples", "10000", "--seed", "11", "--output", "csv"],
    )
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "t,error,sum_x,sum_w,min_w"
    assert len(lines) == 102
    first = lines[1].split(",")
    last = lines[-1].split(",")
    assert first[0] == "0" and last[0] == "100"
    # column-stochastic updates conserve both sums
    assert float(first[2]) == pytest.approx(float(last[2]), rel=1e-10)
    assert float(first[3]) == pytest.approx(6.0, rel=1e-12)
    assert float(last[3]) == pytest.approx(6.0, rel=1e-10)
    assert float(last[1]) < float(first[1])


def test_simulate_requires_protocol_fields(capsys, c6_edges):
    code, _, err = _run(
        capsys, ["simulate", *_c6_args(c6_edges), "--w", "0.2", "--q", "0.4"]
    )
    assert code == 1
    assert "--protocol" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["rate", "--q", "0.2", "--r", "0.5"],
        ["optimize", "--r", "0.9", "--alpha", "0.8", "--u", "0.25"],
        ["sweep", "--r", "0.4", "--alpha", "0.1", "--q-stop", "0.3"],
        ["simulate", "--protocol", "broadcast", "--w", "0.2", "--q", "0.4",
         "--runs", "2", "--steps", "80", "--samples", "10000"],
    ],
    ids=["rate", "optimize", "sweep", "simulate"],
)
def test_reruns_are_byte_identical(capsys, c6_edges, tmp_path, argv):
    outs = []
    for name in ("a.json", "b.json"):
        path = tmp_path / name
        code, stdout, _ = _run(
            capsys,
            [argv[0], *_c6_args(c6_edges), "--seed", "7", "--out", str(path),
             *argv[1:]],
        )
        assert code == 0
        assert stdout == ""
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_out_file_contains_the_json_document(capsys, k3_edges, tmp_path):
    path = tmp_path / "rate.json"
    code, stdout, _ = _run(
        capsys,
        ["rate", *_k3_args(k3_edges), "--q", "0.2", "--r", "0.5",
         "--out", str(path)],
    )
    assert code == 0
    assert stdout == ""
    doc = json.loads(path.read_text())
    _validate(doc)
    assert doc["xi1"] == pytest.approx(0.42, abs=2e-16)


def test_verify_suite_passes(capsys):
    code, out, _ = _run(capsys, ["verify", "--seed", "5"])
    assert code == 0
    doc = json.loads(out)
    _validate(doc)
    assert doc["passed"] is True
    names = {c["name"] for c in doc["checks"]}
    for stem in (
        "companion-agreement",
        "operator-trace-equivalence",
        "phi-properties",
        "gradient-fd",
        "convexity",
        "homogeneity-probe",
    ):
        for inst in ("K3", "C6", "petersen"):
            assert f"{stem}/{inst}" in names
    assert "one-step-hand-value/K3" in names
    assert "merge-fault-injection" in names
    assert "ring120-timing" in names
    assert all(c["passed"] for c in doc["checks"])


def test_verify_csv_with_configured_instance_and_dumps(
    capsys, k3_edges, tmp_path
):
    base = tmp_path / "report"
    code, stdout, _ = _run(
        capsys,
        ["verify", *_k3_args(k3_edges), "--q", "0.2", "--r", "0.5",
         "--output", "csv", "--dump-x", "5", "--out", str(base)],
    )
    assert code == 0
    assert stdout == ""
    lines = base.read_text().strip().split("\n")
    assert lines[0] == "name,passed,detail"
    assert any(ln.startswith("configured-instance,true") for ln in lines)
    assert all(",false," not in ln for ln in lines[1:])
    for t in (0, 5, 10, 15, 20):
        dump = tmp_path / f"report.x_t{t}.txt"
        body = dump.read_text().strip().split("\n")
        assert body[0] == "3"
        assert len(body) == 4
        row = [float(v) for v in body[1].split()]
        assert len(row) == 3


def test_console_script_entry_point(k3_edges):
    proc = subprocess.run(
        ["pushsum-rate", "rate", "--graph", k3_edges, "--mixing",
         "row-stochastic-regular", "--q", "0.2", "--r", "0.5"],
        capture_output=True,
        text=True,
        timeout=60,
    )
    assert proc.returncode == 0
    doc = json.loads(proc.stdout)
    assert doc["xi1"] == pytest.approx(0.42, abs=2e-16)
