"""End-to-end runs of the command-line interface."""

import json

import pytest

import freeprob.cli as cli
from freeprob.freeconv import ContinuationError


def run_json(capsys, argv):
    rc = cli.run(argv)
    out = capsys.readouterr().out
    assert rc == 0, out
    return json.loads(out)


def test_kesten_envelope(capsys):
    doc = run_json(capsys, ["kesten", "--d", "2", "--nmax", "8"])
    assert set(doc) == {"config", "result", "diagnostics"}
    assert doc["config"] == {
        "command": "kesten",
        "d": 2,
        "nmax": 8,
        "seed": 0,
        "output": "-",
        "format": "json",
    }
    assert doc["result"]["loops"] == [1, 0, 4, 0, 28, 0, 232, 0, 2092]
    assert doc["result"]["provenance"] == "exact"
    assert abs(doc["diagnostics"]["decay_base"] - 0.8639468332192504) < 1e-12


def test_cumulants_rationals_as_strings(capsys):
    doc = run_json(capsys, ["cumulants", "--moments", "1/3,2,5", "--lattice", "both"])
    assert doc["result"]["classical"] == ["1/3", "17/9", "83/27"]
    assert doc["result"]["free"] == ["1/3", "17/9", "83/27"]


def test_graph_moments_cumulants_from_file(tmp_path, capsys):
    f = tmp_path / "m.txt"
    f.write_text("1,2,8,64,1024\n")
    doc = run_json(capsys, ["cumulants", "--moments", f"@{f}", "--lattice", "both"])
    assert doc["result"]["classical"] == ["1", "1", "4", "38", "728"]
    assert doc["result"]["free"] == ["1", "1", "4", "39", "748"]


def test_freeconv_moment_route(capsys):
    doc = run_json(
        capsys,
        ["freeconv", "--law-x", "bernoulli", "--law-y", "bernoulli",
         "--route", "moments", "--order", "6"],
    )
    assert doc["result"]["moments"] == ["0", "2", "0", "6", "0", "20"]
    assert doc["result"]["moments_provenance"] == "exact"


def test_freeconv_both_routes_agree(capsys):
    doc = run_json(
        capsys,
        ["freeconv", "--law-x", "bernoulli", "--law-y", "bernoulli",
         "--route", "both", "--order", "4", "--grid-size", "128"],
    )
    assert float(doc["diagnostics"]["route_agreement"]) < 1e-5
    assert doc["diagnostics"]["continuation_residual"] < 1e-7


def test_freeconv_csv_density(capsys):
    rc = cli.run(
        ["freeconv", "--law-x", "bernoulli", "--law-y", "bernoulli",
         "--route", "analytic", "--grid-size", "64", "--format", "csv"]
    )
    out = capsys.readouterr().out
    assert rc == 0
    lines = out.splitlines()
    header = [l for l in lines if l.startswith("# ")]
    assert "# command=freeconv" in header
    assert "# grid-size=64" in header
    body = [l for l in lines if not l.startswith("#")]
    assert body[0] == "t,density"
    assert len(body) == 66  # column row + 64 grid rows + trailing moment row? no: grid only

def test_freeconv_requires_one_source_per_side(capsys):
    rc = cli.run(["freeconv", "--route", "moments", "--moments-y", "0,1"])
    assert rc == 2
    rc = cli.run(
        ["freeconv", "--law-x", "bernoulli", "--moments-x", "0,1",
         "--law-y", "bernoulli"]
    )
    assert rc == 2


def test_wick_pretty_rendering(capsys):
    doc = run_json(capsys, ["wick", "--n", "4"])
    assert doc["result"]["terms"] == [[0, 2], [2, 1]]
    assert doc["result"]["pretty"] == "2 + N^-2"
    assert doc["diagnostics"]["pairings"] == 3


def test_wick_rejects_csv_and_large_n(capsys):
    assert cli.run(["wick", "--n", "4", "--format", "csv"]) == 2
    capsys.readouterr()
    assert cli.run(["wick", "--n", "18"]) == 2


def test_weingarten_exact_value(capsys):
    doc = run_json(capsys, ["weingarten", "--perm", "2,1", "--N", "10"])
    assert doc["result"]["value"] == "-1/990"
    assert doc["result"]["value_is_exact"] is True
    assert doc["result"]["leading"] == -1


def test_weingarten_truncated_value_reports_bound(capsys):
    doc = run_json(capsys, ["weingarten", "--perm", "2,3,1", "--N", "8"])
    assert doc["result"]["value_is_exact"] is False
    assert doc["result"]["provenance"] == "quadrature"
    assert 0 < doc["diagnostics"]["error_bound"] < 1e-6


def test_polya_return_estimate(capsys):
    doc = run_json(capsys, ["polya", "--d", "3", "--nmax", "400"])
    r = doc["result"]
    assert abs(r["decay_exponent"] + 1.5) < 0.1
    assert 0.3 < r["return_probability_estimate"] < 0.36
    low_d = run_json(capsys, ["polya", "--d", "1", "--nmax", "400"])
    assert low_d["result"]["return_probability_estimate"] is None


def test_flow_ratio_table(capsys):
    doc = run_json(capsys, ["flow", "--law", "semicircle", "--z", "2i", "--h", "0.04"])
    rows = doc["result"]["rows"]
    assert len(rows) >= 2
    ratios = doc["result"]["ratios"]
    assert all(r > 3.5 for r in ratios)


def test_flow_continuation_failure_exits_three(capsys, monkeypatch):
    def boom(*a, **k):
        raise ContinuationError("ladder stalled", z=2j)

    monkeypatch.setattr(cli.freeconv, "semicircle_flow_residual", boom)
    rc = cli.run(["flow", "--law", "semicircle", "--z", "2i", "--h", "0.04"])
    assert rc == 3
    assert "ladder stalled" in capsys.readouterr().err


def test_rmt_json_run(capsys):
    doc = run_json(
        capsys,
        ["rmt", "--kind", "gue_deterministic", "--N", "24", "--trials", "12",
         "--degree", "4", "--seed", "5"],
    )
    rows = {r["label"]: r for r in doc["result"]["rows"]}
    assert rows["m2"]["predicted"] == 2
    assert rows["m4"]["predicted"] == 7
    assert doc["result"]["max_abs_z"] < 6
    assert doc["result"]["provenance"] == "monte-carlo"


def test_rmt_csv_run(capsys):
    rc = cli.run(
        ["rmt", "--kind", "gue_gue", "--N", "16", "--trials", "6", "--degree", "2",
         "--format", "csv"]
    )
    out = capsys.readouterr().out
    assert rc == 0
    body = [l for l in out.splitlines() if not l.startswith("#")]
    assert body[0] == "label,empirical,stderr,predicted,z"
    assert [row.split(",")[0] for row in body[1:]] == ["xx", "xy", "yx", "yy"]


def test_rmt_workers_do_not_change_numbers(capsys):
    base = ["rmt", "--kind", "gue_gue", "--N", "20", "--trials", "8", "--degree", "2"]
    one = run_json(capsys, base + ["--workers", "1"])
    four = run_json(capsys, base + ["--workers", "4"])
    assert one["result"] == four["result"]


def test_same_argv_is_byte_identical(capsys):
    argv = ["rmt", "--kind", "rotated_diagonal", "--N", "20", "--trials", "6",
            "--degree", "4", "--seed", "9"]
    assert cli.run(argv) == 0
    first = capsys.readouterr().out
    assert cli.run(argv) == 0
    second = capsys.readouterr().out
    assert first == second


def test_seed_precedence_env_config_flag(tmp_path, capsys, monkeypatch):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("seed=7\n")
    monkeypatch.setenv("FREEPROB_SEED", "42")
    doc = run_json(capsys, ["kesten", "--d", "2", "--nmax", "4"])
    assert doc["config"]["seed"] == 42
    doc = run_json(capsys, ["kesten", "--d", "2", "--nmax", "4", "--config", str(cfg)])
    assert doc["config"]["seed"] == 7
    doc = run_json(
        capsys,
        ["kesten", "--d", "2", "--nmax", "4", "--config", str(cfg), "--seed", "3"],
    )
    assert doc["config"]["seed"] == 3


def test_malformed_seed_env_is_a_usage_error(capsys, monkeypatch):
    monkeypatch.setenv("FREEPROB_SEED", "notanint")
    assert cli.run(["kesten", "--d", "2", "--nmax", "4"]) == 2


def test_output_file(tmp_path, capsys):
    dest = tmp_path / "out.json"
    rc = cli.run(["kesten", "--d", "2", "--nmax", "4", "--output", str(dest)])
    assert rc == 0
    doc = json.loads(dest.read_text())
    assert doc["result"]["loops"] == [1, 0, 4, 0, 28]


def test_floats_carry_seventeen_digits(capsys):
    rc = cli.run(["kesten", "--d", "2", "--nmax", "4"])
    out = capsys.readouterr().out
    assert rc == 0
    assert "0.86394683321925037" in out


def test_usage_errors(capsys):
    assert cli.run([]) == 2
    assert cli.run(["eigenvalues"]) == 2
    assert cli.run(["kesten", "--d", "2"]) == 2  # missing --nmax
    assert cli.run(["kesten", "--d", "0", "--nmax", "4"]) == 2  # bad value
    assert cli.run(["polya", "--d", "1", "--nmax", "50"]) == 2  # below floor
