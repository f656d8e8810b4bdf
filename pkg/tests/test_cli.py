"""Command-line interface: scenario runs, report artifacts, exit codes.

Everything goes through a real subprocess so argument parsing, packaged
scenario data, and process exit codes are exercised exactly as a user
would hit them.
"""

import csv
import json
import subprocess
import sys

import pytest

CLI = [sys.executable, "-m", "fkgap.cli"]


def run_cli(args, cwd):
    return subprocess.run(CLI + list(args), cwd=cwd, capture_output=True, text=True)


@pytest.fixture(scope="module")
def integer_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("integer") / "run.out"
    proc = run_cli(["run", "ai_integer_lambda20", "--out", str(out)], cwd=out.parent)
    assert proc.returncode == 0, proc.stderr
    return out


@pytest.fixture(scope="module")
def golden_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("golden") / "run.out"
    proc = run_cli(["run", "kam_golden_mean", "--out", str(out)], cwd=out.parent)
    assert proc.returncode == 0, proc.stderr
    return out


# ---------------------------------------------------------------------------
# artifacts


def test_report_structure(integer_run):
    report = json.loads((integer_run / "report.json").read_text())
    assert report["schema_version"] == 1
    assert report["kind"] == "anti_integrable"
    assert report["verdict"] == "gap_persists"
    assert report["error"] is None
    res = report["results"]
    assert res["solve"]["residual_sup"] == 0.0
    assert res["ai_bound"]["value"] == pytest.approx(0.42258898432212294, abs=1e-15)
    assert res["uniqueness"]["unique"] is True
    assert res["aubry"]["passed"] is True
    rows = res["sweeps"][0]["rows"]
    assert [r["window"] for r in rows] == [50, 100, 200]
    assert all(r["gap_ratio"] >= 0.8333 for r in rows)


def test_meta_versions(integer_run):
    meta = json.loads((integer_run / "meta.json").read_text())
    assert "elapsed_seconds" in meta
    assert meta["versions"]["package"]
    assert meta["versions"]["numpy"]
    assert meta["threads_requested"] == 1


def test_gap_csv_mirrors_report(integer_run):
    report = json.loads((integer_run / "report.json").read_text())
    with open(integer_run / "gap.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    window_rows = [r for r in rows if r["window_or_k"]]
    assert len(window_rows) == 3
    for got, want in zip(window_rows, report["results"]["sweeps"][0]["rows"]):
        # csv numbers are the repr of the json floats: exact round trip
        assert float(got["abs_min"]) == want["abs_min"]
        assert float(got["G"]) == want["gap_ratio"]
        assert float(got["bound"]) == report["results"]["sweeps"][0]["ai_bound"]


def test_gap_csv_quotient_rows(golden_run):
    report = json.loads((golden_run / "report.json").read_text())
    with open(golden_run / "gap.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    q_rows = [r for r in rows if r["quotient_q"]]
    want = report["results"]["sweeps"][0]["quotients"]
    assert [int(r["window_or_k"]) for r in q_rows] == [q["k"] for q in want]
    for got, exp in zip(q_rows, want):
        assert float(got["quotient_q"]) == exp["q"]


def test_golden_report_content(golden_run):
    report = json.loads((golden_run / "report.json").read_text())
    assert report["verdict"] == "gap_vanishes"
    res = report["results"]
    assert res["hull"]["residual_sup"] <= 1e-10
    assert res["diophantine"]["passed"] is True
    qs = {q["k"]: q["q"] for q in res["sweeps"][0]["quotients"]}
    assert qs[1600] <= qs[100] / 3.0
    assert all(q["eta_within_bound"] for q in res["sweeps"][0]["quotients"])


def test_defect_chain_keeps_gap(tmp_path):
    out = tmp_path / "defect.out"
    proc = run_cli(["run", "ai_defect_per10_lambda20", "--out", str(out)], cwd=tmp_path)
    assert proc.returncode == 0, proc.stderr
    report = json.loads((out / "report.json").read_text())
    assert report["verdict"] == "gap_persists"
    res = report["results"]
    # one address per ten sites is displaced half a spacing: the chain is
    # no longer rho-compatible but the spectral floor only dents by ~5%
    assert res["solve"]["compatible_with_rho"] is False
    assert any("rotation" in w for w in res["warnings"])
    for row in res["sweeps"][0]["rows"]:
        assert row["abs_min"] >= 16.0 * 0.95


def test_determinism_byte_identical(tmp_path):
    a = tmp_path / "a.out"
    b = tmp_path / "b.out"
    for out in (a, b):
        proc = run_cli(["run", "ai_alternating_lambda20", "--out", str(out)], cwd=tmp_path)
        assert proc.returncode == 0, proc.stderr
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()
    assert (a / "gap.csv").read_bytes() == (b / "gap.csv").read_bytes()


def test_scenario_file_path(tmp_path):
    # a scenario given as a file path works like a bundled name
    scenario = tmp_path / "tiny.toml"
    scenario.write_text(
        "\n".join(
            [
                'schema_version = 1',
                'kind = "custom_window"',
                '[interaction]',
                'type = "quadratic"',
                'dimension = 1',
                '[well]',
                'type = "cosine"',
                'dimension = 1',
                'coupling = 20.0',
                '[window]',
                'values = [0.05, 1.05, 2.05, 3.05, 4.05]',
                'left = -1.0',
                'right = 5.0',
                'rho = 1.0',
                '[solve]',
                'max_iter = 30',
            ]
        )
    )
    proc = run_cli(["run", str(scenario), "--out", str(tmp_path / "t.out")], cwd=tmp_path)
    assert proc.returncode == 0, proc.stderr
    report = json.loads((tmp_path / "t.out" / "report.json").read_text())
    assert report["kind"] == "custom_window"
    assert report["results"]["solve"]["residual_sup"] <= 1e-10


# ---------------------------------------------------------------------------
# exit codes


def test_unknown_scenario_exits_3(tmp_path):
    proc = run_cli(["run", "no_such_scenario", "--out", str(tmp_path / "x.out")], cwd=tmp_path)
    assert proc.returncode == 3
    report = json.loads((tmp_path / "x.out" / "report.json").read_text())
    assert report["error"]["code"] == "schema_error"


def test_schema_violation_exits_3(tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text('schema_version = 1\nkind = "kam"\nunknown_key = 1\n')
    proc = run_cli(["run", str(bad), "--out", str(tmp_path / "bad.out")], cwd=tmp_path)
    assert proc.returncode == 3
    assert "schema_error" in proc.stdout + proc.stderr


def test_parse_error_exits_3(tmp_path):
    bad = tmp_path / "broken.toml"
    bad.write_text("this is not toml [[[")
    proc = run_cli(["run", str(bad), "--out", str(tmp_path / "broken.out")], cwd=tmp_path)
    assert proc.returncode == 3


def test_convergence_failure_exits_2(tmp_path):
    scenario = tmp_path / "stall.toml"
    scenario.write_text(
        "\n".join(
            [
                'schema_version = 1',
                'kind = "custom_window"',
                '[interaction]',
                'type = "quadratic"',
                'dimension = 1',
                '[well]',
                'type = "cosine"',
                'dimension = 1',
                'coupling = 20.0',
                '[window]',
                'values = [0.3, 0.7, 1.2]',
                'left = 0.0',
                'right = 2.0',
                'rho = 0.5',
                '[solve]',
                'max_iter = 0',
            ]
        )
    )
    proc = run_cli(["run", str(scenario), "--out", str(tmp_path / "s.out")], cwd=tmp_path)
    assert proc.returncode == 2
    report = json.loads((tmp_path / "s.out" / "report.json").read_text())
    assert report["error"]["code"] == "convergence_error"
    assert report["error"]["residual_history"]


def test_threads_flag_accepted(tmp_path):
    proc = run_cli(
        ["run", "kam_free_chain", "--out", str(tmp_path / "t.out"), "--threads", "4"],
        cwd=tmp_path,
    )
    assert proc.returncode == 0, proc.stderr
    meta = json.loads((tmp_path / "t.out" / "meta.json").read_text())
    assert meta["threads_requested"] == 4


# ---------------------------------------------------------------------------
# auxiliary commands


def test_plotdata_series(golden_run, tmp_path):
    proc = run_cli(["plotdata", str(golden_run / "report.json"), "--out", str(tmp_path / "plot")], cwd=tmp_path)
    assert proc.returncode == 0, proc.stderr
    qk = (tmp_path / "plot" / "qk.csv").read_text().splitlines()
    assert qk[0] == "k,q_k,reference"
    assert len(qk) == 4
    k, q, ref = qk[1].split(",")
    assert int(k) == 100
    assert float(ref) == pytest.approx(2.0 / (2 * 100 + 1) ** 0.5, rel=1e-12)
    absmin = (tmp_path / "plot" / "absmin_vs_N.csv").read_text().splitlines()
    assert absmin[0] == "N,abs_min"
    assert len(absmin) == 4
    gap = (tmp_path / "plot" / "gap_vs_N.csv").read_text().splitlines()
    assert gap[0] == "N,G,bound"


def test_plotdata_missing_report_exits_3(tmp_path):
    proc = run_cli(["plotdata", str(tmp_path / "nope.json")], cwd=tmp_path)
    assert proc.returncode == 3


def test_check_aubry_output(tmp_path):
    proc = run_cli(["check-aubry", "ai_integer_lambda20"], cwd=tmp_path)
    assert proc.returncode == 0, proc.stderr
    out = proc.stdout
    assert "condition 1" in out and "condition 2" in out and "condition 3" in out
    assert "certificate: PASS" in out
    # witnesses serialize as plain numbers
    assert "np.float64" not in out


def test_check_aubry_rejects_kam_scenario(tmp_path):
    proc = run_cli(["check-aubry", "kam_golden_mean"], cwd=tmp_path)
    assert proc.returncode == 3


def test_diophantine_command(tmp_path):
    proc = run_cli(["diophantine", "kam_golden_mean"], cwd=tmp_path)
    assert proc.returncode == 0, proc.stderr
    assert "PASS" in proc.stdout


def test_console_script_help():
    proc = subprocess.run(CLI + ["--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for sub in ("run", "plotdata", "check-aubry", "diophantine"):
        assert sub in proc.stdout
