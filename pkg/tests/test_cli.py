import json
import logging
import math

import pytest
from click.testing import CliRunner

from app.core.config import Config
from app.core.procedures import UCP
from app.services.output_service import OutputService
from cli.main import EXIT_ASSUMPTIONS, EXIT_DOMAIN, EXIT_OK, _log_level, main


@pytest.fixture
def runner():
    return CliRunner()


def json_document(output):
    return json.loads(output[output.index("{"):])


def test_list(runner):
    result = runner.invoke(main, ["list"])
    assert result.exit_code == EXIT_OK
    lines = result.output.splitlines()
    assert "dorfman c=2 N(n)=n" in lines
    assert "a2 c=3 N(n)=n^2" in lines
    assert "halving N(n)=2^n" in lines


def test_check_ok(runner):
    result = runner.invoke(main, ["check", "dorfman"])
    assert result.exit_code == EXIT_OK
    document = json_document(result.output)
    assert document["m0"]["pass"] is True
    assert document["m3"]["interior_argmin_n"] == pytest.approx(2.888, abs=0.005)
    assert OutputService.schema_violations(document, "AssumptionReport") == []


def test_check_violation_still_emits_report(runner):
    result = runner.invoke(main, ["check", "pt"])
    assert result.exit_code == EXIT_ASSUMPTIONS
    document = json_document(result.output)
    assert document["m3"]["pass"] is False
    assert OutputService.schema_violations(document, "AssumptionReport") == []


def test_unknown_procedure_is_a_usage_error(runner):
    result = runner.invoke(main, ["ocp", "triangle"])
    assert result.exit_code == EXIT_DOMAIN
    assert "unknown procedure" in result.output


def test_curve_dorfman(runner, tmp_path):
    out = tmp_path / "dorfman.csv"
    result = runner.invoke(main, ["curve", "dorfman", "--n-lo", "2.01", "--n-hi", "60", "--steps", "256", "--out", str(out)])
    assert result.exit_code == EXIT_OK
    points = OutputService.read_curve_csv(out)
    assert len(points) == 256
    assert max(pt.p_n for pt in points) == pytest.approx(0.3078, abs=1e-4)


def test_curve_a2_with_svg(runner, tmp_path):
    out = tmp_path / "a2.csv"
    svg = tmp_path / "a2.svg"
    result = runner.invoke(main, ["curve", "a2", "--n-lo", "3.01", "--out", str(out), "--svg", str(svg)])
    assert result.exit_code == EXIT_OK
    points = OutputService.read_curve_csv(out)
    top = max(points, key=lambda pt: pt.p_n)
    assert top.p_n == pytest.approx(0.252, abs=1e-3)
    assert top.n == pytest.approx(4.454, abs=0.1)
    assert svg.exists()


def test_curve_extended(runner, tmp_path):
    out = tmp_path / "a2_ext.csv"
    result = runner.invoke(main, ["curve", "a2", "--extended", "--n-lo", "0.2", "--n-hi", "20", "--steps", "80", "--out", str(out)])
    assert result.exit_code == EXIT_OK
    points = OutputService.read_curve_csv(out)
    assert points
    assert all(0.0 < pt.p_n <= UCP for pt in points)


def test_curve_domain_error(runner, tmp_path):
    result = runner.invoke(main, ["curve", "dorfman", "--n-lo", "1", "--out", str(tmp_path / "x.csv")])
    assert result.exit_code == EXIT_DOMAIN


def test_ocp_dorfman_json(runner, tmp_path):
    out = tmp_path / "dorfman.json"
    result = runner.invoke(main, ["ocp", "dorfman", "--discrete", "--json", "--out", str(out)])
    assert result.exit_code == EXIT_OK
    report = json.loads(out.read_text(encoding="utf-8"))
    assert report["status"] == "ok"
    assert report["bifurcation_type"] == "b2"
    assert report["cocp"] == pytest.approx(1 - math.exp(-1 / math.e), abs=1e-9)
    assert report["docp"] == pytest.approx(1 - 3 ** (-1 / 3), abs=1e-10)
    assert report["docp_achieving_n"] == 3
    assert report["docp_bruteforce_n"] == 3
    assert report["docp"] <= report["cocp"] <= report["ucp"]
    assert OutputService.schema_violations(report) == []


def test_ocp_sterrett_text(runner):
    result = runner.invoke(main, ["ocp", "sterrett"])
    assert result.exit_code == EXIT_OK
    assert "type b1" in result.output
    assert "via cocp" in result.output


def test_ocp_pt_is_flagged(runner, tmp_path):
    out = tmp_path / "pt.json"
    result = runner.invoke(main, ["ocp", "pt", "--json", "--out", str(out)])
    assert result.exit_code == EXIT_ASSUMPTIONS
    report = json.loads(out.read_text(encoding="utf-8"))
    assert report["status"] == "assumptions_violated"
    assert "(M1)" in report["message"] and "(M3)" in report["message"]
    assert "OCP method inapplicable" in report["message"]
    assert report["cocp"] is None
    assert report["discrete_bifurcation_type"] == "b0"
    assert report["docp"] == float(f"{UCP:.12g}")
    assert report["docp_achieving_n"] == 2
    assert report["docp_method"] == "integer_scan"
    assert OutputService.schema_violations(report) == []


def test_ocp_halving_keeps_the_plain_flag(runner):
    result = runner.invoke(main, ["ocp", "halving", "--json"])
    assert result.exit_code == EXIT_ASSUMPTIONS
    report = json_document(result.output)
    assert report["status"] == "assumptions_violated"
    assert report["discrete_bifurcation_type"] is None
    assert report["docp"] is None
    assert OutputService.schema_violations(report) == []


def test_ocp_unwritable_report_path(runner, tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory", encoding="utf-8")
    result = runner.invoke(main, ["ocp", "md", "--out", str(blocker / "md.json")])
    assert result.exit_code == EXIT_DOMAIN
    assert "cannot write report" in result.output


def test_ocp_curve_out(runner, tmp_path):
    curve = tmp_path / "md.csv"
    report_path = tmp_path / "md.json"
    result = runner.invoke(main, ["ocp", "md", "--curve-out", str(curve), "--out", str(report_path)])
    assert result.exit_code == EXIT_OK
    assert curve.exists()
    report = json.loads(report_path.read_text(encoding="utf-8"))
    assert report["curve_file"] == str(curve)
    assert report["bifurcation_type"] == "b1"
    assert OutputService.schema_violations(report) == []


def test_simulate(runner):
    result = runner.invoke(main, ["simulate", "dorfman", "--n", "5", "--p", "0.1", "--trials", "200000", "--seed", "42"])
    assert result.exit_code == EXIT_OK
    report = json_document(result.output)
    assert report["closed_form"] == pytest.approx(3.04755)
    assert abs(report["z_score"]) < 4
    assert OutputService.schema_violations(report, "SimulationReport") == []


def test_simulate_halving_is_refused(runner):
    result = runner.invoke(main, ["simulate", "halving", "--n", "3", "--p", "0.1", "--trials", "10"])
    assert result.exit_code == EXIT_DOMAIN
    assert "not simulatable" in result.output


def test_simulate_rejects_bad_trials(runner):
    result = runner.invoke(main, ["simulate", "dorfman", "--n", "3", "--p", "0.1", "--trials", "0"])
    assert result.exit_code == EXIT_DOMAIN


@pytest.mark.parametrize("name, level", [("debug", logging.DEBUG), ("INFO", logging.INFO), ("chatty", logging.WARNING), ("", logging.WARNING)])
def test_log_level_names(name, level):
    assert _log_level(name) == level


def test_unknown_log_level_does_not_break_the_cli(runner, monkeypatch):
    monkeypatch.setenv("CUTPOINT_LOG_LEVEL", "chatty")
    Config.reload()
    try:
        result = runner.invoke(main, ["list"])
    finally:
        monkeypatch.delenv("CUTPOINT_LOG_LEVEL")
        Config.reload()
    assert result.exit_code == EXIT_OK
