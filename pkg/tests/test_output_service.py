import json
import math

import pytest

from app.core.config import Config
from app.core.errors import ReportSchemaError
from app.core.procedures import UCP, get_procedure
from app.services.output_service import OutputService
from app.types.cutpoint import AssumptionReport, CurvePoint, ProcedureReport, SimulationReport


def test_curve_csv_round_trip(tmp_path, engine):
    points = engine.trace_curve(get_procedure("dorfman"), 2.0, 20.0, 32).points
    path = OutputService.write_curve_csv(points, tmp_path / "curves" / "dorfman.csv")

    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == f"# ucp={UCP:.12g}"
    assert lines[1] == "n,p_n,dp_dn,residual"
    assert len(lines) == 2 + len(points)

    parsed = OutputService.read_curve_csv(path)
    for original, restored in zip(points, parsed):
        assert restored.n == float(f"{original.n:.12g}")
        assert restored.p_n == float(f"{original.p_n:.12g}")
        assert restored.dp_dn == float(f"{original.dp_dn:.12g}")


def test_nan_cells_survive_csv(tmp_path):
    point = CurvePoint(n=1.5, p_n=0.1, dp_dn=math.nan, residual=0.0)
    path = OutputService.write_curve_csv([point], tmp_path / "nan.csv")
    restored = OutputService.read_curve_csv(path)[0]
    assert math.isnan(restored.dp_dn)


def test_round_significant():
    assert OutputService.round_significant(1.0 / 3.0) == 0.333333333333
    assert OutputService.round_significant({"a": [math.inf, 2.5], "b": True}) == {"a": [None, 2.5], "b": True}


@pytest.mark.parametrize(
    "kind, model",
    [("ProcedureReport", ProcedureReport), ("AssumptionReport", AssumptionReport), ("SimulationReport", SimulationReport)],
)
def test_schema_matches_report_model(kind, model):
    schema = OutputService.load_schema(kind)
    model_schema = model.model_json_schema(by_alias=True)
    assert schema["title"] == kind
    assert set(schema["properties"]) == set(model_schema["properties"])
    assert set(schema["required"]) == set(model_schema["required"])


def flagged_pt_report():
    return ProcedureReport(
        name="pt",
        c=2.0,
        ucp=UCP,
        status="assumptions_violated",
        violations=["(M1)", "(M3)"],
        assumption_report=AssumptionReport(procedure="pt"),
    )


def test_valid_report_has_no_violations():
    assert OutputService.schema_violations(OutputService.document(flagged_pt_report())) == []


def test_schema_rejects_wrong_types_and_values():
    payload = OutputService.document(flagged_pt_report())
    payload.update(c="two", status="bogus", bifurcation_type="b9", assumption_report={"no_procedure": 1})
    problems = OutputService.schema_violations(payload)
    for field in ("c", "status", "bifurcation_type", "assumption_report"):
        assert any(problem.startswith(f"{field}:") for problem in problems), field
    assert any("'bogus' is not one of" in problem for problem in problems)


def test_schema_checks_nested_assumption_report():
    payload = OutputService.document(flagged_pt_report())
    payload["assumption_report"]["m0"] = {"pass": "yes", "c": 2.0}
    payload["docp"] = 0.5
    problems = OutputService.schema_violations(payload)
    assert any(problem.startswith("assumption_report/m0/pass:") for problem in problems)
    assert any(problem.startswith("docp:") for problem in problems)


def test_schema_reports_missing_and_unknown_fields():
    payload = OutputService.document(flagged_pt_report())
    payload.pop("ucp")
    payload["extra"] = 1
    problems = OutputService.schema_violations(payload)
    assert any("'ucp' is a required property" in problem for problem in problems)
    assert any("'extra' was unexpected" in problem for problem in problems)


def test_invalid_document_is_not_serialised():
    report = flagged_pt_report()
    report.docp_achieving_n = 1
    with pytest.raises(ReportSchemaError) as excinfo:
        OutputService.to_json(report)
    assert excinfo.value.procedure == "pt"
    assert excinfo.value.problems


def test_simulation_document_validates():
    report = SimulationReport(
        procedure="dorfman", n=5, p=0.1, mean_tests=3.05, std_error=0.001, trials=100, closed_form=3.04755, z_score=math.inf
    )
    payload = json.loads(OutputService.to_json(report))
    assert payload["z_score"] is None
    assert OutputService.schema_violations(payload, "SimulationReport") == []
    payload["trials"] = 0
    assert OutputService.schema_violations(payload, "SimulationReport") == ["trials: 0 is less than the minimum of 1"]


def test_unknown_schema_kind():
    with pytest.raises(ValueError):
        OutputService.load_schema("CurvePoint")


def test_report_status_is_checked():
    with pytest.raises(ValueError):
        ProcedureReport(name="x", c=2.0, ucp=UCP, status="maybe", assumption_report=AssumptionReport(procedure="x"))


def test_save_report(tmp_path):
    report = ProcedureReport(name="dorfman", c=2.0, ucp=UCP, status="ok", assumption_report=AssumptionReport(procedure="dorfman"))
    path = OutputService.save_report(report, tmp_path / "out" / "report.json")
    payload = json.loads(path.read_text(encoding="utf-8"))
    assert payload["ucp"] == float(f"{UCP:.12g}")
    assert payload["status"] == "ok"


def test_curve_svg(tmp_path, engine):
    points = engine.trace_curve(get_procedure("a2"), 3.0, 30.0, 32).points
    path = OutputService.write_curve_svg(points, tmp_path / "a2.svg", title="a2")
    assert path.read_text(encoding="utf-8").lstrip().startswith("<?xml")


def test_save_report_defaults_to_output_dir(monkeypatch, tmp_path):
    monkeypatch.setenv("CUTPOINT_OUTPUT_DIR", str(tmp_path / "results"))
    Config.reload()
    try:
        report = ProcedureReport(name="md", c=2.0, ucp=UCP, status="ok", assumption_report=AssumptionReport(procedure="md"))
        path = OutputService.save_report(report)
        assert path == tmp_path / "results" / "report.json"
        assert json.loads(path.read_text(encoding="utf-8"))["name"] == "md"
    finally:
        monkeypatch.delenv("CUTPOINT_OUTPUT_DIR")
        Config.reload()
