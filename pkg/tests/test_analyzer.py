import pytest

from app.core.analyzer import CutPointAnalyzer
from app.core.procedures import UCP
from app.services.output_service import OutputService
from app.types.cutpoint import BifurcationType, DocpMethod


@pytest.fixture(scope="module")
def analyzer(engine, checker, finder):
    return CutPointAnalyzer(engine=engine, checker=checker, finder=finder)


def test_pt_is_discrete_b0_at_ucp(analyzer):
    report = analyzer.analyze("pt")
    assert report.status == "assumptions_violated"
    assert {"(M1)", "(M3)"} <= set(report.violations)
    assert report.cocp is None and report.bifurcation_type is None
    assert report.discrete_bifurcation_type == BifurcationType.B0
    assert report.docp == UCP
    assert report.docp_achieving_n == 2
    assert report.docp_method == DocpMethod.INTEGER_SCAN
    assert "discrete type b0" in report.message
    assert OutputService.schema_violations(OutputService.document(report)) == []


def test_halving_report_has_no_discrete_result(analyzer):
    report = analyzer.analyze("halving")
    assert report.status == "assumptions_violated"
    assert report.discrete_bifurcation_type is None
    assert report.docp is None
    assert "discrete type" not in report.message


def test_a2_report_validates(analyzer):
    report = analyzer.analyze("a2", discrete=True)
    assert report.status == "ok"
    assert report.bifurcation_type == BifurcationType.B2
    assert report.discrete_bifurcation_type is None
    assert report.docp == pytest.approx(report.docp_bruteforce, abs=1e-12)
    assert OutputService.schema_violations(OutputService.document(report)) == []
