"""End-to-end cut-point analysis of one procedure"""
import logging
from typing import Optional

from app.core.bifurcation import BifurcationEngine
from app.core.procedures import UCP, ProcedureSpec, get_procedure
from app.services.assumption_checker import AssumptionChecker
from app.services.discrete_cutpoint import DiscreteCutPointFinder
from app.types.cutpoint import AssumptionReport, BifurcationType, ProcedureReport

logger = logging.getLogger(__name__)

VIOLATION_MESSAGE = "assumptions violated, OCP method inapplicable"


class CutPointAnalyzer:
    """Runs the assumption audit, the curve classification and the discrete recovery"""

    def __init__(
        self,
        engine: Optional[BifurcationEngine] = None,
        checker: Optional[AssumptionChecker] = None,
        finder: Optional[DiscreteCutPointFinder] = None,
    ):
        """Initialize the analyzer"""
        self.engine = engine or BifurcationEngine()
        self.checker = checker or AssumptionChecker()
        self.finder = finder or DiscreteCutPointFinder(self.engine)

    def audit(self, name: str) -> AssumptionReport:
        return self.checker.audit(get_procedure(name))

    def _attach_integer_curve(self, proc: ProcedureSpec, report: ProcedureReport) -> None:
        """Record a constant integer-n curve (discrete type b0) on a flagged report"""
        discrete = self.finder.classify_integer_curve(proc)
        if discrete is None:
            return
        report.discrete_bifurcation_type = BifurcationType.B0
        report.docp = discrete.docp
        report.docp_achieving_n = discrete.achieving_n
        report.docp_method = discrete.method
        report.message += f"; integer curve constant at p_n = {discrete.docp:.12g} (discrete type b0)"

    def analyze(self, name: str, discrete: bool = False, curve_file: Optional[str] = None) -> ProcedureReport:
        """
        Analyze a registered procedure

        Assumption failures are recorded in the report instead of raised.

        Args:
            name: Registered procedure name
            discrete: Also run the integer brute-force scan
            curve_file: Name of a curve file written alongside, if any

        Returns:
            ProcedureReport with status "ok" or "assumptions_violated"
        """
        proc: ProcedureSpec = get_procedure(name)
        assumptions = self.checker.audit(proc)
        violations = assumptions.violations
        if violations:
            logger.info("%s: %s violated", proc.name, ",".join(violations))
            report = ProcedureReport(
                name=proc.name,
                c=proc.c,
                ucp=UCP,
                status="assumptions_violated",
                message=f"{','.join(violations)} violated; {VIOLATION_MESSAGE}",
                violations=violations,
                assumption_report=assumptions,
                curve_file=curve_file,
            )
            if proc.integer_only:
                self._attach_integer_curve(proc, report)
            return report

        result = self.engine.classify_and_find_cocp(proc)
        docp = self.finder.docp_for(proc, result)
        report = ProcedureReport(
            name=proc.name,
            c=proc.c,
            ucp=UCP,
            status="ok",
            assumption_report=assumptions,
            cocp=result.cocp,
            bifurcation_type=result.bifurcation_type,
            n_star=result.n_star,
            limit_at_c=result.limit_at_c,
            limit_at_infinity=result.limit_at_infinity,
            docp=docp.docp,
            docp_achieving_n=docp.achieving_n,
            docp_method=docp.method,
            curve_file=curve_file,
        )
        if discrete:
            brute = self.finder.docp_bruteforce(proc, cocp=result.cocp)
            report.docp_bruteforce = brute.docp
            report.docp_bruteforce_n = brute.achieving_n
        return report
