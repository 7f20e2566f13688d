"""Exception hierarchy for cut-point computations"""
from typing import List, Optional


class CutPointError(ValueError):
    """Base class for every error raised by the library"""

    def __init__(self, message: str, procedure: Optional[str] = None):
        super().__init__(message)
        self.procedure = procedure


class DomainError(CutPointError):
    """Argument outside the domain of a procedure (n, p or grid)"""


class UnknownProcedureError(CutPointError):
    """Procedure name not present in the registry"""


class NoRootError(CutPointError):
    """t(n, p) >= 1 on the whole p scan, i.e. (M4) fails at this n"""

    def __init__(self, message: str, procedure: Optional[str] = None, n: Optional[float] = None):
        super().__init__(message, procedure)
        self.n = n


class RootAboveUcpError(CutPointError):
    """t(n, UCP) < 1, i.e. the root lies above UCP and (M3) fails at this n"""

    def __init__(self, message: str, procedure: Optional[str] = None, n: Optional[float] = None):
        super().__init__(message, procedure)
        self.n = n


class CurveTracingError(CutPointError):
    """A solver error raised while tracing, tagged with the offending n"""

    def __init__(self, message: str, procedure: Optional[str] = None, n: Optional[float] = None):
        super().__init__(message, procedure)
        self.n = n


class AssumptionViolationError(CutPointError):
    """Procedure violates assumptions required by the requested operation"""

    def __init__(self, message: str, procedure: Optional[str] = None, violations: Optional[List[str]] = None):
        super().__init__(message, procedure)
        self.violations = list(violations or [])


class InapplicableMethodError(CutPointError):
    """Recovery recipe does not apply to this bifurcation type"""


class NotSimulatableError(CutPointError):
    """No protocol is available to simulate this procedure"""


class ReportSchemaError(CutPointError):
    """Report document does not validate against its shipped JSON schema"""

    def __init__(self, message: str, procedure: Optional[str] = None, problems: Optional[List[str]] = None):
        super().__init__(message, procedure)
        self.problems = list(problems or [])
