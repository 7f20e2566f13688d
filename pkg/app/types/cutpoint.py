"""Cut-point data models"""
from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator


class BifurcationType(str, Enum):
    """Shape of the bifurcation curve at the cut-point"""
    B0 = "b0"  # constant curve
    B1 = "b1"  # supremum attained only as a boundary limit
    B2 = "b2"  # interior maximum


class DocpMethod(str, Enum):
    """How a discrete cut-point was obtained"""
    REMARK1 = "remark1"
    BRUTEFORCE = "bruteforce"
    COCP = "cocp"
    INTEGER_SCAN = "integer_scan"


class CurvePoint(BaseModel):
    """One sample (n, p_n) of the inverted bifurcation map"""
    n: float
    p_n: float
    dp_dn: float = Field(..., description="Implicit derivative -(dt/dn)/(dt/dp) at (n, p_n)")
    residual: float = Field(..., description="|t(n, p_n) - 1|")


class BifurcationCurve(BaseModel):
    """Sampled bifurcation curve, sorted by n"""
    procedure: str
    points: List[CurvePoint] = Field(default_factory=list)
    n_domain: Tuple[float, float]

    @property
    def n_values(self) -> List[float]:
        return [pt.n for pt in self.points]

    @property
    def p_values(self) -> List[float]:
        return [pt.p_n for pt in self.points]


class CutPointResult(BaseModel):
    """Continuous-scale optimal cut-point and how it was found"""
    procedure: str
    cocp: float = Field(..., description="Continuous-scale optimal cut-point")
    bifurcation_type: BifurcationType
    n_star: Optional[float] = Field(None, description="Stationary point (b0/b2 only)")
    limit_at_c: float
    limit_at_infinity: float
    system_solutions: List[Tuple[float, float]] = Field(default_factory=list)
    diagnostics: Dict[str, float] = Field(default_factory=dict)


class DiscreteCutPoint(BaseModel):
    """Discrete-scale (integer cohort) cut-point"""
    procedure: str
    docp: float
    achieving_n: Optional[int] = None
    method: DocpMethod
    cocp_gap: Optional[float] = Field(None, description="cocp - docp, when cocp is known")
    tail_decreasing: Optional[bool] = Field(None, description="p_n strictly decreasing over the checked tail")


class Check(BaseModel):
    """Pass flag serialised as "pass" (a Python keyword)"""
    model_config = ConfigDict(populate_by_name=True)

    passed: bool = Field(..., alias="pass")


class M0Check(Check):
    c: float


class M1Check(BaseModel):
    trusted: bool


class M2Check(Check):
    worst_violation_point: Optional[Tuple[float, float, float]] = Field(
        None, description="(n, p_i, p_i+1) of the first non-increasing step"
    )


class RateProfile(BaseModel):
    """Critical and inflection points of n -> t(n, p) at a fixed p"""
    p: float
    minima: List[Tuple[float, float]] = Field(default_factory=list, description="(n, t) pairs")
    maxima: List[Tuple[float, float]] = Field(default_factory=list, description="(n, t) pairs")
    inflections: List[Tuple[float, float]] = Field(default_factory=list, description="(n, dt/dn) pairs")


class M3Check(Check):
    min_rate_at_ucp: float = Field(..., description="Smallest t(n, UCP) over the n grid and the interior minima")
    argmin_n: float
    interior_min_rate: Optional[float] = Field(None, description="Lowest local minimum of n -> t(n, UCP) on the profile range")
    interior_argmin_n: Optional[float] = None
    profile: Optional[RateProfile] = None


class M4Check(Check):
    witness_p: Dict[str, Optional[float]] = Field(
        default_factory=dict, description="Largest scanned p with t(n, p) < 1, keyed by n"
    )


class AssumptionReport(BaseModel):
    """Audit of the modelling assumptions for one procedure"""
    model_config = ConfigDict(populate_by_name=True)

    procedure: str
    m0: Optional[M0Check] = None
    m1: Optional[M1Check] = None
    m2: Optional[M2Check] = None
    m3: Optional[M3Check] = None
    m4: Optional[M4Check] = None

    @property
    def violations(self) -> List[str]:
        failed = []
        if self.m0 is not None and not self.m0.passed:
            failed.append("(M0)")
        if self.m1 is not None and not self.m1.trusted:
            failed.append("(M1)")
        for tag, check in (("(M2)", self.m2), ("(M3)", self.m3), ("(M4)", self.m4)):
            if check is not None and not check.passed:
                failed.append(tag)
        return failed


class SimConfig(BaseModel):
    """Monte-Carlo settings; results depend on these and nothing else"""
    trials: int = Field(..., ge=1)
    seed: int = Field(..., ge=0, lt=2**64)
    chunk_size: int = Field(65536, ge=1)
    verify_identification: bool = False


class SimResult(BaseModel):
    """Empirical mean number of tests per cohort"""
    procedure: str
    n: int
    p: float
    mean_tests: float
    std_error: float
    trials: int


class SimulationReport(SimResult):
    """Simulation result compared with the closed-form mean"""
    closed_form: float
    z_score: float


class ProcedureReport(BaseModel):
    """Complete cut-point report for one procedure"""
    model_config = ConfigDict(populate_by_name=True)

    name: str
    c: float
    ucp: float
    status: str = Field(..., description="'ok' or 'assumptions_violated'")
    message: Optional[str] = None
    violations: List[str] = Field(default_factory=list)
    assumption_report: AssumptionReport
    cocp: Optional[float] = None
    bifurcation_type: Optional[BifurcationType] = None
    n_star: Optional[float] = None
    limit_at_c: Optional[float] = None
    limit_at_infinity: Optional[float] = None
    docp: Optional[float] = None
    docp_achieving_n: Optional[int] = None
    docp_method: Optional[DocpMethod] = None
    docp_bruteforce: Optional[float] = None
    docp_bruteforce_n: Optional[int] = None
    discrete_bifurcation_type: Optional[BifurcationType] = Field(
        None, description="Shape of the integer-n curve, set for integer-only procedures"
    )
    curve_file: Optional[str] = None

    @field_validator("status")
    @classmethod
    def _known_status(cls, value: str) -> str:
        if value not in ("ok", "assumptions_violated"):
            raise ValueError(f"unknown status '{value}'")
        return value
