"""Discrete-scale cut-point (integer cohorts)"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Tuple

import numpy as np

from app.core.bifurcation import BifurcationEngine
from app.core.config import Config
from app.core.errors import (
    CutPointError,
    DomainError,
    InapplicableMethodError,
    RootAboveUcpError,
)
from app.core.procedures import UCP, ProcedureSpec
from app.types.cutpoint import BifurcationType, CutPointResult, DiscreteCutPoint, DocpMethod

logger = logging.getLogger(__name__)


class DiscreteCutPointFinder:
    """Recovers the discrete cut-point from the continuous one, or by an integer scan"""

    def __init__(
        self,
        engine: Optional[BifurcationEngine] = None,
        include_c: bool = None,
        n_max: int = None,
        tail_check_from: int = None,
        max_workers: int = None,
    ):
        self.engine = engine or BifurcationEngine()
        self.include_c = include_c if include_c is not None else bool(Config.get("discrete", "include_c", default=True))
        self.n_max = n_max or Config.get_int("discrete", "n_max", default=512)
        self.tail_check_from = tail_check_from or Config.get_int("discrete", "tail_check_from", default=64)
        self.max_workers = max_workers or self.engine.max_workers

    def first_integer(self, proc: ProcedureSpec) -> int:
        """Smallest admissible integer cohort"""
        start = math.ceil(proc.c)
        if start == proc.c and not self.include_c:
            start += 1
        return start

    def p_at_integer(self, proc: ProcedureSpec, n: int) -> Optional[float]:
        """p_n at an integer cohort; None when the root lies above UCP"""
        if n < self.first_integer(proc):
            return None
        try:
            return self.engine.root_at(proc, float(n))
        except RootAboveUcpError:
            return None

    def integer_curve(self, proc: ProcedureSpec, n_max: int = None) -> List[Tuple[int, Optional[float]]]:
        """(n, p_n) at every admissible integer up to n_max; None where no root exists in (0, UCP]

        t(n, UCP) within the engine's flatness tolerance of 1 counts as a root at UCP.
        """
        if n_max is None:
            n_max = Config.get_int("assumptions", "integer_n_max", proc.name, default=50)
        tolerance = self.engine.flatness_tolerance
        curve: List[Tuple[int, Optional[float]]] = []
        for n in range(self.first_integer(proc), n_max + 1):
            if abs(float(proc.rate(float(n), UCP)) - 1.0) <= tolerance:
                curve.append((n, UCP))
                continue
            try:
                curve.append((n, self.engine.root_at(proc, float(n))))
            except CutPointError:
                curve.append((n, None))
        return curve

    def classify_integer_curve(self, proc: ProcedureSpec, n_max: int = None) -> Optional[DiscreteCutPoint]:
        """Discrete cut-point of a curve that is constant on the integers, else None

        A constant integer curve is type b0 on the discrete scale: every cohort
        shares p_n, so the smallest admissible cohort is reported.
        """
        curve = self.integer_curve(proc, n_max)
        values = [p for _, p in curve if p is not None]
        if len(values) != len(curve) or len(values) < 2:
            return None
        if max(values) - min(values) > self.engine.flatness_tolerance:
            return None
        n0, p0 = curve[0]
        logger.info("%s: p_n = %.12g at every integer n in [%d, %d], discrete type b0", proc.name, p0, n0, curve[-1][0])
        return DiscreteCutPoint(procedure=proc.name, docp=p0, achieving_n=n0, method=DocpMethod.INTEGER_SCAN)

    def docp_remark1(self, proc: ProcedureSpec, result: CutPointResult) -> DiscreteCutPoint:
        """max(p at floor(n*), p at ceil(n*)) around the stationary point"""
        if result.bifurcation_type == BifurcationType.B1 or result.n_star is None:
            raise InapplicableMethodError(
                f"{proc.name}: recovery around n* needs a b0/b2 curve, got {result.bifurcation_type.value}",
                proc.name,
            )
        candidates: List[Tuple[float, int]] = []
        for n in sorted({math.floor(result.n_star), math.ceil(result.n_star)}):
            p = self.p_at_integer(proc, n)
            if p is not None:
                candidates.append((p, n))
        if not candidates:
            raise InapplicableMethodError(f"{proc.name}: no admissible integer next to n*={result.n_star}", proc.name)
        # ties go to the smaller cohort
        docp, achieving_n = max(candidates, key=lambda c: (c[0], -c[1]))
        return DiscreteCutPoint(
            procedure=proc.name,
            docp=docp,
            achieving_n=achieving_n,
            method=DocpMethod.REMARK1,
            cocp_gap=result.cocp - docp,
        )

    def docp_bruteforce(self, proc: ProcedureSpec, n_max: int = None, cocp: Optional[float] = None) -> DiscreteCutPoint:
        """Maximum of p_n over every integer n in [first_integer, n_max]"""
        n_max = n_max or self.n_max
        start = self.first_integer(proc)
        if n_max < math.ceil(proc.c) + 1:
            raise DomainError(f"n_max must be at least {math.ceil(proc.c) + 1}, got {n_max}", proc.name)
        cohorts = list(range(start, n_max + 1))
        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            values = list(executor.map(lambda n: self.p_at_integer(proc, n), cohorts))

        best: Optional[Tuple[float, int]] = None
        for n, p in zip(cohorts, values):
            if p is not None and (best is None or p > best[0]):
                best = (p, n)
        if best is None:
            raise CutPointError(f"{proc.name}: every integer root lies above UCP", proc.name)

        tail = [p for n, p in zip(cohorts, values) if n >= self.tail_check_from and p is not None]
        tail_decreasing = bool(np.all(np.diff(tail) < 0)) if len(tail) > 1 else None
        if tail_decreasing is False:
            logger.warning("%s: p_n is not decreasing beyond n=%d", proc.name, self.tail_check_from)

        docp, achieving_n = best
        return DiscreteCutPoint(
            procedure=proc.name,
            docp=docp,
            achieving_n=achieving_n,
            method=DocpMethod.BRUTEFORCE,
            cocp_gap=None if cocp is None else cocp - docp,
            tail_decreasing=tail_decreasing,
        )

    def docp_for(self, proc: ProcedureSpec, result: CutPointResult) -> DiscreteCutPoint:
        """Recovery around n* when applicable, otherwise docp = cocp"""
        try:
            return self.docp_remark1(proc, result)
        except InapplicableMethodError:
            logger.info("%s: type %s, reporting docp = cocp", proc.name, result.bifurcation_type.value)
        achieving_n = None
        n = self.first_integer(proc)
        if abs(float(proc.rate(float(n), result.cocp)) - 1.0) < 1e-10:
            achieving_n = n
        return DiscreteCutPoint(
            procedure=proc.name,
            docp=result.cocp,
            achieving_n=achieving_n,
            method=DocpMethod.COCP,
            cocp_gap=0.0,
        )

    @staticmethod
    def compare(first: DiscreteCutPoint, second: DiscreteCutPoint) -> float:
        """Absolute disagreement between two discrete cut-points"""
        return abs(first.docp - second.docp)
