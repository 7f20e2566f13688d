"""Numerical audit of the modelling assumptions (M0)-(M4)

(M0) c >= 2 is known; (M1) differentiability is taken on trust per procedure;
(M2) M(n, .) strictly increasing on (0, UCP]; (M3) t(n, UCP) > 1 for n > c;
(M4) some p in (0, UCP) gives t(n, p) < 1.
"""
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.core.config import Config
from app.core.errors import DomainError
from app.core.numerics import find_root, sign_change_brackets
from app.core.procedures import UCP, ProcedureSpec
from app.types.cutpoint import (
    AssumptionReport,
    M0Check,
    M1Check,
    M2Check,
    M3Check,
    M4Check,
    RateProfile,
)

logger = logging.getLogger(__name__)


class AssumptionChecker:
    """Grid-based checks of (M0)-(M4) for a registered procedure"""

    def __init__(
        self,
        grid_points: int = None,
        strictness_margin: float = None,
        p_floor: float = None,
        grid_offset: float = None,
        grid_n_max: float = None,
    ):
        self.grid_points = grid_points or Config.get_int("assumptions", "grid_points", default=128)
        self.strictness_margin = (
            strictness_margin if strictness_margin is not None
            else Config.get_float("assumptions", "strictness_margin", default=1e-12)
        )
        self.p_floor = p_floor if p_floor is not None else Config.get_float("engine", "p_floor", default=1e-12)
        self.grid_offset = (
            grid_offset if grid_offset is not None
            else Config.get_float("assumptions", "grid_offset", default=1e-3)
        )
        self.grid_n_max = grid_n_max or Config.get_float("assumptions", "grid_n_max", default=1e6)
        self.profile_n_max = Config.get_float("assumptions", "profile_n_max", default=100.0)
        self.profile_steps = Config.get_int("assumptions", "profile_steps", default=4000)

    # Grids

    def default_n_grid(self, proc: ProcedureSpec) -> List[float]:
        """Log-spaced n on (c + offset, n_max], or integers c..N for integer-only procedures"""
        if proc.integer_only:
            upper = Config.get_int("assumptions", "integer_n_max", proc.name, default=50)
            return [float(n) for n in range(int(np.ceil(proc.c)), upper + 1)]
        return [float(n) for n in np.geomspace(proc.c + self.grid_offset, self.grid_n_max, self.grid_points)]

    def default_p_grid(self) -> List[float]:
        """Log-spaced p on (p_floor, UCP]"""
        return [float(p) for p in np.geomspace(self.p_floor, UCP, self.grid_points)]

    def _validate_n_grid(self, proc: ProcedureSpec, n_grid: Sequence[float]) -> np.ndarray:
        grid = np.asarray(n_grid, dtype=float)
        if grid.size == 0:
            raise DomainError("n grid is empty", proc.name)
        # the integer cohort c itself is admissible on the discrete scale
        inside = grid >= proc.c if proc.integer_only else grid > proc.c
        if not np.all(inside):
            raise DomainError(f"n grid must lie above c={proc.c} for {proc.name}", proc.name)
        return grid

    # Checks

    def check_m0(self, proc: ProcedureSpec) -> AssumptionReport:
        return AssumptionReport(procedure=proc.name, m0=M0Check(c=proc.c, passed=proc.c >= 2))

    def check_m1(self, proc: ProcedureSpec) -> AssumptionReport:
        # differentiability is a modelling property, reported as registered
        return AssumptionReport(procedure=proc.name, m1=M1Check(trusted=proc.satisfies_m1))

    def check_m2(self, proc: ProcedureSpec, n_grid: Sequence[float], p_grid: Sequence[float]) -> AssumptionReport:
        """M(n, .) strictly increasing across p_grid, and dt/dp > 0 where a closed form exists"""
        grid = self._validate_n_grid(proc, n_grid)
        p = np.asarray(p_grid, dtype=float)
        if p.size < 2 or np.any(np.diff(p) <= 0) or p[0] <= 0 or p[-1] > UCP:
            raise DomainError("p grid must be strictly increasing within (0, UCP]", proc.name)

        violation = None
        for n in grid:
            means = np.asarray(proc.mean(n, p), dtype=float)
            steps = np.diff(means)
            top = means[-1]
            tol = self.strictness_margin * max(1.0, abs(top))
            # q**n underflows at large n, so M reaches its plateau in floating point;
            # a flat step only counts below that plateau
            stalled = (steps <= 0) & (means[1:] < top - tol)
            bad = np.flatnonzero((steps < -tol) | stalled)
            if bad.size:
                i = int(bad[0])
                violation = (float(n), float(p[i]), float(p[i + 1]))
                break
            if proc.dt_dp is not None:
                slopes = np.asarray(proc.dt_dp(n, p), dtype=float)
                bad = np.flatnonzero(slopes < 0)
                if bad.size:
                    i = int(bad[0])
                    violation = (float(n), float(p[i]), float(p[min(i + 1, p.size - 1)]))
                    break
        if violation is not None:
            logger.info("%s: (M2) fails at n=%.6g between p=%.6g and p=%.6g", proc.name, *violation)
        return AssumptionReport(
            procedure=proc.name,
            m2=M2Check(passed=violation is None, worst_violation_point=violation),
        )

    def check_m3(self, proc: ProcedureSpec, n_grid: Sequence[float]) -> AssumptionReport:
        """t(n, UCP) - 1 > margin at every grid n; records the minimum and its location

        min_rate_at_ucp is the lowest value over the whole grid and the interior
        minima. For a rate that decays to 1 as n grows (Dorfman) that is the far
        tail of the grid, so the lowest local minimum of n -> t(n, UCP) on the
        profile range is reported separately as interior_min_rate/interior_argmin_n.
        """
        grid = self._validate_n_grid(proc, n_grid)
        rates = np.asarray(proc.rate(grid, UCP), dtype=float)
        i = int(np.argmin(rates))
        min_rate, argmin_n = float(rates[i]), float(grid[i])
        passed = bool(np.all(rates - 1.0 > self.strictness_margin))

        profile = None
        interior: Optional[Tuple[float, float]] = None
        if not proc.integer_only:
            profile = self.rate_profile(proc, UCP)
            if profile.minima:
                interior = min(profile.minima, key=lambda pair: pair[1])
            # an interior minimum beats the grid estimate
            for n, t in profile.minima:
                if t < min_rate:
                    min_rate, argmin_n = t, n
            if min_rate - 1.0 <= self.strictness_margin:
                passed = False
        return AssumptionReport(
            procedure=proc.name,
            m3=M3Check(
                passed=passed,
                min_rate_at_ucp=min_rate,
                argmin_n=argmin_n,
                interior_min_rate=interior[1] if interior else None,
                interior_argmin_n=interior[0] if interior else None,
                profile=profile,
            ),
        )

    def check_m4(self, proc: ProcedureSpec, n_grid: Sequence[float]) -> AssumptionReport:
        """For every n some scanned p in (p_floor, UCP) has t(n, p) < 1"""
        grid = self._validate_n_grid(proc, n_grid)
        p = np.geomspace(self.p_floor, UCP, self.grid_points)[:-1]
        witnesses = {}
        passed = True
        for n in grid:
            below = np.flatnonzero(np.asarray(proc.rate(n, p), dtype=float) < 1.0)
            witness: Optional[float] = float(p[below[-1]]) if below.size else None
            witnesses[f"{n:.12g}"] = witness
            passed = passed and witness is not None
        return AssumptionReport(procedure=proc.name, m4=M4Check(passed=passed, witness_p=witnesses))

    # Shape of n -> t(n, p)

    def rate_profile(self, proc: ProcedureSpec, p: float = UCP, n_hi: float = None, steps: int = None) -> RateProfile:
        """Local extrema and inflection points of n -> t(n, p) on (c, n_hi]"""
        if proc.integer_only:
            raise DomainError(f"{proc.name} has no continuous rate profile", proc.name)
        n_hi = n_hi or self.profile_n_max
        steps = steps or self.profile_steps
        grid = np.linspace(proc.c + self.grid_offset, n_hi, steps)

        def slope(n: float) -> float:
            return float(proc.partial_n(n, p))

        def curvature(n: float) -> float:
            return float(proc.second_partial_n(n, p))

        minima, maxima = [], []
        for lo, hi in sign_change_brackets(grid, [slope(n) for n in grid]):
            n = lo if lo == hi else find_root(slope, lo, hi, xtol=1e-13, rtol=1e-15)
            t = float(proc.rate(n, p))
            (minima if curvature(n) > 0 else maxima).append((n, t))

        inflections = []
        for lo, hi in sign_change_brackets(grid, [curvature(n) for n in grid]):
            n = lo if lo == hi else find_root(curvature, lo, hi, xtol=1e-13, rtol=1e-15)
            inflections.append((n, slope(n)))
        return RateProfile(p=p, minima=minima, maxima=maxima, inflections=inflections)

    # Full audit

    def audit(self, proc: ProcedureSpec) -> AssumptionReport:
        """Every check on the default grids"""
        n_grid = self.default_n_grid(proc)
        logger.info("auditing %s on %d n points", proc.name, len(n_grid))
        report = AssumptionReport(
            procedure=proc.name,
            m0=self.check_m0(proc).m0,
            m1=self.check_m1(proc).m1,
            m3=self.check_m3(proc, n_grid).m3,
            m4=self.check_m4(proc, n_grid).m4,
        )
        # (M2) compares means along p; for integer-only procedures it is evaluated on the same integer grid
        report.m2 = self.check_m2(proc, n_grid, self.default_p_grid()).m2
        return report
