"""Bifurcation curve tracing and continuous cut-point classification

For every n the curve value p_n is the unique prevalence in (0, UCP] where
t(n, p_n) = 1, i.e. the fixed-point locus of dn/dt = t(n, p) - 1. Its
maximum over (c, infinity) is the continuous optimal cut-point.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Tuple

import numpy as np

from app.core.config import Config
from app.core.errors import (
    AssumptionViolationError,
    CurveTracingError,
    CutPointError,
    DomainError,
    NoRootError,
    RootAboveUcpError,
)
from app.core.numerics import (
    extrapolate_to_zero,
    find_root,
    newton_2d,
    roots_on_grid,
    sign_change_brackets,
)
from app.core.procedures import UCP, ProcedureSpec
from app.types.cutpoint import BifurcationCurve, BifurcationType, CurvePoint, CutPointResult

logger = logging.getLogger(__name__)


class BifurcationEngine:
    """Traces n -> p_n and derives the continuous optimal cut-point"""

    def __init__(
        self,
        p_floor: float = None,
        boundary_offset: float = None,
        n_max: float = None,
        residual_tolerance: float = None,
        newton_tolerance: float = None,
        flatness_tolerance: float = None,
        classification_steps: int = None,
        multi_root_points: int = None,
        max_workers: int = None,
    ):
        """Initialize the engine; unset arguments come from the engine section of the config"""
        Config._ensure_initialized()
        self.p_floor = p_floor if p_floor is not None else Config.get_float("engine", "p_floor", default=1e-12)
        self.boundary_offset = (
            boundary_offset if boundary_offset is not None
            else Config.get_float("engine", "boundary_offset", default=1e-6)
        )
        self.n_max = n_max if n_max is not None else Config.get_float("engine", "n_max", default=1e6)
        self.residual_tolerance = (
            residual_tolerance if residual_tolerance is not None
            else Config.get_float("engine", "residual_tolerance", default=1e-12)
        )
        self.newton_tolerance = (
            newton_tolerance if newton_tolerance is not None
            else Config.get_float("engine", "newton_tolerance", default=1e-11)
        )
        self.newton_max_iter = Config.get_int("engine", "newton_max_iter", default=25)
        self.flatness_tolerance = (
            flatness_tolerance if flatness_tolerance is not None
            else Config.get_float("engine", "flatness_tolerance", default=1e-9)
        )
        self.classification_steps = (
            classification_steps if classification_steps is not None
            else Config.get_int("engine", "classification_steps", default=512)
        )
        self.multi_root_points = (
            multi_root_points if multi_root_points is not None
            else Config.get_int("engine", "multi_root_points", default=1024)
        )
        nodes = Config.get("engine", "richardson_nodes", default=[1e4, 1e5, 1e6])
        self.richardson_nodes = [float(node) for node in nodes]
        self.max_workers = max_workers or Config.MAX_WORKERS

    # Curve values

    def solve_p_n(self, proc: ProcedureSpec, n: float) -> float:
        """Unique root of t(n, p) = 1 in (0, UCP] for n > c"""
        if proc.integer_only:
            raise DomainError(f"{proc.name} has no continuous bifurcation curve", proc.name)
        if not n > proc.c:
            raise DomainError(f"n must exceed c={proc.c} for {proc.name}, got {n}", proc.name)
        return self.root_at(proc, n)

    def root_at(self, proc: ProcedureSpec, n: float) -> float:
        """Root of t(n, p) = 1 in [p_floor, UCP] without the n > c check

        Used for integer cohorts at n = c and for the extended domain.
        """
        n = float(n)

        def excess(p: float) -> float:
            return float(proc.rate(n, p)) - 1.0

        at_ucp = excess(UCP)
        if abs(at_ucp) <= self.residual_tolerance:
            return UCP
        if at_ucp < 0.0:
            raise RootAboveUcpError(
                f"t({n}, UCP) = {at_ucp + 1.0:.15g} < 1 for {proc.name}: root lies above UCP, (M3) fails",
                proc.name,
                n,
            )
        at_floor = excess(self.p_floor)
        if at_floor >= 0.0:
            raise NoRootError(
                f"t({n}, p) >= 1 on the whole scan for {proc.name}: no root, (M4) fails",
                proc.name,
                n,
            )
        root = find_root(excess, self.p_floor, UCP)
        residual = abs(excess(root))
        if residual > self.residual_tolerance:
            logger.warning("%s: residual %.3g at n=%.12g exceeds tolerance", proc.name, residual, n)
        logger.debug("%s: p_n(%.12g) = %.15g", proc.name, n, root)
        return root

    def implicit_slope(self, proc: ProcedureSpec, n: float, p: float) -> float:
        """dp_n/dn = -(dt/dn)/(dt/dp) at a curve point"""
        dt_dp = float(proc.partial_p(n, p))
        if dt_dp == 0.0:
            return math.nan
        return -float(proc.partial_n(n, p)) / dt_dp

    def _curve_point(self, proc: ProcedureSpec, n: float) -> CurvePoint:
        try:
            p_n = self.solve_p_n(proc, n)
        except CutPointError as e:
            raise CurveTracingError(f"tracing {proc.name} failed at n={n:.12g}: {e}", proc.name, n) from e
        return CurvePoint(
            n=n,
            p_n=p_n,
            dp_dn=self.implicit_slope(proc, n, p_n),
            residual=abs(float(proc.rate(n, p_n)) - 1.0),
        )

    def trace_curve(self, proc: ProcedureSpec, n_lo: float, n_hi: float, steps: int) -> BifurcationCurve:
        """Sample the curve on a log-spaced grid of n in [n_lo, n_hi]

        n_lo = c is moved inside the open domain by the boundary offset.
        """
        if steps < 2:
            raise DomainError(f"steps must be >= 2, got {steps}", proc.name)
        if not (proc.c <= n_lo < n_hi):
            raise DomainError(
                f"need c={proc.c} <= n_lo < n_hi, got n_lo={n_lo}, n_hi={n_hi}", proc.name
            )
        start = max(n_lo, proc.c + self.boundary_offset)
        grid = np.geomspace(start, n_hi, steps)
        logger.info("tracing %s on [%.6g, %.6g] with %d points", proc.name, start, n_hi, steps)
        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            points = list(executor.map(lambda n: self._curve_point(proc, float(n)), grid))
        return BifurcationCurve(procedure=proc.name, points=points, n_domain=(float(start), float(n_hi)))

    # Stationary system

    def _polish(self, proc: ProcedureSpec, n0: float, p0: float) -> Tuple[float, float, float]:
        """Newton polish of {t = 1, dt/dn = 0} starting from a curve point"""

        def residual(x: np.ndarray) -> np.ndarray:
            n, p = x
            try:
                return np.array([float(proc.rate(n, p)) - 1.0, float(proc.partial_n(n, p))])
            except CutPointError:
                return np.array([math.inf, math.inf])

        def jacobian(x: np.ndarray) -> np.ndarray:
            n, p = x
            return np.array(
                [
                    [float(proc.partial_n(n, p)), float(proc.partial_p(n, p))],
                    [float(proc.second_partial_n(n, p)), float(proc.mixed_partial(n, p))],
                ]
            )

        x, norm = newton_2d(residual, jacobian, (n0, p0), self.newton_tolerance, self.newton_max_iter)
        if norm >= self.newton_tolerance:
            logger.warning(
                "%s: stationary point polish stalled at residual %.3g near n=%.9g", proc.name, norm, n0
            )
        return float(x[0]), float(x[1]), norm

    def _stationary_from_grid(
        self,
        proc: ProcedureSpec,
        grid: np.ndarray,
        p_values: Optional[List[float]] = None,
        residuals: Optional[List[float]] = None,
    ) -> List[Tuple[float, float]]:
        def slope_numerator(n: float) -> float:
            # same sign as -dp_n/dn since dt/dp > 0 on the curve
            return float(proc.partial_n(n, self.solve_p_n(proc, n)))

        if p_values is None:
            values = [slope_numerator(float(n)) for n in grid]
        else:
            values = [float(proc.partial_n(float(n), p)) for n, p in zip(grid, p_values)]
        solutions: List[Tuple[float, float]] = []
        for lo, hi in sign_change_brackets(grid, values):
            n_root = lo if lo == hi else find_root(slope_numerator, lo, hi, xtol=1e-13, rtol=1e-15)
            n_pol, p_pol, norm = self._polish(proc, n_root, self.solve_p_n(proc, n_root))
            # keep the curve root if the polish wandered off the admissible box
            if not (proc.c < n_pol <= self.n_max and 0.0 < p_pol <= UCP):
                n_pol, p_pol = n_root, self.solve_p_n(proc, n_root)
            logger.info("%s: stationary point (%.12g, %.12g), residual %.3g", proc.name, n_pol, p_pol, norm)
            if residuals is not None:
                residuals.append(norm)
            solutions.append((n_pol, p_pol))
        return sorted(solutions)

    def solve_stationary_system(self, proc: ProcedureSpec) -> List[Tuple[float, float]]:
        """All (n, p) in (c, n_max] x (0, UCP] with t(n, p) = 1 and dt/dn = 0"""
        if proc.integer_only:
            return []
        grid = np.geomspace(proc.c + self.boundary_offset, self.n_max, self.classification_steps)
        return self._stationary_from_grid(proc, grid)

    # Boundary limits

    def limit_at_c(self, proc: ProcedureSpec) -> float:
        """lim p_n as n -> c+, two-node Richardson extrapolation in the offset"""
        h = self.boundary_offset
        near = self.solve_p_n(proc, proc.c + h)
        nearer = self.solve_p_n(proc, proc.c + 2.0 * h)
        return float(min(max(2.0 * near - nearer, 0.0), UCP))

    def limit_at_infinity(self, proc: ProcedureSpec) -> float:
        """lim p_n as n -> infinity, extrapolated in 1/n from the Richardson nodes"""
        values = [self.solve_p_n(proc, node) for node in self.richardson_nodes]
        inverse = [1.0 / node for node in self.richardson_nodes]
        return float(min(max(extrapolate_to_zero(inverse, values), 0.0), UCP))

    # Classification

    def classify_and_find_cocp(self, proc: ProcedureSpec) -> CutPointResult:
        """Bifurcation type and continuous cut-point"""
        if not proc.satisfies_m1:
            raise AssumptionViolationError(
                f"{proc.name} is not continuously differentiable in n; the curve method does not apply",
                proc.name,
                ["(M1)"],
            )
        curve = self.trace_curve(proc, proc.c, self.n_max, self.classification_steps)
        p_values = np.array(curve.p_values)
        n_values = np.array(curve.n_values)
        top = int(np.argmax(p_values))
        curve_max = float(p_values[top])
        limit_c = self.limit_at_c(proc)
        limit_inf = self.limit_at_infinity(proc)
        diagnostics = {
            "curve_max": curve_max,
            "curve_argmax": float(n_values[top]),
            "samples": float(len(p_values)),
        }

        if float(np.max(p_values) - np.min(p_values)) < self.flatness_tolerance:
            logger.info("%s: flat curve, type b0", proc.name)
            return CutPointResult(
                procedure=proc.name,
                cocp=float(p_values[0]),
                bifurcation_type=BifurcationType.B0,
                n_star=float(n_values[top]),
                limit_at_c=limit_c,
                limit_at_infinity=limit_inf,
                diagnostics=diagnostics,
            )

        residuals: List[float] = []
        solutions = self._stationary_from_grid(proc, n_values, curve.p_values, residuals)
        if residuals:
            diagnostics["newton_residual"] = max(residuals)
        if solutions:
            n_best, p_best = max(solutions, key=lambda s: s[1])
            if p_best >= curve_max - self.flatness_tolerance:
                logger.info("%s: interior maximum at n=%.9g, type b2", proc.name, n_best)
                return CutPointResult(
                    procedure=proc.name,
                    cocp=p_best,
                    bifurcation_type=BifurcationType.B2,
                    n_star=n_best,
                    limit_at_c=limit_c,
                    limit_at_infinity=limit_inf,
                    system_solutions=solutions,
                    diagnostics=diagnostics,
                )

        logger.info("%s: supremum on the boundary, type b1", proc.name)
        return CutPointResult(
            procedure=proc.name,
            cocp=max(limit_c, limit_inf),
            bifurcation_type=BifurcationType.B1,
            limit_at_c=limit_c,
            limit_at_infinity=limit_inf,
            system_solutions=solutions,
            diagnostics=diagnostics,
        )

    # Extended domain

    def scan_all_roots(self, proc: ProcedureSpec, n: float) -> List[float]:
        """Every root of t(n, p) = 1 in [p_floor, UCP], for any n where t is defined"""
        if proc.integer_only:
            raise DomainError(f"{proc.name} is defined for integer n only", proc.name)
        if not n > proc.extended_n_lo:
            raise DomainError(f"n must exceed {proc.extended_n_lo} for {proc.name}, got {n}", proc.name)
        n = float(n)
        grid = np.linspace(self.p_floor, UCP, self.multi_root_points)
        return roots_on_grid(lambda p: float(proc.rate(n, p)) - 1.0, grid)

    def trace_extended(self, proc: ProcedureSpec, n_lo: float, n_hi: float, steps: int) -> List[CurvePoint]:
        """One point per (n, root) pair over a linear n grid, for the extended diagram"""
        if steps < 2 or not n_lo < n_hi:
            raise DomainError(f"need n_lo < n_hi and steps >= 2, got {n_lo}, {n_hi}, {steps}", proc.name)
        grid = np.linspace(n_lo, n_hi, steps)
        with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
            per_n = list(executor.map(lambda n: self.scan_all_roots(proc, float(n)), grid))
        points = []
        for n, roots in zip(grid, per_n):
            for root in roots:
                points.append(
                    CurvePoint(
                        n=float(n),
                        p_n=root,
                        dp_dn=self.implicit_slope(proc, float(n), root),
                        residual=abs(float(proc.rate(float(n), root)) - 1.0),
                    )
                )
        return points


def get_engine(**overrides) -> BifurcationEngine:
    """Engine configured from Config with optional keyword overrides"""
    return BifurcationEngine(**overrides)
