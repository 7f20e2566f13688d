"""Scalar root finding, sign-change scans and extrapolation helpers"""
import logging
from typing import Callable, List, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

logger = logging.getLogger(__name__)

MACHINE_EPS = float(np.finfo(float).eps)


def find_root(
    f: Callable[[float], float],
    a: float,
    b: float,
    xtol: float = 1e-15,
    rtol: float = 4 * MACHINE_EPS,
    maxiter: int = 200,
) -> float:
    """Root of f on the bracket [a, b]; f(a) and f(b) must differ in sign"""
    return float(brentq(f, a, b, xtol=xtol, rtol=rtol, maxiter=maxiter))


def sign_change_brackets(xs: Sequence[float], values: Sequence[float]) -> List[Tuple[float, float]]:
    """Consecutive grid intervals on which values change sign

    A value that is exactly zero yields a degenerate bracket (x, x).
    """
    xs = np.asarray(xs, dtype=float)
    values = np.asarray(values, dtype=float)
    brackets: List[Tuple[float, float]] = []
    for i in range(len(xs)):
        if values[i] == 0.0:
            brackets.append((xs[i], xs[i]))
            continue
        if i + 1 < len(xs) and values[i + 1] != 0.0 and np.sign(values[i]) != np.sign(values[i + 1]):
            if np.isfinite(values[i]) and np.isfinite(values[i + 1]):
                brackets.append((xs[i], xs[i + 1]))
    return brackets


def roots_on_grid(f: Callable[[float], float], grid: Sequence[float], xtol: float = 1e-15) -> List[float]:
    """All roots of f detected by sign changes over grid, each refined by brentq"""
    grid = np.asarray(grid, dtype=float)
    values = np.array([f(x) for x in grid], dtype=float)
    roots = []
    for lo, hi in sign_change_brackets(grid, values):
        roots.append(lo if lo == hi else find_root(f, lo, hi, xtol=xtol))
    return roots


def extrapolate_to_zero(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Richardson-style extrapolation: value at x = 0 of the interpolating polynomial"""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    coeffs = np.polyfit(xs, ys, deg=len(xs) - 1)
    return float(np.polyval(coeffs, 0.0))


def newton_2d(
    residual: Callable[[np.ndarray], np.ndarray],
    jacobian: Callable[[np.ndarray], np.ndarray],
    x0: Sequence[float],
    tol: float,
    max_iter: int,
) -> Tuple[np.ndarray, float]:
    """Newton iterations for a 2x2 system; returns the best point and its residual norm"""
    x = np.asarray(x0, dtype=float)
    best_x = x.copy()
    best_norm = float(np.max(np.abs(residual(x))))
    for _ in range(max_iter):
        if best_norm < tol:
            break
        try:
            step = np.linalg.solve(jacobian(x), residual(x))
        except np.linalg.LinAlgError:
            logger.warning("singular Jacobian at %s, keeping best iterate", x)
            break
        x = x - step
        norm = float(np.max(np.abs(residual(x))))
        if not np.isfinite(norm):
            break
        if norm < best_norm:
            best_x, best_norm = x.copy(), norm
    return best_x, best_norm
