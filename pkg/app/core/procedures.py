"""Registry of binomial group testing procedures

Each procedure exposes its per-item rate t(n, p), cohort mean M(n, p) and,
where closed forms exist, partial derivatives of t. Rates accept scalars or
numpy arrays. Powers q**n are evaluated as exp(n * log1p(-p)) so that they
stay exact for real n and tiny p.
"""
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np

from app.core.errors import DomainError, UnknownProcedureError

UCP: float = (3.0 - math.sqrt(5.0)) / 2.0

# Below this p the Sterrett formula is replaced by its limit 1/n
STERRETT_LIMIT_P = 1e-12

RateFn = Callable[..., float]


def ucp() -> float:
    """Universal cut-point (3 - sqrt(5)) / 2"""
    return UCP


@dataclass(frozen=True)
class Prevalence:
    """Probability of defectiveness with its complement q = 1 - p"""

    p: float
    closed: bool = False

    def __post_init__(self):
        check_prevalence(self.p, closed=self.closed)

    @property
    def q(self) -> float:
        return 1.0 - self.p


def check_prevalence(p, closed: bool = False):
    """Validate p in (0, 1), or [0, 1] when closed"""
    arr = np.asarray(p, dtype=float)
    if closed:
        bad = np.any((arr < 0.0) | (arr > 1.0) | ~np.isfinite(arr))
    else:
        bad = np.any((arr <= 0.0) | (arr >= 1.0) | ~np.isfinite(arr))
    if bad:
        interval = "[0, 1]" if closed else "(0, 1)"
        raise DomainError(f"prevalence must lie in {interval}, got {p!r}")
    return arr


def check_cohort_param(n, lower: float = 0.0):
    """Validate the continuous cohort parameter n > lower"""
    arr = np.asarray(n, dtype=float)
    if np.any((arr <= lower) | ~np.isfinite(arr)):
        raise DomainError(f"cohort parameter must exceed {lower}, got {n!r}")
    return arr


def check_integer_cohort(n):
    """Validate n as a positive integer (scalar or array)"""
    arr = np.asarray(n, dtype=float)
    if np.any((arr < 1.0) | (np.mod(arr, 1.0) != 0.0)):
        raise DomainError(f"cohort parameter must be a positive integer, got {n!r}")
    return arr


def _q_pow(n, p):
    """q**n as exp(n * log(1 - p))"""
    return np.exp(n * np.log1p(-p))


def _one_minus_q_pow(n, p):
    """1 - q**n without cancellation"""
    return -np.expm1(n * np.log1p(-p))


# Dorfman (D)

def rate_dorfman(n, p):
    n = check_cohort_param(n)
    p = check_prevalence(p)
    return 1.0 / n + _one_minus_q_pow(n, p)


def mean_dorfman(n, p):
    n = check_cohort_param(n)
    p = check_prevalence(p)
    return 1.0 + n * _one_minus_q_pow(n, p)


def dt_dn_dorfman(n, p):
    return -1.0 / n**2 - _q_pow(n, p) * np.log1p(-p)


def dt_dp_dorfman(n, p):
    return n * _q_pow(n - 1.0, p)


def d2t_dn2_dorfman(n, p):
    return 2.0 / n**3 - _q_pow(n, p) * np.log1p(-p) ** 2


def analytic_p_n_dorfman(n):
    """p_n = 1 - (1/n)**(1/n)"""
    return -np.expm1(-np.log(n) / n)


# Squared array (A2), cohort n**2

def rate_a2(n, p):
    n = check_cohort_param(n)
    p = check_prevalence(p)
    return 2.0 / n + _one_minus_q_pow(n, p) ** 2 + p * _q_pow(2.0 * n - 1.0, p)


def mean_a2(n, p):
    n = check_cohort_param(n)
    p = check_prevalence(p)
    return 2.0 * n + n**2 * (_one_minus_q_pow(n, p) ** 2 + p * _q_pow(2.0 * n - 1.0, p))


def dt_dn_a2(n, p):
    return -2.0 / n**2 - 2.0 * _q_pow(n, p) * np.log1p(-p) * _one_minus_q_pow(n - 1.0, p)


def dt_dp_a2(n, p):
    return 2.0 * n * _q_pow(n - 1.0, p) - (2.0 * n - 1.0) * _q_pow(2.0 * n - 2.0, p)


def d2t_dn2_a2(n, p):
    log_q = np.log1p(-p)
    return 4.0 / n**3 - 2.0 * _q_pow(n, p) * log_q**2 * (1.0 - 2.0 * _q_pow(n - 1.0, p))


# Modified Dorfman (MD): the last individual test is inferred

def rate_md(n, p):
    n = check_cohort_param(n)
    p = check_prevalence(p)
    return _one_minus_q_pow(n, p) + (1.0 - p * _q_pow(n - 1.0, p)) / n


def mean_md(n, p):
    n = check_cohort_param(n)
    p = check_prevalence(p)
    return n * _one_minus_q_pow(n, p) + 1.0 - p * _q_pow(n - 1.0, p)


def dt_dn_md(n, p):
    log_q = np.log1p(-p)
    q_n1 = _q_pow(n - 1.0, p)
    return -_q_pow(n, p) * log_q - (1.0 - p * q_n1) / n**2 - p * q_n1 * log_q / n


def dt_dp_md(n, p):
    return _q_pow(n - 1.0, p) * (n - 1.0 / n) + (n - 1.0) / n * p * _q_pow(n - 2.0, p)


# Sterrett (S)

def _sterrett_geometric_sum(n, p):
    """(1 - q**(n+1)) / (1 - q)"""
    return _one_minus_q_pow(n + 1.0, p) / p


def rate_sterrett(n, p):
    n = check_cohort_param(n)
    p = check_prevalence(p)
    n, p = np.broadcast_arrays(n, p)
    safe_p = np.where(p < STERRETT_LIMIT_P, STERRETT_LIMIT_P, p)
    q = 1.0 - safe_p
    value = 2.0 - q + (2.0 * q - _sterrett_geometric_sum(n, safe_p)) / n
    result = np.where(p < STERRETT_LIMIT_P, 1.0 / n, value)
    return result[()] if result.ndim == 0 else result


def mean_sterrett(n, p):
    n_arr = check_cohort_param(n)
    return rate_sterrett(n, p) * n_arr


# Pairwise testing (PT): integer n only, (-q)**n has no smooth extension

def mean_pt(n, p):
    n = check_integer_cohort(n)
    p = check_prevalence(p)
    q = 1.0 - p
    alternating = np.power(-q, n)
    return n * (2.0 - q**2) / (1.0 + q) + (q**2 + q - 1.0) / (1.0 + q) ** 2 * (1.0 - alternating)


def rate_pt(n, p):
    return mean_pt(n, p) / np.asarray(n, dtype=float)


# Halving (H): integer n, cohort 2**n

def mean_halving(n, p):
    n_arr = check_integer_cohort(n)
    p_arr = check_prevalence(p, closed=True)
    n_arr, p_arr = np.broadcast_arrays(n_arr, p_arr)
    q = 1.0 - p_arr
    total = np.zeros(n_arr.shape, dtype=float)
    for k in range(1, int(np.max(n_arr)) + 1):
        term = (1.0 - q ** (2.0**k)) / 2.0**k
        total = total + np.where(k <= n_arr, term, 0.0)
    result = 1.0 + 2.0 ** (n_arr + 1.0) * total
    return result[()] if result.ndim == 0 else result


def rate_halving(n, p):
    return mean_halving(n, p) / 2.0 ** np.asarray(n, dtype=float)


@dataclass(frozen=True)
class ProcedureSpec:
    """A registered procedure and everything the engine needs to evaluate it"""

    name: str
    c: float
    cohort_size: Callable
    cohort_law: str
    rate: RateFn
    mean: RateFn
    dt_dn: Optional[RateFn] = None
    dt_dp: Optional[RateFn] = None
    d2t_dn2: Optional[RateFn] = None
    analytic_p_n: Optional[Callable] = None
    satisfies_m1: bool = True
    integer_only: bool = False
    simulatable: bool = False
    # Lower end (exclusive) of the extended domain where t is still defined
    extended_n_lo: float = 0.0
    description: str = ""

    def __post_init__(self):
        if self.c < 2:
            raise DomainError(f"domain constant c must be >= 2, got {self.c}", self.name)

    def partial_n(self, n, p):
        """dt/dn, closed form when registered, else a central difference"""
        if self.dt_dn is not None:
            return self.dt_dn(n, p)
        h = 1e-6 * max(1.0, abs(float(n)))
        return (self.rate(n + h, p) - self.rate(n - h, p)) / (2.0 * h)

    def partial_p(self, n, p):
        """dt/dp, closed form when registered, else a central difference"""
        if self.dt_dp is not None:
            return self.dt_dp(n, p)
        h = 1e-6 * float(p)
        return (self.rate(n, p + h) - self.rate(n, p - h)) / (2.0 * h)

    def second_partial_n(self, n, p):
        """d2t/dn2"""
        if self.d2t_dn2 is not None:
            return self.d2t_dn2(n, p)
        if self.dt_dn is not None:
            h = 1e-6 * max(1.0, abs(float(n)))
            return (self.dt_dn(n + h, p) - self.dt_dn(n - h, p)) / (2.0 * h)
        h = 1e-4 * max(1.0, abs(float(n)))
        return (self.rate(n + h, p) - 2.0 * self.rate(n, p) + self.rate(n - h, p)) / h**2

    def mixed_partial(self, n, p):
        """d2t/dn dp by a central difference of partial_n in p"""
        h = 1e-6 * float(p)
        return (self.partial_n(n, p + h) - self.partial_n(n, p - h)) / (2.0 * h)


_REGISTRY: Dict[str, ProcedureSpec] = {
    spec.name: spec
    for spec in (
        ProcedureSpec(
            name="dorfman",
            c=2.0,
            cohort_size=lambda n: n,
            cohort_law="n",
            rate=rate_dorfman,
            mean=mean_dorfman,
            dt_dn=dt_dn_dorfman,
            dt_dp=dt_dp_dorfman,
            d2t_dn2=d2t_dn2_dorfman,
            analytic_p_n=analytic_p_n_dorfman,
            simulatable=True,
            description="pool test, then every item individually if the pool is positive",
        ),
        ProcedureSpec(
            name="md",
            c=2.0,
            cohort_size=lambda n: n,
            cohort_law="n",
            rate=rate_md,
            mean=mean_md,
            dt_dn=dt_dn_md,
            dt_dp=dt_dp_md,
            simulatable=True,
            description="Dorfman with the last individual test inferred",
        ),
        ProcedureSpec(
            name="sterrett",
            c=2.0,
            cohort_size=lambda n: n,
            cohort_law="n",
            rate=rate_sterrett,
            mean=mean_sterrett,
            simulatable=True,
            description="pool, test one by one up to the first positive, re-pool the rest",
        ),
        ProcedureSpec(
            name="a2",
            c=3.0,
            cohort_size=lambda n: n**2,
            cohort_law="n^2",
            rate=rate_a2,
            mean=mean_a2,
            dt_dn=dt_dn_a2,
            dt_dp=dt_dp_a2,
            d2t_dn2=d2t_dn2_a2,
            simulatable=True,
            description="n x n array, row and column pools, retest doubly positive cells",
        ),
        ProcedureSpec(
            name="pt",
            c=2.0,
            cohort_size=lambda n: n,
            cohort_law="n",
            rate=rate_pt,
            mean=mean_pt,
            satisfies_m1=False,
            integer_only=True,
            description="pairwise nested testing, integer n only",
        ),
        ProcedureSpec(
            name="halving",
            c=2.0,
            cohort_size=lambda n: 2.0**n,
            cohort_law="2^n",
            rate=rate_halving,
            mean=mean_halving,
            satisfies_m1=False,
            integer_only=True,
            description="recursive binary splitting of 2^n items",
        ),
    )
}


def get_procedure(name: str) -> ProcedureSpec:
    """Look up a registered procedure by name"""
    try:
        return _REGISTRY[name.lower()]
    except KeyError:
        known = ", ".join(_REGISTRY)
        raise UnknownProcedureError(f"unknown procedure '{name}' (known: {known})", name)


def list_procedures() -> List[ProcedureSpec]:
    """All registered procedures in registration order"""
    return list(_REGISTRY.values())
