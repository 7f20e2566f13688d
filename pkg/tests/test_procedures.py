import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from app.core.errors import DomainError, UnknownProcedureError
from app.core.procedures import (
    UCP,
    Prevalence,
    ProcedureSpec,
    get_procedure,
    list_procedures,
    mean_dorfman,
    mean_halving,
    mean_pt,
    rate_a2,
    rate_dorfman,
    rate_md,
    rate_pt,
    rate_sterrett,
    ucp,
)

CONTINUOUS = ["dorfman", "md", "sterrett", "a2"]


def test_ucp_constant():
    assert ucp() == UCP
    assert abs(UCP - 0.381966011250105) < 1e-14
    q = 1.0 - UCP
    assert abs(q * q + q - 1.0) < 1e-14


@pytest.mark.parametrize(
    "rate, n, p, expected",
    [
        (rate_a2, 3, 0.1, 7.19241 / 9),
        (rate_md, 3, 0.1, 1.732 / 3),
        (rate_sterrett, 3, 0.1, 1.661 / 3),
        (rate_dorfman, 5, 0.1, 3.04755 / 5),
    ],
)
def test_rate_examples(rate, n, p, expected):
    assert float(rate(n, p)) == pytest.approx(expected, abs=1e-12)


def test_mean_examples():
    assert float(mean_dorfman(5, 0.1)) == pytest.approx(6 - 5 * 0.9**5, abs=1e-12)
    assert float(mean_halving(2, 0.1)) == pytest.approx(2.4478, abs=1e-12)
    assert float(mean_halving(3, 0.0)) == pytest.approx(1.0)
    assert float(mean_halving(1, 1.0)) == pytest.approx(3.0)


@pytest.mark.parametrize("rate", [rate_md, rate_sterrett])
def test_boundary_rate_is_one_at_c(rate):
    assert abs(float(rate(2, UCP)) - 1.0) < 1e-12


def test_dorfman_tends_to_one_over_n_for_tiny_p():
    assert float(rate_dorfman(10, 1e-15)) == pytest.approx(0.1, rel=1e-9)


def test_sterrett_small_p_limit():
    assert float(rate_sterrett(4.0, 1e-13)) == pytest.approx(0.25)
    assert float(rate_sterrett(4.0, 2e-12)) == pytest.approx(0.25, rel=1e-9)


def test_small_prevalence_limits():
    assert float(rate_a2(4.0, 1e-13)) == pytest.approx(0.5, rel=1e-9)
    for n in (2.5, 3.0, 10.0):
        assert float(rate_md(n, 1e-13)) == pytest.approx(1.0 / n, rel=1e-9)
    assert float(mean_pt(2, 1e-13)) == pytest.approx(1.0, abs=1e-9)


def test_pt_equals_one_at_ucp_for_every_integer():
    n = np.arange(2, 51)
    assert np.all(np.abs(rate_pt(n, UCP) - 1.0) < 1e-10)
    assert float(mean_pt(7, UCP)) == pytest.approx(7.0, abs=1e-10)


def test_rates_vectorise():
    n = np.array([2.5, 4.0, 10.0])
    values = rate_dorfman(n, 0.05)
    assert values.shape == (3,)
    assert values[1] == pytest.approx(float(rate_dorfman(4.0, 0.05)))


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1, float("nan")])
def test_prevalence_outside_open_interval(p):
    with pytest.raises(DomainError):
        rate_dorfman(3, p)


def test_prevalence_value_object():
    prevalence = Prevalence(0.25)
    assert prevalence.q == 0.75
    assert Prevalence(0.0, closed=True).q == 1.0
    with pytest.raises(DomainError):
        Prevalence(1.0)


def test_integer_only_procedures_reject_real_n():
    with pytest.raises(DomainError):
        mean_pt(2.5, 0.1)
    with pytest.raises(DomainError):
        mean_halving(0, 0.1)


def test_registry():
    names = [proc.name for proc in list_procedures()]
    assert names == ["dorfman", "md", "sterrett", "a2", "pt", "halving"]
    assert get_procedure("A2").c == 3.0
    assert get_procedure("a2").cohort_size(4) == 16
    assert get_procedure("halving").cohort_size(5) == 32
    assert not get_procedure("pt").satisfies_m1
    with pytest.raises(UnknownProcedureError):
        get_procedure("triangle")


def test_domain_constant_below_two_is_rejected():
    with pytest.raises(DomainError):
        ProcedureSpec(name="bad", c=1.5, cohort_size=lambda n: n, cohort_law="n", rate=rate_dorfman, mean=mean_dorfman)


@settings(max_examples=200, deadline=None)
@given(
    name=st.sampled_from(CONTINUOUS),
    offset=st.floats(min_value=1e-3, max_value=200.0),
    p=st.floats(min_value=1e-9, max_value=UCP),
)
def test_mean_is_cohort_size_times_rate(name, offset, p):
    proc = get_procedure(name)
    n = proc.c + offset
    expected = proc.cohort_size(n) * float(proc.rate(n, p))
    assert float(proc.mean(n, p)) == pytest.approx(expected, rel=1e-12, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(offset=st.floats(min_value=1e-3, max_value=500.0), p=st.floats(min_value=1e-9, max_value=UCP))
def test_md_never_costs_more_than_dorfman(offset, p):
    n = 2.0 + offset
    assert float(rate_md(n, p)) <= float(rate_dorfman(n, p))


@settings(max_examples=150, deadline=None)
@given(
    name=st.sampled_from(["dorfman", "md", "a2"]),
    offset=st.floats(min_value=0.05, max_value=50.0),
    p=st.floats(min_value=1e-3, max_value=UCP - 1e-3),
)
def test_closed_form_partials_match_finite_differences(name, offset, p):
    proc = get_procedure(name)
    n = proc.c + offset
    h_n = 1e-5 * n
    fd_n = (float(proc.rate(n + h_n, p)) - float(proc.rate(n - h_n, p))) / (2 * h_n)
    assert float(proc.dt_dn(n, p)) == pytest.approx(fd_n, rel=1e-5, abs=1e-7)

    h_p = 1e-6 * p
    fd_p = (float(proc.rate(n, p + h_p)) - float(proc.rate(n, p - h_p))) / (2 * h_p)
    assert float(proc.dt_dp(n, p)) == pytest.approx(fd_p, rel=1e-4, abs=1e-5)


@settings(max_examples=100, deadline=None)
@given(
    name=st.sampled_from(["dorfman", "a2"]),
    offset=st.floats(min_value=0.05, max_value=50.0),
    p=st.floats(min_value=1e-3, max_value=UCP - 1e-3),
)
def test_closed_form_curvature_matches_finite_differences(name, offset, p):
    proc = get_procedure(name)
    n = proc.c + offset
    h = 1e-5 * n
    fd = (float(proc.dt_dn(n + h, p)) - float(proc.dt_dn(n - h, p))) / (2 * h)
    assert float(proc.d2t_dn2(n, p)) == pytest.approx(fd, rel=1e-5, abs=1e-7)


def test_sterrett_partials_fall_back_to_finite_differences():
    proc = get_procedure("sterrett")
    assert proc.dt_dn is None
    slope = float(proc.partial_n(5.0, 0.2))
    h = 1e-4
    expected = (float(proc.rate(5.0 + h, 0.2)) - float(proc.rate(5.0 - h, 0.2))) / (2 * h)
    assert slope == pytest.approx(expected, rel=1e-5, abs=1e-8)
    assert math.isfinite(float(proc.second_partial_n(5.0, 0.2)))
