import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sharp_ineq.errors import DomainError, PositivityError, PreconditionError
from sharp_ineq.mto import (
    endpoint_limit_check,
    endpoint_values,
    endpoint_values_closed_form,
    entropy,
    improved_mto_margin,
    improved_mto_report,
    log_hls_deficit,
    log_hls_euclidean_deficit,
    mto_constant_epsilon_bound,
    mto_constant_lower_bound,
    mto_deficit,
    mu_density,
    onofri_euclidean_margin,
)
from sharp_ineq.functionals import richardson_zero
from sharp_ineq.sphere import ZonalFunction, gauss_jacobi, project

coeffs = arrays(np.float64, st.integers(2, 10), elements=st.floats(-0.6, 0.6))


def zonal(n, c):
    c = np.asarray(c, dtype=float)
    return ZonalFunction(n, c / (1 + np.arange(len(c))) ** 1.5)


def test_mto_deficit_zero():
    assert abs(mto_deficit(ZonalFunction(3, [0.0]))) <= 1e-14


@pytest.mark.parametrize("n", [2, 3])
def test_mto_equality_case(n):
    F = project(n, lambda t: -n * np.log(1 - 0.3 * t), K=64)
    assert abs(mto_deficit(F)) <= 1e-7


@pytest.mark.parametrize("n", [2, 3, 5])
def test_mto_deficit_second_order(n):
    eps = [0.02, 0.01, 0.005]
    vals = [mto_deficit(ZonalFunction(n, [0, 0, e])) / e**2 for e in eps]
    assert richardson_zero(eps, vals) == pytest.approx(n / 2, rel=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5), coeffs)
def test_mto_deficit_nonnegative(n, c):
    assert mto_deficit(zonal(n, c)) >= -1e-12


@pytest.mark.parametrize("n", [2, 3, 4])
def test_log_hls_constant_density(n):
    assert abs(log_hls_deficit(ZonalFunction(n, [1.0]))) <= 1e-12


def test_log_hls_quadratic_in_amplitude():
    d1 = log_hls_deficit(ZonalFunction(2, [1.0, 0.0, 0.02]))
    d2 = log_hls_deficit(ZonalFunction(2, [1.0, 0.0, 0.04]))
    assert d1 > 0
    assert d2 / d1 == pytest.approx(4, rel=0.02)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 4), arrays(np.float64, 6, elements=st.floats(-0.1, 0.1)))
def test_log_hls_nonnegative(n, c):
    F = ZonalFunction(n, np.concatenate([[1.0], c / (1 + np.arange(1, 7)) ** 2]))
    assert log_hls_deficit(F) >= -1e-12


def test_log_hls_preconditions():
    with pytest.raises(PreconditionError):
        log_hls_deficit(ZonalFunction(2, [2.0]))
    with pytest.raises(PositivityError):
        log_hls_deficit(ZonalFunction(2, [1.0, 2.0]))


def test_entropy_jensen():
    quad = gauss_jacobi(3, 200)
    assert abs(entropy(np.full(200, 2.5), quad)) <= 1e-12
    vals = np.exp(ZonalFunction(3, [0, 0.3, 0.1]).at_nodes(200))
    assert entropy(vals, quad) > 0


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 5), coeffs)
def test_improved_margin_nonnegative(n, c):
    rep = improved_mto_report(zonal(n, c))
    assert rep.margin >= -1e-9 * rep.scale


@pytest.mark.parametrize("n", [2, 4])
def test_constant_margin_vanishes(n):
    rep = improved_mto_report(ZonalFunction(n, [0.7]))
    assert abs(rep.margin) <= 1e-12 * rep.scale


@pytest.mark.parametrize("c", [-1.0, 0.3, 2.0])
def test_shift_rescales_margin(c):
    F = zonal(3, [0.2, 0.5, -0.3, 0.4])
    assert improved_mto_margin(F + c) == pytest.approx(math.exp(2 * c) * improved_mto_margin(F), rel=1e-10)


def test_general_form_reduces_to_mean_zero_form():
    # the general bracket carries + mean; substituting F - mean gives the mean-free form
    F = zonal(2, [0.4, 0.5, -0.3, 0.4])
    G = F + (-F.mean())
    rep, rep0 = improved_mto_report(F), improved_mto_report(G)
    assert rep0.mean == pytest.approx(0, abs=1e-15)
    assert rep.margin == pytest.approx(math.exp(2 * F.mean()) * rep0.margin, rel=1e-10)
    assert np.sign(rep.margin) == np.sign(rep0.margin)


@pytest.mark.parametrize("n,k", [(2, 2), (2, 3), (3, 2), (4, 4)])
@pytest.mark.parametrize("C", [1.0, 0.5])
def test_margin_second_order(n, k, C):
    c = np.zeros(k + 1)
    c[k] = 1.0
    F = ZonalFunction(n, c)
    eps = [0.02, 0.01, 0.005]
    vals = [improved_mto_margin(F * e, C) / e**2 for e in eps]
    x = math.exp(math.lgamma(n + k) - math.lgamma(n + 1) - math.lgamma(k))
    expected = 0.5 * (C * (x - 1) - (1 - 1 / x))
    assert richardson_zero(eps, vals) == pytest.approx(expected, rel=1e-5, abs=1e-9)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_constant_lower_bound(n):
    assert mto_constant_lower_bound(n) == pytest.approx(1 / (n + 1), rel=1e-12)
    assert mto_constant_epsilon_bound(n) == pytest.approx(1 / (n + 1), rel=1e-2)


def test_lower_bound_needs_dimension_two():
    with pytest.raises(DomainError):
        mto_constant_lower_bound(1)


def test_endpoint_zero_function():
    tab = endpoint_limit_check(ZonalFunction(2, [0.0, 0.0]))
    for row in tab.sobolev + tab.hls:
        assert row.abs_error <= 1e-10 * max(1.0, abs(row.limit))


@pytest.mark.parametrize("n", [2, 3])
def test_endpoint_errors_halve(n):
    tab = endpoint_limit_check(ZonalFunction(n, [0.0, 0.0, 0.4]))
    for which in ("sobolev", "hls"):
        for ratio in tab.halving_ratios(which):
            assert 0.4 <= ratio <= 0.6


def test_endpoint_closed_form_agrees():
    F = ZonalFunction(2, [0.0, 0.3, 0.2])
    a = endpoint_values(F, 0.01)
    b = endpoint_values_closed_form(F, 0.01)
    assert a == pytest.approx(b, rel=1e-9)


def test_endpoint_csv_columns():
    tab = endpoint_limit_check(ZonalFunction(2, [0.0, 0.0, 0.4]), t_sequence=(0.02, 0.01))
    lines = tab.to_csv("hls").splitlines()
    assert lines[0] == "t,s,lhs,limit,abs_error"
    assert len(lines) == 3


def test_endpoint_preconditions():
    with pytest.raises(PreconditionError):
        endpoint_limit_check(ZonalFunction(2, [0.5, 0.1]))
    with pytest.raises(PositivityError):
        endpoint_values(ZonalFunction(2, [0.0, 30.0]), 0.1)


def test_euclidean_log_hls_at_mu():
    assert abs(log_hls_euclidean_deficit(mu_density)) <= 1e-10


def test_onofri_zero_function():
    for C2 in (1.0, 1 / 3):
        assert abs(onofri_euclidean_margin(ZonalFunction(2, [0.0]), C2)) <= 1e-12


@settings(max_examples=20, deadline=None)
@given(arrays(np.float64, 5, elements=st.floats(-0.3, 0.3)))
def test_onofri_matches_sphere_and_holds(c):
    F = zonal(2, c)
    m = onofri_euclidean_margin(F)
    assert m >= -1e-8
    assert m == pytest.approx(improved_mto_margin(F), rel=1e-9, abs=1e-12)


def test_onofri_lower_bound_active():
    # at C2 = 1/3 the quadratic terms cancel on H_2 and the cubic term is negative
    assert onofri_euclidean_margin(ZonalFunction(2, [0, 0, 0.1]), 1 / 3) < 0


def test_onofri_needs_plane():
    with pytest.raises(DomainError):
        onofri_euclidean_margin(ZonalFunction(3, [0.0]))
