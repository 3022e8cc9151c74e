import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sharp_ineq.errors import PositivityError, PreconditionError, RangeError
from sharp_ineq.functionals import (
    F_deficit,
    G_deficit,
    aubin_talenti,
    aubin_talenti_lift,
    aubin_talenti_mass,
    coordinate_lift,
    deficit_report,
    dilate_lift,
    harmonic_lift,
    hls_energy,
    lq_integral,
    linearized_F,
    linearized_G,
    poincare_check,
    poincare_gap,
    power_lift,
    quotient_lower_bound,
    random_corpus,
    random_positive_lift,
    richardson_zero,
    sharp_linear_ratio,
    sobolev_norm_sq,
    verify_main_inequality,
    verify_square_identity,
    weighted_l2,
    weighted_pairing,
)
from sharp_ineq.special import Params, gamma_fn, gamma_k, sobolev_constant, sphere_area
from sharp_ineq.sphere import ZonalFunction

CASES = [(2, 0.5), (3, 1.0), (4, 0.75), (3, 0.3)]


def kappa(n, s, shift=0):
    return 2 ** (2 * s) * gamma_fn((n + 2 * s + shift) / 2) / gamma_fn((n - 2 * s + shift) / 2)


def test_aubin_talenti_profile_and_mass():
    P = Params(2, 0.5)
    assert aubin_talenti(P)(0.0) == 1
    assert aubin_talenti_mass(P) == pytest.approx(math.pi, rel=1e-14)
    assert lq_integral(aubin_talenti_lift(P), P) == pytest.approx(math.pi, rel=1e-13)


@pytest.mark.parametrize("n,s", CASES)
def test_extremal_norms_closed_form(n, s):
    # (-Delta)^s u_* = kappa u_*^{r}: pairing with u_* gives kappa int u_*^q
    P = Params(n, s)
    F = aubin_talenti_lift(P)
    mass = aubin_talenti_mass(P)
    assert sobolev_norm_sq(F, P) == pytest.approx(kappa(n, s) * mass, rel=1e-10)
    assert hls_energy(power_lift(F, P), P) == pytest.approx(mass / kappa(n, s), rel=1e-10)


@pytest.mark.parametrize("n,s", CASES)
def test_extremal_has_zero_deficits(n, s):
    P = Params(n, s)
    rep = deficit_report(aubin_talenti_lift(P), P, K_G=64)
    assert abs(rep.F_value) <= 1e-9 * sobolev_constant(P) * rep.sobolev_norm_sq
    assert abs(rep.G_value) <= 1e-9 * rep.hls_energy


@pytest.mark.parametrize("n,s", CASES)
def test_eigen_relations_of_f0_and_coordinate(n, s):
    P = Params(n, s)
    f0, f1 = aubin_talenti_lift(P), coordinate_lift(P)
    assert sobolev_norm_sq(f0, P) == pytest.approx(kappa(n, s) * weighted_l2(f0, P), rel=1e-12)
    assert sobolev_norm_sq(f1, P) == pytest.approx(kappa(n, s, 2) * weighted_l2(f1, P), rel=1e-12)
    assert weighted_pairing(f0, f1, P) == 0


def test_zero_and_single_modes():
    P = Params(3, 0.6)
    zero = ZonalFunction(3, [0.0, 0.0])
    assert sobolev_norm_sq(zero, P) == 0 and hls_energy(zero, P) == 0
    vals = [sobolev_norm_sq(harmonic_lift(P, k), P) for k in (1, 2, 4, 8)]
    assert vals[0] == pytest.approx(sphere_area(3) / gamma_k(P, 1))
    assert np.all(np.diff(vals) > 0)


@given(st.lists(st.floats(-1, 1), min_size=1, max_size=12))
def test_energy_spectral_bound(c):
    P = Params(2, 0.5)
    g = ZonalFunction(2, [0.0, 0.0] + c)
    # absolute slack covers squares that underflow to subnormals
    assert hls_energy(g, P) <= gamma_k(P, 2) * sphere_area(2) * g.l2_sq() * (1 + 1e-14) + 1e-300


def test_negative_lift_rejected():
    P = Params(2, 0.5)
    with pytest.raises(PositivityError):
        deficit_report(ZonalFunction(2, [0.1, 1.0]), P)


def test_G_deficit_of_extremal():
    P = Params(3, 1.0)
    G = power_lift(aubin_talenti_lift(P), P)
    assert abs(G_deficit(G, P)) <= 1e-10 * hls_energy(G, P)
    assert abs(F_deficit(aubin_talenti_lift(P), P)) <= 1e-10


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from(CASES))
def test_deficits_nonnegative(seed, ns):
    P = Params(*ns)
    F = random_positive_lift(P, np.random.default_rng(seed))
    rep = deficit_report(F, P)
    assert rep.F_value >= -1e-9 * sobolev_constant(P) * rep.sobolev_norm_sq
    assert rep.G_value >= -1e-9 * rep.hls_energy


@pytest.mark.parametrize("n,s", CASES)
def test_square_identity_on_corpus(n, s):
    P = Params(n, s)
    for F in random_corpus(P, 10, seed=7) + [aubin_talenti_lift(P)]:
        sq = verify_square_identity(F, P)
        assert sq.residual <= 1e-9
        assert sq.square >= -1e-12 * sq.scale


@pytest.mark.parametrize("c", [0.5, 2.0, 7.0])
def test_homogeneity(c):
    P = Params(3, 1.0)
    F = random_corpus(P, 1, seed=3)[0]
    a, b = deficit_report(F, P), deficit_report(F * c, P)
    assert b.F_value == pytest.approx(c * c * a.F_value, rel=1e-10)
    ma, mb = verify_main_inequality(F, P), verify_main_inequality(F * c, P)
    assert mb.margin / mb.scale == pytest.approx(ma.margin / ma.scale, rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("factor", [0.5, 1.7])
def test_dilation_invariance(factor):
    P = Params(2, 0.5)
    F = ZonalFunction(2, [0.7, 0.1, -0.05, 0.02], 0.5)
    a = verify_main_inequality(F, P)
    b = verify_main_inequality(dilate_lift(F, P, factor), P)
    assert b.margin / b.scale == pytest.approx(a.margin / a.scale, rel=1e-7, abs=1e-12)


def test_main_inequality_holds_at_sharp_constant():
    P = Params(2, 0.5)
    checks = [verify_main_inequality(F, P) for F in random_corpus(P, 20, seed=1)]
    assert all(c.holds for c in checks)


@pytest.mark.parametrize("n,s", CASES)
def test_linearized_ratio_on_degree_two(n, s):
    P = Params(n, s)
    f = harmonic_lift(P, 2, 0.3)
    ratio = linearized_G(f, P) / linearized_F(f, P)
    g = gamma_fn((n - 2 * s + 2) / 2) / gamma_fn((n + 2 * s + 2) / 2)
    expected = 2 ** (-4 * s) * (n - 2 * s + 2) / (n + 2 * s + 2) * g * g
    assert ratio == pytest.approx(expected, rel=1e-12)
    assert ratio == pytest.approx(sharp_linear_ratio(P), rel=1e-12)
    f3 = harmonic_lift(P, 3)
    assert linearized_G(f3, P) / linearized_F(f3, P) < ratio


def test_coordinate_directions_are_flat():
    P = Params(3, 0.8)
    assert linearized_F(coordinate_lift(P), P) == pytest.approx(0, abs=1e-14)


def test_linearization_needs_orthogonality():
    P = Params(2, 0.5)
    with pytest.raises(PreconditionError):
        linearized_F(ZonalFunction(2, [0.1, 0.0, 1.0]), P)


def test_poincare():
    P = Params(3, 1.0)
    h2 = harmonic_lift(P, 2)
    assert abs(poincare_gap(h2, P)) <= 1e-10 * weighted_l2(h2, P)
    h5 = harmonic_lift(P, 5)
    gap = poincare_gap(h5, P)
    expected = sphere_area(3) * (1 / gamma_k(P, 5) - 1 / gamma_k(P, 2))
    assert gap == pytest.approx(expected, rel=1e-12)
    assert poincare_check(h5, P)
    with pytest.raises(PreconditionError):
        poincare_check(coordinate_lift(P), P)


def test_richardson_exact_on_polynomials():
    eps = [0.4, 0.2, 0.1]
    assert richardson_zero(eps, [3 + 2 * e - e * e for e in eps]) == pytest.approx(3, rel=1e-13)


@pytest.mark.parametrize("n,s", [(2, 0.5), (3, 1.0), (4, 0.75)])
def test_quotient_limit(n, s):
    P = Params(n, s)
    lim = quotient_lower_bound(P)
    assert lim.rel_error <= 0.01
    assert lim.expected == pytest.approx((n - 2 * s + 2) / (n + 2 * s + 2) * sobolev_constant(P), rel=1e-12)
    assert quotient_lower_bound(P, degree=3).limit < lim.limit


def test_quotient_error_shrinks_with_eps():
    P = Params(3, 1.0)
    lim = quotient_lower_bound(P)
    err = np.abs(np.array(lim.quotients) - lim.expected)
    assert np.all(np.diff(err) < 0)


def test_quotient_rejects_large_amplitudes():
    P = Params(2, 0.5)
    with pytest.raises((RangeError, PositivityError)):
        quotient_lower_bound(P, epsilons=(2.0, 1.0, 0.5, 0.25))
