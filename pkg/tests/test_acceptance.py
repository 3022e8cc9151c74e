"""End-to-end acceptance checks, one marker per criterion."""
import math
import time

import numpy as np
import pytest

from sharp_ineq import flow, functionals, mto, special
from sharp_ineq.special import Params
from sharp_ineq.sphere import ZonalFunction, funk_hecke_eigenvalues, riesz_kernel

CORPUS_CASES = [(2, 0.5), (3, 1.0)]
FLOW_LABEL = "flow on 256^2, L = 40: separated shape (1e-3) and exponent (2%), two-bubble identity (1%) and lemma, <5 min"
DUALITY_GRID = [(n, s) for n in (1, 2, 3, 4, 5) for s in (0.1, 0.2, 0.35, 0.45)]


class Timer:
    def __init__(self, limit):
        self.limit = limit

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        if exc[0] is None:
            assert self.elapsed < self.limit, f"took {self.elapsed:.1f} s, limit {self.limit} s"


@pytest.mark.criterion(1, "constants: S(2,1/2), normalized duality on 20 points, A(2) (1e-12, <1 s)")
def test_constants():
    with Timer(1.0):
        assert special.sobolev_constant(Params(2, 0.5)) == pytest.approx(1 / math.sqrt(math.pi), rel=1e-12)
        assert len(DUALITY_GRID) == 20
        for n, s in DUALITY_GRID:
            lhs = special.riesz_constant(n, s) * special.hls_constant(n, n - 2 * s)
            assert lhs == pytest.approx(special.sobolev_constant(Params(n, s)), rel=1e-12)
        assert special.log_kernel_mean(2) == pytest.approx(math.log(4) - 1, abs=1e-12)


@pytest.mark.criterion(2, "Funk-Hecke eigenvalues of the chordal Riesz kernel, k <= 20, Q = 200 (1e-10, <10 s)")
def test_funk_hecke():
    with Timer(10.0):
        for n in (2, 3):
            for s in (0.3, 0.5, 0.9):
                P = Params(n, s)
                lam = funk_hecke_eigenvalues(riesz_kernel(P), n, 20, Q=200)
                g = special.gamma_k(P, np.arange(21))
                assert np.max(np.abs(lam - g) / g) <= 1e-10


@pytest.mark.criterion(3, "sharpness at K = 64 and square identity on 100 functions (1e-9, <30 s)")
def test_sharpness():
    with Timer(30.0):
        for n, s in CORPUS_CASES:
            P = Params(n, s)
            rep = functionals.deficit_report(functionals.aubin_talenti_lift(P), P, K_G=64)
            assert abs(rep.F_value) <= 1e-9 * special.sobolev_constant(P) * rep.sobolev_norm_sq
            assert abs(rep.G_value) <= 1e-9 * rep.hls_energy
        P = Params(2, 0.5)
        for F in functionals.random_corpus(P, 100, seed=2024):
            assert functionals.verify_square_identity(F, P).residual <= 1e-9


@pytest.mark.criterion(4, "main inequality at C = S on the corpus, scaling invariance (1e-9, 1e-12, <30 s)")
def test_main_inequality():
    with Timer(30.0):
        for n, s in CORPUS_CASES:
            P = Params(n, s)
            corpus = functionals.random_corpus(P, 50, seed=2024)
            for F in corpus:
                a = functionals.verify_main_inequality(F, P)
                assert a.margin >= -1e-9 * a.scale
            for F in corpus[:10]:
                a = functionals.verify_main_inequality(F, P)
                b = functionals.verify_main_inequality(F * 2.0, P)
                assert abs(b.margin / b.scale - a.margin / a.scale) <= 1e-12


@pytest.mark.criterion(5, "quotient limit along degree 2 equals the linearized constant, degree 3 lower (1%, <1 min)")
def test_linearized_lower_bound():
    with Timer(60.0):
        for n, s in [(2, 0.5), (3, 1.0), (4, 0.75)]:
            P = Params(n, s)
            lim = functionals.quotient_lower_bound(P, degree=2)
            expected = (n - 2 * s + 2) / (n + 2 * s + 2) * special.sobolev_constant(P)
            assert lim.limit == pytest.approx(expected, rel=0.01)
            assert functionals.quotient_lower_bound(P, degree=3).limit < lim.limit


@pytest.mark.criterion(6, "beta_k/alpha_k maximized at k = 2 up to k = 200, 4/15 at (2,1/2) (1e-12)")
def test_ratio_maximization():
    grid = [(2, 0.5), (2, 0.1), (3, 0.3), (3, 1.0), (3, 1.4), (4, 0.75), (4, 1.9), (5, 2.2), (6, 0.5), (8, 3.0)]
    for n, s in grid:
        P = Params(n, s)
        r = special.ratio_beta_alpha(P, np.arange(3, 201))
        assert np.all(r < special.ratio_beta_alpha(P, 2))
    assert special.ratio_beta_alpha(Params(2, 0.5), 2) == pytest.approx(4 / 15, rel=1e-12)


@pytest.mark.criterion(7, "improved endpoint inequality on 100 functions, constant 1/(n+1) by expansion (1e-9, 1%, <1 min)")
def test_improved_endpoint_inequality():
    with Timer(60.0):
        rng = np.random.default_rng(2024)
        for i in range(100):
            n = 2 + i % 4
            K = int(rng.integers(1, 17))
            F = ZonalFunction(n, rng.normal(size=K + 1) / (1 + np.arange(K + 1)) ** 1.5)
            assert mto.improved_mto_margin(F, 1.0) >= -1e-9
        for n in range(2, 6):
            assert mto.mto_constant_epsilon_bound(n) == pytest.approx(1 / (n + 1), rel=0.01)


@pytest.mark.criterion(8, "endpoint distances halve with t in {0.02, 0.01, 0.005} (+-20%, <1 min)")
def test_endpoint_differentiation():
    with Timer(60.0):
        for n in (2, 3):
            tab = mto.endpoint_limit_check(ZonalFunction(n, [0.0, 0.5, 0.3, -0.2]))
            for which in ("sobolev", "hls"):
                for ratio in tab.halving_ratios(which):
                    assert 0.4 <= ratio <= 0.6


@pytest.fixture(scope="module")
def flow_timer():
    return {"elapsed": 0.0}


@pytest.mark.criterion(9, FLOW_LABEL)
def test_separated_flow(flow_timer):
    P = Params(2, 0.5)
    with Timer(300.0) as t:
        v0 = flow.separated_solution(P, 40.0, 256)
        state = flow.fde_run(v0, P, 0.5)
    flow_timer["elapsed"] += t.elapsed
    v, w = state.field.values, v0.values
    assert np.abs(v / v.max() - w / w.max()).max() <= 1e-3
    fit = flow.fit_extinction(state.column("t"), state.column("J"))
    assert abs(fit.exponent - 2) <= 0.02 * 2


@pytest.mark.criterion(9, FLOW_LABEL)
def test_two_bubble_flow(flow_timer):
    P = Params(2, 0.5)
    with Timer(300.0) as t:
        state = flow.fde_run(flow.two_bubble_datum(P, 40.0, 256), P, 0.3, record_every=100)
    flow_timer["elapsed"] += t.elapsed
    times = state.column("t")
    mid = int(np.argmin(np.abs(times - times[-1] / 2)))
    assert flow.identity_residuals(state)[mid] <= 0.01
    lemma = flow.verify_comparison_lemma(state)
    assert lemma.status == "holds"
    assert lemma.conclusive.sum() >= len(times) // 2
    assert flow_timer["elapsed"] < 300.0


@pytest.mark.criterion(10, "improved nonlinear inequality with C = 1 (1e-8), phi properties on a grid (<30 s)")
def test_phi_improvement():
    with Timer(30.0):
        for n, s in [(2, 0.5), (3, 0.8), (4, 0.3)]:
            P = Params(n, s)
            for F in functionals.random_corpus(P, 20, seed=2024):
                chk = flow.verify_improved_nonlinear(F, P, C=1.0)
                assert chk.margin >= -1e-8 * chk.scale
        for C in np.linspace(0.05, 1.0, 20):
            gain = flow.PhiGain(C)
            assert gain(0.0) == 0
            x = np.linspace(0.0, 20.0, 801)
            y = gain(x)
            assert np.all(y <= x)
            off = np.abs(x - gain.crossover) > 1e-9
            assert np.all(((y <= C * x) == (x >= gain.crossover))[off & (x > 0)])
