"""Sobolev / HLS deficits, the square-completion identity and the linearization at u_*.

All quadratic forms are evaluated on stereographic lifts, where the fractional
Laplacian and its inverse are diagonal:

    ||u||_s^2            = |S^n| sum_k c_k(F)^2 / gamma_k     (F = q-lift of u)
    int v (-Delta)^{-s} v = |S^n| sum_k gamma_k c_k(G)^2       (G = p-lift of v)
    int u^q dx            = |S^n| int F^q dsigma

and the p-lift of v = u^r is simply F^r.  A perturbation f of u_* is given by
its q-lift directly.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import PositivityError, PreconditionError, RangeError, RegularityError
from .special import Params, gamma_k, linearization_factor, sobolev_constant, sphere_area
from .sphere import (
    DEFAULT_Q,
    ZonalFunction,
    gauss_jacobi,
    project,
    project_values,
    radius_to_t,
    t_to_radius,
)

DEFAULT_KG = 96
ORTHO_TOL = 1e-10
TAIL_TOL = 1e-8


# -- the extremal -----------------------------------------------------------

def aubin_talenti(P: Params):
    """Radial profile r -> (1 + r^2)^{-(n-2s)/2}."""

    def u_star(r):
        return (1 + np.asarray(r, dtype=float) ** 2) ** (-(P.n - 2 * P.s) / 2)

    return u_star


def aubin_talenti_mass(P: Params) -> float:
    """int u_*^q dx = pi^{n/2} Gamma(n/2) / Gamma(n)."""
    return sphere_area(P.n) * 2.0 ** (-P.n)


def aubin_talenti_lift(P: Params) -> ZonalFunction:
    # the q-lift of u_* is the constant 2^{-(n-2s)/2}
    return ZonalFunction(P.n, [2.0 ** (-(P.n - 2 * P.s) / 2)], P.s)


def coordinate_lift(P: Params) -> ZonalFunction:
    """q-lift of f_{n+1} = (|x|^2-1)/(1+|x|^2) u_*, i.e. 2^{-(n-2s)/2} omega_{n+1}."""
    c = 2.0 ** (-(P.n - 2 * P.s) / 2) / np.sqrt(P.n + 1)
    return ZonalFunction(P.n, [0.0, c], P.s)


def harmonic_lift(P: Params, k: int, amplitude: float = 1.0) -> ZonalFunction:
    c = np.zeros(k + 1)
    c[k] = amplitude
    return ZonalFunction(P.n, c, P.s)


# -- norms ------------------------------------------------------------------

def _check_tail(F: ZonalFunction):
    if F.tail > TAIL_TOL * max(F.l2_sq(), 1e-300):
        raise RegularityError(f"projection tail {F.tail:.3e} too large relative to the resolved norm")


def sobolev_norm_sq(F: ZonalFunction, P: Params) -> float:
    """||u||_s^2 from the q-lift F of u."""
    _check_tail(F)
    k = np.arange(F.band_limit + 1)
    return float(sphere_area(P.n) * np.sum(F.coeffs**2 / gamma_k(P, k)))


def hls_energy(G: ZonalFunction, P: Params) -> float:
    """int v (-Delta)^{-s} v dx from the p-lift G of v."""
    _check_tail(G)
    k = np.arange(G.band_limit + 1)
    return float(sphere_area(P.n) * np.sum(gamma_k(P, k) * G.coeffs**2))


def weighted_l2(F: ZonalFunction, P: Params) -> float:
    """int f^2 (1+|x|^2)^{-2s} dx = 2^{-2s} |S^n| int F^2 dsigma."""
    return float(2.0 ** (-2 * P.s) * sphere_area(P.n) * F.l2_sq())


def weighted_pairing(F: ZonalFunction, H: ZonalFunction, P: Params) -> float:
    K = min(F.band_limit, H.band_limit)
    return float(2.0 ** (-2 * P.s) * sphere_area(P.n) * np.dot(F.coeffs[: K + 1], H.coeffs[: K + 1]))


def _positive_nodes(F: ZonalFunction, Q: int) -> np.ndarray:
    vals = F.at_nodes(Q)
    ends = F(np.array([-1.0, 1.0]))
    if np.any(vals <= 0) or np.any(ends <= 0):
        raise PositivityError("u must be positive; its lift takes nonpositive values")
    return vals


def lq_integral(F: ZonalFunction, P: Params, Q: int = DEFAULT_Q) -> float:
    """int u^q dx for positive u with q-lift F."""
    vals = _positive_nodes(F, Q)
    return float(sphere_area(P.n) * gauss_jacobi(P.n, Q).integrate(vals**P.q))


def power_lift(F: ZonalFunction, P: Params, K: int = DEFAULT_KG, Q: int = DEFAULT_Q) -> ZonalFunction:
    """p-lift of v = u^r, which is F^r, projected on degrees 0..K."""
    vals = _positive_nodes(F, Q)
    return project_values(P.n, vals**P.r, K, Q, s=P.s)


# -- deficits ------------------------------------------------------------------

@dataclass
class DeficitReport:
    n: int
    s: float
    sobolev_norm_sq: float
    lq_norm: float
    F_value: float
    hls_energy: float
    lp_norm: float
    G_value: float
    quotient: float
    band_limit: int
    band_limit_G: int
    quadrature: int
    tail_F: float
    tail_G: float
    J: float = field(default=float("nan"))

    def to_dict(self) -> dict:
        return asdict(self)


def F_deficit(F: ZonalFunction, P: Params, Q: int = DEFAULT_Q) -> float:
    """S ||u||_s^2 - ||u||_q^2."""
    S = sobolev_constant(P)
    return S * sobolev_norm_sq(F, P) - lq_integral(F, P, Q) ** (2 / P.q)


def G_deficit(G: ZonalFunction, P: Params, Q: int = DEFAULT_Q) -> float:
    """S ||v||_p^2 - int v (-Delta)^{-s} v, with G the p-lift of v >= 0."""
    vals = G.at_nodes(Q)
    lp = sphere_area(P.n) * gauss_jacobi(P.n, Q).integrate(np.abs(vals) ** P.p)
    return sobolev_constant(P) * lp ** (2 / P.p) - hls_energy(G, P)


def deficit_report(F: ZonalFunction, P: Params, K_G: int = DEFAULT_KG, Q: int = DEFAULT_Q) -> DeficitReport:
    S = sobolev_constant(P)
    J = lq_integral(F, P, Q)
    lq = J ** (1 / P.q)
    norm_s = sobolev_norm_sq(F, P)
    G = power_lift(F, P, K_G, Q)
    # ||u^r||_p^p = ||u||_q^q
    lp = J ** (1 / P.p)
    energy = hls_energy(G, P)
    Fv = S * norm_s - lq**2
    Gv = S * lp**2 - energy
    quotient = Gv / (lq ** (8 * P.s / (P.n - 2 * P.s)) * Fv) if Fv != 0 else float("nan")
    return DeficitReport(
        P.n, P.s, norm_s, lq, Fv, energy, lp, Gv, quotient, F.band_limit, K_G, Q, F.tail, G.tail, J
    )


@dataclass
class InequalityCheck:
    holds: bool
    margin: float
    scale: float
    lhs: float
    rhs: float


def verify_main_inequality(
    F: ZonalFunction, P: Params, C: float | None = None, tol: float = 1e-9, K_G: int = DEFAULT_KG, Q: int = DEFAULT_Q
) -> InequalityCheck:
    """Check G[u^r] <= C ||u||_q^{8s/(n-2s)} F[u]; C defaults to S_{n,s}."""
    S = sobolev_constant(P)
    C = S if C is None else C
    rep = deficit_report(F, P, K_G, Q)
    w = rep.lq_norm ** (8 * P.s / (P.n - 2 * P.s))
    rhs = C * w * rep.F_value
    lhs = rep.G_value
    scale = C * w * (S * rep.sobolev_norm_sq + rep.lq_norm**2) + S * rep.lp_norm**2 + rep.hls_energy
    margin = rhs - lhs
    return InequalityCheck(margin >= -tol * scale, margin, scale, lhs, rhs)


@dataclass
class SquareIdentity:
    expanded: float
    square: float
    residual: float
    scale: float


def verify_square_identity(F: ZonalFunction, P: Params, K_G: int = DEFAULT_KG, Q: int = DEFAULT_Q) -> SquareIdentity:
    """Compare the three-term expansion with the mode-by-mode square integral.

    The square is sum_k |S^n| (a c_k(F)/sqrt(gamma_k) - sqrt(gamma_k) c_k(G))^2
    with a = S ||u||_q^{4s/(n-2s)}.
    """
    S = sobolev_constant(P)
    J = lq_integral(F, P, Q)
    lq = J ** (1 / P.q)
    a = S * lq ** (4 * P.s / (P.n - 2 * P.s))
    G = power_lift(F, P, K_G, Q)
    norm_s = sobolev_norm_sq(F, P)
    energy = hls_energy(G, P)
    terms = np.array([a * a * norm_s, -2 * a * J, energy])
    expanded = float(terms.sum())

    K = max(F.band_limit, G.band_limit)
    cF = F.padded(K).coeffs
    cG = G.padded(K).coeffs
    g = gamma_k(P, np.arange(K + 1))
    square = float(sphere_area(P.n) * np.sum((a * cF / np.sqrt(g) - np.sqrt(g) * cG) ** 2))
    scale = float(np.abs(terms).sum())
    return SquareIdentity(expanded, square, abs(expanded - square) / scale, scale)


# -- linearization ------------------------------------------------------------

def _check_orthogonal(f: ZonalFunction, degrees, what: str):
    norm = np.sqrt(f.l2_sq())
    for k in degrees:
        if k <= f.band_limit and abs(f.coeffs[k]) > ORTHO_TOL * max(norm, 1e-300):
            raise PreconditionError(f"{what}: degree-{k} component {f.coeffs[k]:.3e} is not zero")


def linearized_F(f: ZonalFunction, P: Params) -> float:
    """||f||_s^2 - 2^{2s} Gamma((n+2s+2)/2)/Gamma((n-2s+2)/2) int f^2 (1+|x|^2)^{-2s}.

    Requires the weighted orthogonality to u_* (degree-0 lift component zero).
    The degree-1 term carries weight alpha_1 = 0, so f_1..f_{n+1} are admissible.
    """
    _check_orthogonal(f, [0], "orthogonality to u_*")
    k = np.arange(f.band_limit + 1)
    g = gamma_k(P, k)
    return float(sphere_area(P.n) * np.sum((1 / g - 1 / gamma_k(P, 1)) * f.coeffs**2))


def linearized_G(f: ZonalFunction, P: Params) -> float:
    """Gamma((n-2s+2)/2)/(2^{2s}Gamma((n+2s+2)/2)) int f^2 w - int g (-Delta)^{-s} g, g = f w.

    w = (1+|x|^2)^{-2s}.  In lifted form 2^{-4s} |S^n| sum (gamma_1 - gamma_k) c_k^2.
    """
    _check_orthogonal(f, [0], "orthogonality to u_*")
    g1 = gamma_k(P, 1)
    first = g1 * 2.0 ** (-2 * P.s) * weighted_l2(f, P)
    k = np.arange(f.band_limit + 1)
    second = 2.0 ** (-4 * P.s) * sphere_area(P.n) * np.sum(gamma_k(P, k) * f.coeffs**2)
    return float(first - second)


def sharp_linear_ratio(P: Params) -> float:
    """sup G[f]/F[f] = 2^{-4s} (n-2s+2)/(n+2s+2) (Gamma((n-2s+2)/2)/Gamma((n+2s+2)/2))^2."""
    return 2.0 ** (-4 * P.s) * gamma_k(P, 1) * gamma_k(P, 2)


def poincare_gap(f: ZonalFunction, P: Params) -> float:
    """||f||_s^2 - 2^{2s} Gamma((n+2s+4)/2)/Gamma((n-2s+4)/2) int f^2 (1+|x|^2)^{-2s}."""
    _check_orthogonal(f, [0, 1], "orthogonality to f_0..f_{n+1}")
    k = np.arange(f.band_limit + 1)
    norm_s = float(sphere_area(P.n) * np.sum(f.coeffs**2 / gamma_k(P, k)))
    return norm_s - 2.0 ** (2 * P.s) / gamma_k(P, 2) * weighted_l2(f, P)


def poincare_check(f: ZonalFunction, P: Params, slack: float = 1e-10) -> bool:
    gap = poincare_gap(f, P)
    return gap >= -slack * max(weighted_l2(f, P), 1e-300)


def linearized_quotient_limit(P: Params, degree: int = 2) -> float:
    """Limit of the deficit quotient along u_* + eps f with lift of f in H_degree."""
    if degree < 2:
        raise ValueError("degree must be >= 2")
    return linearization_factor(P) * sobolev_constant(P) * gamma_k(P, degree) / gamma_k(P, 2)


def deficit_quotient(F: ZonalFunction, P: Params, K_G: int = DEFAULT_KG, Q: int = DEFAULT_Q) -> float:
    return deficit_report(F, P, K_G, Q).quotient


def richardson_zero(eps, values) -> float:
    """Value at eps = 0 of the interpolating polynomial through (eps_i, values_i) (Neville)."""
    x = np.asarray(eps, dtype=float)
    p = np.asarray(values, dtype=float).copy()
    m = len(x)
    for j in range(1, m):
        p[: m - j] = (x[j:] * p[: m - j] - x[: m - j] * p[1 : m - j + 1]) / (x[j:] - x[: m - j])
    return float(p[0])


@dataclass
class QuotientLimit:
    epsilons: list
    quotients: list
    limit: float
    expected: float
    degree: int

    @property
    def rel_error(self) -> float:
        return abs(self.limit - self.expected) / abs(self.expected)


def quotient_lower_bound(
    P: Params, epsilons=(0.04, 0.02, 0.01, 0.005), degree: int = 2, K_G: int = DEFAULT_KG, Q: int = DEFAULT_Q
) -> QuotientLimit:
    """Richardson-extrapolate the quotient along u_* + eps f, lift of f a unit H_degree mode."""
    base = aubin_talenti_lift(P)
    f = harmonic_lift(P, degree)
    eps = sorted(epsilons, reverse=True)
    vals = [deficit_quotient(base + e * f, P, K_G, Q) for e in eps]
    d = np.diff(vals)
    if len(d) > 1 and not (np.all(d > 0) or np.all(d < 0)):
        raise RangeError(f"quotient is not monotone in eps ({vals}); amplitudes outside the asymptotic regime")
    if len(d) > 1 and np.any(np.abs(d[1:]) > np.abs(d[:-1])):
        raise RangeError("quotient increments do not shrink with eps")
    return QuotientLimit(list(eps), vals, richardson_zero(eps, vals), linearized_quotient_limit(P, degree), degree)


# -- corpora and transformations ---------------------------------------------------

def random_positive_lift(P: Params, rng: np.random.Generator, K_max: int = 12, floor: float = 0.05) -> ZonalFunction:
    """A random band-limited q-lift bounded below by ``floor`` times its mean."""
    t = np.linspace(-1, 1, 2001)
    while True:
        K = int(rng.integers(2, K_max + 1))
        decay = rng.uniform(0.4, 0.8)
        amp = rng.uniform(0.05, 0.5)
        c = np.empty(K + 1)
        c[0] = 1.0
        c[1:] = amp * rng.standard_normal(K) * decay ** np.arange(1, K + 1)
        F = ZonalFunction(P.n, c * rng.uniform(0.5, 2.0), P.s)
        if np.min(F(t)) > floor * F.coeffs[0]:
            return F


def random_corpus(P: Params, size: int, seed: int = 0, K_max: int = 12) -> list:
    rng = np.random.default_rng(seed)
    return [random_positive_lift(P, rng, K_max) for _ in range(size)]


def dilate_lift(F: ZonalFunction, P: Params, factor: float, K: int = DEFAULT_KG, Q: int = DEFAULT_Q) -> ZonalFunction:
    """q-lift of x -> factor^{(n-2s)/2} u(factor x)."""
    half = (P.n - 2 * P.s) / 2

    def lifted(t):
        rho = t_to_radius(t)
        return F(radius_to_t(factor * rho)) * (factor * (1 + rho**2) / (1 + factor**2 * rho**2)) ** half

    return project(P.n, lifted, K, Q, s=P.s)
