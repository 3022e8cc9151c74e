"""Moser-Trudinger-Onofri and logarithmic HLS functionals on S^n.

The log kernel log|xi - eta|^2 is diagonal on the zonal harmonics with
eigenvalue A(n) on constants and -Gamma(n)Gamma(k)/Gamma(n+k) on degree k,
so every double integral reduces to a coefficient sum after expanding the
integrand (e^F, or a density) on a high band limit.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass

import numpy as np
from numpy.polynomial import legendre as npleg

from .errors import DomainError, PositivityError, PreconditionError
from .functionals import (
    deficit_report,
    hls_energy,
    power_lift,
    richardson_zero,
    sobolev_norm_sq,
)
from .special import (
    Params,
    digamma,
    gamma_k,
    log_kernel_eigenvalue,
    log_kernel_mean,
    mto_constant_ratio,
    mto_weight,
    sobolev_constant,
    sphere_area,
)
from .sphere import DEFAULT_Q, ZonalFunction, gauss_jacobi, project_values

DEFAULT_KE = 96


def psi_constant(n: int) -> float:
    """Psi(n) - Psi(n/2) - log 4 (= -A(n))."""
    return digamma(n) - digamma(n / 2) - math.log(4)


def dirichlet_term(F: ZonalFunction) -> float:
    """(1/2n) sum_{k>=1} Gamma(n+k)/(Gamma(n)Gamma(k)) int F_k^2 dsigma."""
    k = np.arange(F.band_limit + 1)
    return float(np.sum(mto_weight(F.n, k) * F.coeffs**2) / (2 * F.n))


def log_energy_values(n: int, values, K: int = DEFAULT_KE, Q: int = DEFAULT_Q) -> float:
    """iint H(xi) log|xi-eta|^2 H(eta) dsigma dsigma for H sampled at the quadrature nodes."""
    H = project_values(n, values, K, Q)
    lam = log_kernel_eigenvalue(n, np.arange(K + 1))
    return float(np.sum(lam * H.coeffs**2))


def entropy(values, quad) -> float:
    """Ent(f) = int f log f - (int f) log(int f) for f > 0 sampled at the nodes."""
    mass = quad.integrate(values)
    return quad.integrate(values * np.log(values)) - mass * math.log(mass)


def mto_deficit(F: ZonalFunction, Q: int = DEFAULT_Q) -> float:
    """Dirichlet term + mean - log int e^F; nonnegative."""
    quad = gauss_jacobi(F.n, Q)
    Z = quad.integrate(np.exp(F.at_nodes(Q)))
    return dirichlet_term(F) + F.mean() - math.log(Z)


def _log_hls_from_values(n: int, dens, K: int, Q: int) -> float:
    quad = gauss_jacobi(n, Q)
    ent = quad.integrate(dens * np.log(dens))
    return 0.5 * n * psi_constant(n) + ent + 0.5 * n * log_energy_values(n, dens, K, Q)


def log_hls_deficit(F: ZonalFunction, K: int = DEFAULT_KE, Q: int = DEFAULT_Q, tol: float = 1e-10) -> float:
    """(n/2)(Psi(n)-Psi(n/2)-log 4) + int F log F + n iint F log|xi-eta| F, for a unit-mean density."""
    vals = F.at_nodes(Q)
    if np.any(vals <= 0):
        raise PositivityError("density must be positive at the quadrature nodes")
    if abs(F.mean() - 1) > tol:
        raise PreconditionError(f"density must have unit mean, got {F.mean()}")
    return _log_hls_from_values(F.n, vals, K, Q)


@dataclass
class MtoReport:
    n: int
    C: float
    dirichlet_term: float
    mean: float
    log_integral: float
    entropy: float
    log_kernel_energy: float
    lhs: float
    rhs: float
    margin: float
    scale: float

    def to_dict(self) -> dict:
        return asdict(self)


def improved_mto_report(F: ZonalFunction, C: float = 1.0, K: int = DEFAULT_KE, Q: int = DEFAULT_Q) -> MtoReport:
    n = F.n
    quad = gauss_jacobi(n, Q)
    eF = np.exp(F.at_nodes(Q))
    Z = quad.integrate(eF)
    dir_term = dirichlet_term(F)
    ent = entropy(eF, quad)
    # log_energy is iint e^F log|xi-eta|^2 e^F; the inequality uses n iint ... log|xi-eta| ...
    log_en = 0.5 * log_energy_values(n, eF, K, Q)
    lhs = C * Z**2 * (dir_term + F.mean() - math.log(Z))
    rhs = n * log_en + Z**2 * (0.5 * n * psi_constant(n) + ent / Z)
    scale = Z**2 * (abs(dir_term) + abs(F.mean()) + abs(math.log(Z)) + 0.5 * n * abs(psi_constant(n)) + abs(ent) / Z)
    scale += n * abs(log_en)
    return MtoReport(n, C, dir_term, F.mean(), math.log(Z), ent, log_en, lhs, rhs, lhs - rhs, scale)


def improved_mto_margin(F: ZonalFunction, C: float = 1.0, K: int = DEFAULT_KE, Q: int = DEFAULT_Q) -> float:
    """LHS - RHS of the improved Moser-Trudinger-Onofri inequality with constant C."""
    return improved_mto_report(F, C, K, Q).margin


def mto_constant_lower_bound(n: int, k_max: int = 500) -> float:
    """sup over k >= 2 of the eps-expansion ratio; the sup is 1/(n+1), at k = 2."""
    if n < 2:
        raise DomainError("n must be >= 2")
    k = np.arange(2, k_max + 1)
    return float(np.max(mto_constant_ratio(n, k)))


def epsilon_constant(F: ZonalFunction, eps: float, K: int = DEFAULT_KE, Q: int = DEFAULT_Q) -> float:
    """The constant C making the improved inequality an equality at eps*F."""
    rep = improved_mto_report(F * eps, 1.0, K, Q)
    return rep.rhs / rep.lhs


def mto_constant_epsilon_bound(n: int, degree: int = 2, epsilons=(0.08, 0.04, 0.02, 0.01), K: int = DEFAULT_KE,
                               Q: int = DEFAULT_Q) -> float:
    """Richardson limit eps -> 0 of epsilon_constant along a unit H_degree mode."""
    c = np.zeros(degree + 1)
    c[degree] = 1.0
    F = ZonalFunction(n, c)
    vals = [epsilon_constant(F, e, K, Q) for e in epsilons]
    return richardson_zero(epsilons, vals)


# -- endpoint differentiation s -> n/2 --------------------------------------------

@dataclass
class EndpointRow:
    t: float
    s: float
    lhs: float
    limit: float
    abs_error: float


@dataclass
class EndpointTable:
    sobolev: list
    hls: list

    @staticmethod
    def _csv(rows) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "s", "lhs", "limit", "abs_error"])
        for r in rows:
            w.writerow([f"{r.t:.17g}", f"{r.s:.17g}", f"{r.lhs:.17g}", f"{r.limit:.17g}", f"{r.abs_error:.17g}"])
        return buf.getvalue()

    def to_csv(self, which: str = "sobolev") -> str:
        return self._csv(getattr(self, which))

    def halving_ratios(self, which: str = "sobolev"):
        err = [r.abs_error for r in getattr(self, which)]
        return [err[i + 1] / err[i] for i in range(len(err) - 1)]


def endpoint_limits(F: ZonalFunction, K: int = DEFAULT_KE, Q: int = DEFAULT_Q):
    """Limits of the Sobolev-side and HLS-side bracketed quantities as s -> n/2."""
    n = F.n
    quad = gauss_jacobi(n, Q)
    area = sphere_area(n)
    gn = math.gamma(n)
    eF = np.exp(F.at_nodes(Q))
    Z = quad.integrate(eF)
    k = np.arange(F.band_limit + 1)
    wsum = float(np.sum(np.exp([math.lgamma(kk + n) - math.lgamma(kk) if kk > 0 else -np.inf for kk in k]) * F.coeffs**2))
    sob = -2 * area / (n * gn) * Z**2 * math.log(Z) + area / (n**2 * gn**2) * wsum * Z**2
    ent = entropy(eF, quad)
    hls = area / gn * Z**2 * (psi_constant(n) + (2 / n) * ent / Z) + area / gn * log_energy_values(n, eF, K, Q)
    return sob, hls


def endpoint_values(F: ZonalFunction, t: float, K: int = DEFAULT_KE, Q: int = DEFAULT_Q):
    """Finite-t Sobolev-side and HLS-side quantities for u built from 1 + tF with s = n/2 - nt."""
    n = F.n
    s = n / 2 - n * t
    P = Params(n, s)
    U = 1.0 + t * ZonalFunction(n, F.coeffs, s)
    vals = U.at_nodes(Q)
    if np.any(vals <= 0) or np.any(U(np.array([-1.0, 1.0])) <= 0):
        raise PositivityError(f"1 + tF is not positive at t = {t}")
    S = sobolev_constant(P)
    rep = deficit_report(U, P, K, Q)
    w = rep.lq_norm ** (8 * s / (n - 2 * s))
    sob = S * w * (S * rep.sobolev_norm_sq - rep.lq_norm**2)
    hls = S * rep.lp_norm**2 - rep.hls_energy
    return sob, hls


def endpoint_values_closed_form(F: ZonalFunction, t: float, K: int = DEFAULT_KE, Q: int = DEFAULT_Q):
    """The same two quantities from the Gamma-function expressions in the variable t."""
    n = F.n
    s = n / 2 - n * t
    P = Params(n, s)
    quad = gauss_jacobi(n, Q)
    area = sphere_area(n)
    U = 1.0 + t * F.at_nodes(Q)
    I = quad.integrate(U ** (1 / t))
    g0 = math.exp(math.lgamma(n * t) - math.lgamma(n * (1 - t)))
    k = np.arange(1, F.band_limit + 1)
    ssum = float(np.sum(np.exp([math.lgamma(kk + n * (1 - t)) - math.lgamma(kk + n * t) for kk in k]) * F.coeffs[1:] ** 2))
    sob = area * g0 * (I ** (2 - 4 * t) - I ** (2 - 2 * t)) + area * t**2 * g0**2 * ssum * I ** (2 - 4 * t)
    vt1 = area * g0 * I ** (2 - 2 * t)
    G = project_values(n, U ** ((1 - t) / t), K, Q)
    vt2 = area * float(np.sum(gamma_k(P, np.arange(K + 1)) * G.coeffs**2))
    return sob, vt1 - vt2


def endpoint_limit_check(F: ZonalFunction, t_sequence=(0.02, 0.01, 0.005), K: int = DEFAULT_KE,
                         Q: int = DEFAULT_Q) -> EndpointTable:
    """Tabulate distances of the finite-t quantities to their s -> n/2 limits."""
    if abs(F.mean()) > 1e-12 * max(1.0, math.sqrt(F.l2_sq())):
        raise PreconditionError("F must have zero mean")
    lim_sob, lim_hls = endpoint_limits(F, K, Q)
    sob_rows, hls_rows = [], []
    for t in t_sequence:
        sob, hls = endpoint_values(F, t, K, Q)
        s = F.n / 2 - F.n * t
        sob_rows.append(EndpointRow(t, s, sob, lim_sob, abs(sob - lim_sob)))
        hls_rows.append(EndpointRow(t, s, hls, lim_hls, abs(hls - lim_hls)))
    return EndpointTable(sob_rows, hls_rows)


# -- Euclidean Onofri (n = 2) ---------------------------------------------------------

def _radial_rule(M: int = 400):
    """Gauss-Legendre in theta with r = tan(theta/2); returns r and the weights of 2 pi r dr."""
    x, w = npleg.leggauss(M)
    theta = 0.5 * math.pi * (x + 1)
    wt = 0.5 * math.pi * w
    r = np.tan(theta / 2)
    drdtheta = 0.5 / np.cos(theta / 2) ** 2
    return r, 2 * math.pi * r * drdtheta * wt, theta


def mu_density(r):
    return 1 / (math.pi * (1 + np.asarray(r) ** 2) ** 2)


def _newton_log_energy(h_of_r, M: int = 400) -> float:
    """iint h(x) log|x-y| h(y) dx dy for radial h on R^2 (Newton's theorem)."""
    r, w, theta = _radial_rule(M)
    h = h_of_r(r)
    # M(r) = int_{|y|<r} h: nested Gauss-Legendre on [0, theta_i]
    x, wx = npleg.leggauss(M)
    sub = 0.5 * (x[None, :] + 1) * theta[:, None]
    rs = np.tan(sub / 2)
    ws = 0.5 * theta[:, None] * wx[None, :] * 2 * math.pi * rs * 0.5 / np.cos(sub / 2) ** 2
    mass_inside = np.sum(h_of_r(rs) * ws, axis=1)
    return float(2 * np.sum(w * h * np.log(r) * mass_inside))


def log_hls_euclidean_deficit(f_of_r, M: int = 400) -> float:
    """int f log f + 2 iint f log|x-y| f + 1 + log pi for a radial unit-mass density on R^2."""
    r, w, _ = _radial_rule(M)
    f = f_of_r(r)
    mass = float(np.sum(w * f))
    if abs(mass - 1) > 1e-8:
        raise PreconditionError(f"density must have unit mass, got {mass}")
    return float(np.sum(w * f * np.log(f))) + 2 * _newton_log_energy(f_of_r, M) + 1 + math.log(math.pi)


def _zonal_to_legendre(F: ZonalFunction) -> np.ndarray:
    # on S^2 the orthonormal zonal harmonics are sqrt(2k+1) P_k(t)
    k = np.arange(F.band_limit + 1)
    return F.coeffs * np.sqrt(2 * k + 1)


def onofri_euclidean_margin(F: ZonalFunction, C2: float = 1.0, M: int = 400) -> float:
    """Margin of the improved Euclidean Onofri inequality for f = F o S on R^2.

    All terms are computed on R^2 by radial quadrature; the Green's function
    term uses Newton's theorem for radial densities.
    """
    if F.n != 2:
        raise DomainError("the Euclidean Onofri inequality lives on R^2 (n = 2)")
    leg = _zonal_to_legendre(F)
    dleg = npleg.legder(leg)
    r, w, _ = _radial_rule(M)
    t = (r**2 - 1) / (r**2 + 1)
    f = npleg.legval(t, leg)
    dfdr = npleg.legval(t, dleg) * 4 * r / (1 + r**2) ** 2
    mu = mu_density(r)
    grad_sq = float(np.sum(w * dfdr**2))
    Z = float(np.sum(w * np.exp(f) * mu))
    mean = float(np.sum(w * f * mu))
    rho = np.exp(f) * mu / Z
    ent = float(np.sum(w * rho * np.log(rho)))

    def h(rr):
        tt = (rr**2 - 1) / (rr**2 + 1)
        return np.exp(npleg.legval(tt, leg)) * mu_density(rr)

    # -4 pi int h (-Delta)^{-1} h = 2 iint h log|x-y| h
    green = 2 * _newton_log_energy(h, M)
    lhs = C2 * Z**2 * (grad_sq / (16 * math.pi) + mean - math.log(Z))
    rhs = Z**2 * (1 + math.log(math.pi) + ent) + green
    return lhs - rhs
