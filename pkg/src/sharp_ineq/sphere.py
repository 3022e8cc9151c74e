"""Stereographic projection and a zonal harmonic calculus on S^n.

Zonal functions depend only on the last coordinate t = omega_{n+1}.  They are
stored as coefficients against the Gegenbauer polynomials of index (n-1)/2,
normalized to be orthonormal for the normalized surface measure dsigma, so
that int F^2 dsigma = sum c_k^2.  Quantities written against the unnormalized
measure domega pick up a factor ``sphere_area(n)``.

The stereographic chart sends x in R^n to
S(x) = (2x/(1+|x|^2), (|x|^2-1)/(1+|x|^2)), so for radial u the last
coordinate is t = (r^2-1)/(r^2+1) and the north pole t = 1 is r = infinity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.linalg import eigh_tridiagonal
from scipy.special import betaln

from .errors import AccuracyError, LiftError, SingularityError
from .special import Params, log_gamma, riesz_constant, sphere_area

DEFAULT_Q = 200
DEFAULT_K = 64


# -- stereographic chart ---------------------------------------------------

def stereographic(x):
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=-1, keepdims=True)
    return np.concatenate([2 * x / (1 + r2), (r2 - 1) / (1 + r2)], axis=-1)


def stereographic_inv(omega):
    omega = np.asarray(omega, dtype=float)
    last = omega[..., -1:]
    if np.any(np.isclose(last, 1.0, rtol=0, atol=1e-15)):
        raise SingularityError("stereographic inverse is singular at the north pole")
    return omega[..., :-1] / (1 - last)


def jacobian_S(x):
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    return (2 / (1 + np.sum(x * x, axis=-1))) ** n


def jacobian_Sinv(omega):
    omega = np.asarray(omega, dtype=float)
    n = omega.shape[-1] - 1
    if np.any(np.isclose(omega[..., -1], 1.0, rtol=0, atol=1e-15)):
        raise SingularityError("Jacobian of the inverse chart blows up at the north pole")
    return (1 - omega[..., -1]) ** (-n)


def radius_to_t(r):
    r2 = np.asarray(r, dtype=float) ** 2
    return (r2 - 1) / (r2 + 1)


def t_to_radius(t):
    t = np.asarray(t, dtype=float)
    return np.sqrt((1 + t) / (1 - t))


# -- quadrature and basis ----------------------------------------------------

@dataclass(frozen=True)
class Quadrature:
    """Gauss-Jacobi rule for (1-t^2)^{(n-2)/2} dt, weights summing to one."""

    n: int
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return len(self.nodes)

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


def jacobi_rule(Q: int, alpha: float, beta: float):
    """Gauss-Jacobi nodes and weights for (1-t)^alpha (1+t)^beta by Golub-Welsch.

    Weights come from first eigenvector components, which keeps them accurate
    near a singular endpoint where the derivative formula loses digits.
    """
    k = np.arange(Q, dtype=float)
    ab = alpha + beta
    diag = np.empty(Q)
    diag[0] = (beta - alpha) / (ab + 2)
    kk = k[1:]
    diag[1:] = (beta**2 - alpha**2) / ((2 * kk + ab) * (2 * kk + ab + 2))
    off = np.empty(Q - 1)
    if Q > 1:
        off[0] = 4 * (1 + alpha) * (1 + beta) / ((2 + ab) ** 2 * (3 + ab))
        j = k[2:]
        off[1:] = 4 * j * (j + alpha) * (j + beta) * (j + ab) / ((2 * j + ab) ** 2 * (2 * j + ab + 1) * (2 * j + ab - 1))
    x, V = eigh_tridiagonal(diag, np.sqrt(off))
    mu0 = math.exp((ab + 1) * math.log(2) + betaln(alpha + 1, beta + 1))
    return x, mu0 * V[0] ** 2


@lru_cache(maxsize=64)
def gauss_jacobi(n: int, Q: int = DEFAULT_Q) -> Quadrature:
    a = (n - 2) / 2
    x, w = jacobi_rule(Q, a, a)
    w = w / w.sum()
    x.setflags(write=False)
    w.setflags(write=False)
    return Quadrature(n, x, w)


def _recurrence(n: int, k: int) -> float:
    # monic three-term coefficient for the symmetric Jacobi weight (1-t^2)^a
    if k == 1:
        return 1.0 / (n + 1)
    a = (n - 2) / 2
    return k * (k + 2 * a) / ((2 * k + 2 * a + 1) * (2 * k + 2 * a - 1))


def zonal_basis(n: int, K: int, t) -> np.ndarray:
    """Orthonormal zonal harmonics C_0..C_K evaluated at ``t``; shape (K+1, len(t))."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty((K + 1, t.size))
    out[0] = 1.0
    if K >= 1:
        out[1] = t / math.sqrt(_recurrence(n, 1))
    for k in range(1, K):
        out[k + 1] = (t * out[k] - math.sqrt(_recurrence(n, k)) * out[k - 1]) / math.sqrt(_recurrence(n, k + 1))
    return out


@lru_cache(maxsize=64)
def _basis_at_nodes(n: int, K: int, Q: int) -> np.ndarray:
    B = zonal_basis(n, K, gauss_jacobi(n, Q).nodes)
    B.setflags(write=False)
    return B


def harmonic_dimension(n: int, k: int) -> int:
    """dim H_k on S^n; equals C_k(1)^2 for the orthonormal zonal harmonic."""
    return math.comb(k + n, n) - (math.comb(k + n - 2, n) if k >= 2 else 0)


# -- zonal functions ---------------------------------------------------------

@dataclass
class ZonalFunction:
    """F(omega) = sum_k coeffs[k] C_k(omega_{n+1}).

    ``tail`` is the L^2(dsigma) mass lost when the function was projected from
    samples (zero for functions built from coefficients).
    """

    n: int
    coeffs: np.ndarray
    s: float | None = None
    tail: float = 0.0

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float).copy()

    @property
    def band_limit(self) -> int:
        return len(self.coeffs) - 1

    @property
    def params(self) -> Params | None:
        return None if self.s is None else Params(self.n, self.s)

    def __call__(self, t):
        return self.coeffs @ zonal_basis(self.n, self.band_limit, t)

    def at_nodes(self, Q: int = DEFAULT_Q) -> np.ndarray:
        return self.coeffs @ _basis_at_nodes(self.n, self.band_limit, Q)

    def mode(self, k: int) -> "ZonalFunction":
        c = np.zeros_like(self.coeffs)
        if k <= self.band_limit:
            c[k] = self.coeffs[k]
        return ZonalFunction(self.n, c, self.s)

    def mean(self) -> float:
        return float(self.coeffs[0])

    def l2_sq(self) -> float:
        return float(np.sum(self.coeffs**2))

    def padded(self, K: int) -> "ZonalFunction":
        c = np.zeros(max(K, self.band_limit) + 1)
        c[: len(self.coeffs)] = self.coeffs
        return ZonalFunction(self.n, c, self.s, self.tail)

    def __add__(self, other):
        if isinstance(other, ZonalFunction):
            K = max(self.band_limit, other.band_limit)
            c = self.padded(K).coeffs + other.padded(K).coeffs
            return ZonalFunction(self.n, c, self.s)
        c = self.coeffs.copy()
        c[0] += other
        return ZonalFunction(self.n, c, self.s)

    __radd__ = __add__

    def __mul__(self, scalar):
        return ZonalFunction(self.n, self.coeffs * scalar, self.s, self.tail * scalar**2)

    __rmul__ = __mul__

    def to_text(self) -> str:
        s = "nan" if self.s is None else f"{self.s:.17g}"
        lines = [f"{self.n} {s} {self.band_limit}"]
        lines += [f"{c:.17g}" for c in self.coeffs]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ZonalFunction":
        rows = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        n, s, K = rows[0].split()
        coeffs = np.array([float(x) for x in rows[1:]])
        if len(coeffs) != int(K) + 1:
            raise ValueError(f"header announces K={K} but found {len(coeffs)} coefficients")
        s_val = float(s)
        return cls(int(n), coeffs, None if math.isnan(s_val) else s_val)


def project(n: int, func: Callable, K: int = DEFAULT_K, Q: int = DEFAULT_Q, s: float | None = None) -> ZonalFunction:
    """Project a function of t onto degrees 0..K by Gauss-Jacobi quadrature."""
    quad = gauss_jacobi(n, Q)
    vals = np.asarray(func(quad.nodes), dtype=float)
    return project_values(n, vals, K, Q, s)


def project_values(n: int, values, K: int, Q: int = DEFAULT_Q, s: float | None = None) -> ZonalFunction:
    quad = gauss_jacobi(n, Q)
    if K >= Q:
        raise ValueError(f"band limit K={K} too large for Q={Q} nodes")
    B = _basis_at_nodes(n, K, Q)
    coeffs = B @ (quad.weights * values)
    tail = max(quad.integrate(values**2) - float(np.sum(coeffs**2)), 0.0)
    return ZonalFunction(n, coeffs, s, tail)


_PROBES = 1 - np.logspace(-2, -10, 9)


def lift(u: Callable, P: Params, mode: str = "q", K: int = DEFAULT_K, Q: int = DEFAULT_Q) -> ZonalFunction:
    """Lift a radial profile u(r) on R^n to a zonal function on S^n.

    mode "q": F = u o S^{-1} * J_{S^{-1}}^{1/q}; mode "p" uses 1/p instead.
    """
    e = {"q": P.q, "p": P.p}[mode]
    n = P.n

    def F(t):
        return u(t_to_radius(t)) * (1 - t) ** (-n / e)

    probe = np.abs(F(_PROBES))
    bulk = np.max(np.abs(F(gauss_jacobi(n, Q).nodes)))
    # a bounded lift settles as t -> 1; a blow-up keeps growing across the probe decades
    growing = probe[-1] > 1.5 * probe[-3] and probe[-1] > bulk
    if not np.all(np.isfinite(probe)) or growing:
        raise LiftError("lifted function is unbounded near the north pole; u does not decay fast enough")
    return project(n, F, K, Q, s=P.s)


def unlift(F: ZonalFunction, P: Params, r, mode: str = "q"):
    """Radial profile u(r) whose lift is F."""
    e = {"q": P.q, "p": P.p}[mode]
    r = np.asarray(r, dtype=float)
    return F(radius_to_t(r)) * (2 / (1 + r**2)) ** (P.n / e)


# -- Funk-Hecke ---------------------------------------------------------------

@dataclass(frozen=True)
class ZonalKernel:
    """K(t) = (1-t)^exponent * (smooth(t) + log_coef(t) * log(1-t)), t = <omega, eta>.

    The algebraic endpoint factor is absorbed into the Gauss-Jacobi weight; the
    logarithmic part is integrated with an algebraic-logarithmic QUADPACK weight.
    """

    smooth: Callable
    exponent: float = 0.0
    log_coef: Callable | None = None
    name: str = field(default="kernel", compare=False)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.asarray(self.smooth(t), dtype=float) * np.ones_like(t)
        if self.log_coef is not None:
            out = out + self.log_coef(t) * np.log1p(-t)
        return out * (1 - t) ** self.exponent


def _const(c):
    return lambda t: np.full_like(np.asarray(t, dtype=float), c)


def riesz_kernel(P: Params) -> ZonalKernel:
    """c_{n,s} |omega-eta|^{-(n-2s)} rescaled to act against dsigma.

    Its Funk-Hecke eigenvalues are gamma_k.
    """
    n, s = P.n, P.s
    c = sphere_area(n) * riesz_constant(n, s) * 2 ** (-(n - 2 * s) / 2)
    return ZonalKernel(_const(c), -(n - 2 * s) / 2, name="riesz")


def chordal_power_kernel(n: int, lam: float) -> ZonalKernel:
    """|omega - eta|^{-lam} = (2 - 2t)^{-lam/2}."""
    return ZonalKernel(_const(2 ** (-lam / 2)), -lam / 2, name="chordal_power")


def log_kernel(n: int) -> ZonalKernel:
    """log |omega - eta|^2 = log 2 + log(1 - t)."""
    return ZonalKernel(_const(math.log(2)), 0.0, _const(1.0), name="log")


def _weight_total(n: int) -> float:
    a = (n - 2) / 2
    return math.exp((2 * a + 1) * math.log(2) + 2 * log_gamma(a + 1) - log_gamma(2 * a + 2))


def _eigenvalues_once(kernel: ZonalKernel, n: int, K: int, Q: int) -> np.ndarray:
    a = (n - 2) / 2
    x, w = jacobi_rule(Q, a + kernel.exponent, a)
    B = zonal_basis(n, K, x)
    B1 = zonal_basis(n, K, np.array([1.0]))[:, 0]
    vals = B @ (w * kernel.smooth(x))
    if kernel.log_coef is not None:
        extra = np.empty(K + 1)
        for k in range(K + 1):
            def f(t, k=k):
                return float(kernel.log_coef(np.array([t]))[0] * zonal_basis(n, k, np.array([t]))[k, 0])

            # this term does not change with Q, so check its own error estimate
            val, err = integrate.quad(
                f, -1, 1, weight="alg-logb", wvar=(a, a + kernel.exponent), epsabs=1e-14, epsrel=1e-12, limit=400
            )
            if err > 1e-11 * max(1.0, abs(val)):
                raise AccuracyError(f"log term of degree {k}: quadrature error estimate {err:.2e}")
            extra[k] = val
        vals = vals + extra
    return vals / B1 / _weight_total(n)


def funk_hecke_eigenvalues(
    kernel: ZonalKernel, n: int, K: int, Q: int = DEFAULT_Q, tol: float = 1e-11, max_Q: int = 3200
) -> np.ndarray:
    """Eigenvalues of F -> int K(<.,eta>) F(eta) dsigma(eta) on degrees 0..K.

    Q doubles until successive estimates agree to ``tol``.
    """
    Q = max(Q, K + 1)
    prev = _eigenvalues_once(kernel, n, K, Q)
    while Q < max_Q:
        Q *= 2
        cur = _eigenvalues_once(kernel, n, K, Q)
        if np.all(np.abs(cur - prev) <= tol * np.maximum(1.0, np.abs(cur))):
            return cur
        prev = cur
    raise AccuracyError(f"Funk-Hecke eigenvalues did not stabilize to {tol} by Q={max_Q}")


def funk_hecke_eigen(kernel: ZonalKernel, n: int, k: int, Q: int = DEFAULT_Q) -> float:
    return float(funk_hecke_eigenvalues(kernel, n, k, Q)[k])


def funk_hecke_apply(kernel: ZonalKernel, F: ZonalFunction, Q: int = DEFAULT_Q) -> ZonalFunction:
    lam = funk_hecke_eigenvalues(kernel, F.n, F.band_limit, Q)
    return ZonalFunction(F.n, F.coeffs * lam, F.s)
