"""Gamma-family special functions and the closed-form constants.

Every constant is a pure function of the dimension ``n`` and the order ``s``
(or the HLS exponent ``lam``).  Ratios of Gamma functions at large arguments
go through ``log_gamma`` so that nothing overflows before k ~ 170.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special as _sp

from .errors import DomainError

N_MIN, N_MAX = 1, 8


def _check_positive(x):
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError(f"argument must be positive, got {x!r}")
    return arr


def gamma_fn(x):
    """Euler Gamma on the positive half-line."""
    arr = _check_positive(x)
    out = _sp.gamma(arr)
    return float(out) if out.ndim == 0 else out


def log_gamma(x):
    arr = _check_positive(x)
    out = _sp.gammaln(arr)
    return float(out) if out.ndim == 0 else out


def digamma(x):
    """Logarithmic derivative of Gamma, Psi(x) = Gamma'(x)/Gamma(x)."""
    arr = _check_positive(x)
    out = _sp.digamma(arr)
    return float(out) if out.ndim == 0 else out


def gamma_ratio(a, b):
    """Gamma(a)/Gamma(b) evaluated in log space."""
    return np.exp(log_gamma(a) - log_gamma(b))


@dataclass(frozen=True)
class Params:
    """Dimension ``n`` and order ``s`` with every derived exponent.

    q = 2n/(n-2s) is the Sobolev exponent, p = 2n/(n+2s) its dual,
    r = q/p, m = 1/r the fast-diffusion exponent, lam = n - 2s.
    """

    n: int
    s: float
    q: float = field(init=False)
    p: float = field(init=False)
    r: float = field(init=False)
    m: float = field(init=False)
    lam: float = field(init=False)

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n:
            raise DomainError(f"n must be an integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "s", float(self.s))
        n, s = self.n, self.s
        if not N_MIN <= n <= N_MAX:
            raise DomainError(f"n must lie in [{N_MIN}, {N_MAX}], got {n}")
        if not 0.0 < s < n / 2:
            raise DomainError(f"need 0 < s < n/2 = {n / 2}, got s = {s}")
        object.__setattr__(self, "q", 2 * n / (n - 2 * s))
        object.__setattr__(self, "p", 2 * n / (n + 2 * s))
        object.__setattr__(self, "r", (n + 2 * s) / (n - 2 * s))
        object.__setattr__(self, "m", (n - 2 * s) / (n + 2 * s))
        object.__setattr__(self, "lam", n - 2 * s)


def sphere_area(n: int) -> float:
    """|S^n| = 2 pi^{(n+1)/2} / Gamma((n+1)/2), the unnormalized surface area."""
    return 2 * math.pi ** ((n + 1) / 2) / gamma_fn((n + 1) / 2)


def sobolev_constant(P: Params) -> float:
    """Sharp constant S_{n,s} in (int |u|^q)^{2/q} <= S ||u||_s^2."""
    n, s = P.n, P.s
    pref = math.exp(log_gamma((n - 2 * s) / 2) - log_gamma((n + 2 * s) / 2))
    pref /= 2 ** (2 * s) * math.pi**s
    return pref * math.exp((2 * s / n) * (log_gamma(n) - log_gamma(n / 2)))


def _check_lam(n, lam):
    if not 0.0 < lam < n:
        raise DomainError(f"need 0 < lambda < n = {n}, got {lam}")


def hls_constant(n: int, lam: float) -> float:
    """Sharp constant of the double integral f(x) f(y) / |x-y|^lam on R^n."""
    _check_lam(n, lam)
    log_c = (lam / 2) * math.log(math.pi) + log_gamma((n - lam) / 2) - log_gamma(n - lam / 2)
    log_c += (1 - lam / n) * (log_gamma(n) - log_gamma(n / 2))
    return math.exp(log_c)


def riesz_constant(n: int, s: float) -> float:
    """Normalization of the Green's function of (-Delta)^s: c |x|^{-(n-2s)}."""
    if not 0.0 < s < n / 2:
        raise DomainError(f"need 0 < s < n/2, got s = {s}")
    return math.exp(log_gamma((n - 2 * s) / 2) - log_gamma(s)) / (2 ** (2 * s) * math.pi ** (n / 2))


def sphere_hls_constant(n: int, lam: float) -> float:
    """B_lam for the normalized measure on S^n with chordal distance."""
    _check_lam(n, lam)
    log_b = -lam * math.log(2) + log_gamma((n - lam) / 2) - log_gamma(n - lam / 2)
    log_b += log_gamma(n) - log_gamma(n / 2)
    return math.exp(log_b)


def gamma_k(P: Params, k):
    """Eigenvalues Gamma(k + (n-2s)/2) / Gamma(k + (n+2s)/2) of the Riesz operator."""
    k = np.asarray(k, dtype=float)
    if np.any(k < 0):
        raise DomainError("k must be nonnegative")
    out = np.exp(_sp.gammaln(k + (P.n - 2 * P.s) / 2) - _sp.gammaln(k + (P.n + 2 * P.s) / 2))
    return float(out) if out.ndim == 0 else out


def _check_k2(k):
    k = np.asarray(k, dtype=float)
    if np.any(k < 2):
        raise DomainError("alpha_k and beta_k are defined for k >= 2")
    return k


def alpha_k(P: Params, k):
    # alpha_k = 1/gamma_k - 1/gamma_1
    k = _check_k2(k)
    out = 1.0 / gamma_k(P, k) - 1.0 / gamma_k(P, 1)
    return float(out) if np.ndim(out) == 0 else out


def beta_k(P: Params, k):
    # beta_k = gamma_1 - gamma_k
    k = _check_k2(k)
    out = gamma_k(P, 1) - gamma_k(P, k)
    return float(out) if np.ndim(out) == 0 else out


def alpha_k_direct(P: Params, k: int) -> float:
    """alpha_k from the raw four-Gamma expression (small k only)."""
    n, s = P.n, P.s
    g = _sp.gamma
    num = g((n + 2 * s + 2 * k) / 2) * g((n - 2 * s + 2) / 2) - g((n - 2 * s + 2 * k) / 2) * g((n + 2 * s + 2) / 2)
    return float(num / (g((n - 2 * s + 2 * k) / 2) * g((n - 2 * s + 2) / 2)))


def beta_k_direct(P: Params, k: int) -> float:
    n, s = P.n, P.s
    g = _sp.gamma
    num = g((n + 2 * s + 2 * k) / 2) * g((n - 2 * s + 2) / 2) - g((n - 2 * s + 2 * k) / 2) * g((n + 2 * s + 2) / 2)
    return float(num / (g((n + 2 * s + 2 * k) / 2) * g((n + 2 * s + 2) / 2)))


def ratio_beta_alpha(P: Params, k):
    """beta_k / alpha_k, which simplifies to gamma_1 * gamma_k."""
    _check_k2(k)
    return gamma_k(P, 1) * gamma_k(P, k)


def linearization_factor(P: Params) -> float:
    """(n-2s+2)/(n+2s+2), the ratio of the lower to the upper bound on C*."""
    return (P.n - 2 * P.s + 2) / (P.n + 2 * P.s + 2)


def log_kernel_mean(n: int) -> float:
    """A(n) = int log|xi - eta|^2 dsigma(eta) = -(Psi(n) - Psi(n/2) - log 4)."""
    if n < 1:
        raise DomainError("n must be >= 1")
    return -(digamma(n) - digamma(n / 2) - math.log(4))


def log_kernel_eigenvalue(n: int, k):
    """Eigenvalue of the kernel log|xi - eta|^2 on the degree-k harmonics (dsigma).

    k = 0 gives A(n); k >= 1 gives -Gamma(n) Gamma(k) / Gamma(n+k).
    """
    k = np.asarray(k, dtype=float)
    out = np.where(
        k == 0,
        log_kernel_mean(n),
        -np.exp(_sp.gammaln(n) + _sp.gammaln(np.maximum(k, 1)) - _sp.gammaln(n + np.maximum(k, 1))),
    )
    return float(out) if out.ndim == 0 else out


def mto_weight(n: int, k):
    """Gamma(n+k) / (Gamma(n) Gamma(k)) for k >= 1, and 0 at k = 0."""
    k = np.asarray(k, dtype=float)
    kk = np.maximum(k, 1)
    out = np.where(k == 0, 0.0, np.exp(_sp.gammaln(n + kk) - _sp.gammaln(n) - _sp.gammaln(kk)))
    return float(out) if out.ndim == 0 else out


def mto_constant_ratio(n: int, k):
    """(1 - Gamma(n+1)Gamma(k)/Gamma(n+k)) / (Gamma(n+k)/(Gamma(n+1)Gamma(k)) - 1)."""
    k = np.asarray(k, dtype=float)
    x = np.exp(_sp.gammaln(n + k) - _sp.gammaln(n + 1) - _sp.gammaln(k))
    out = (1 - 1 / x) / (x - 1)
    return float(out) if out.ndim == 0 else out
