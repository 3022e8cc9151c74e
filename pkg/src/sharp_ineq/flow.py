"""Fractional fast diffusion on a box grid and the flow diagnostics.

The flow is dv/dt = -(-Delta)^s v^m with m = (n-2s)/(n+2s).  Positive
solutions have algebraic tails, w = v^m ~ A |x|^{-(n-2s)}, which a periodic
spectral grid cannot represent: the torus multiplier drops the mean of w and
the box truncates the integrals.  Every operator therefore splits off a
far-field multiple of phi = (1+|x|^2)^{-(n-2s)/2}, fitted on the outer frame of
the box, whose images are known in closed form:

    (-Delta)^s phi = kappa phi^r,    (-Delta)^{-s} phi^r = phi / kappa,

and only the fast-decaying remainder goes through the grid.  Integrals of
products decaying like (1+|x|^2)^{-n} receive the matching exterior correction.
"""
from __future__ import annotations

import csv
import io
import math
import struct
import warnings
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import fft as sfft
from scipy import integrate as sint
from scipy import optimize, signal

from .errors import (
    DomainError,
    InsufficientDataError,
    PositivityError,
    StiffnessError,
)
from .functionals import deficit_report
from .special import Params, gamma_fn, log_gamma, riesz_constant, sobolev_constant
from .sphere import ZonalFunction

TAIL_THRESHOLD = 1e-3
RING_FRACTION = 0.8
EXTINCTION_RATIO = 1e-8
CLIP_LEVEL = 1e-12


class TruncationWarning(UserWarning):
    """The field is not small on the boundary of the box."""


# -- grid fields ---------------------------------------------------------------

_HEADER = struct.Struct("<qdq")


@dataclass(frozen=True, eq=False)
class GridField:
    """Samples of a real field at x_j = -L + j h, h = 2L/N, in dimension 1 or 2."""

    dim: int
    L: float
    N: int
    values: np.ndarray

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise DomainError(f"dim must be 1 or 2, got {self.dim}")
        if self.N < 2 or self.N & (self.N - 1):
            raise DomainError(f"N must be a power of two, got {self.N}")
        if not self.L > 0:
            raise DomainError("L must be positive")
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.N,) * self.dim:
            raise DomainError(f"values must have shape {(self.N,) * self.dim}, got {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise DomainError("values must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def h(self) -> float:
        return 2 * self.L / self.N

    @property
    def cell(self) -> float:
        return self.h**self.dim

    def axis(self) -> np.ndarray:
        return -self.L + self.h * np.arange(self.N)

    def coords(self):
        return np.meshgrid(*([self.axis()] * self.dim), indexing="ij")

    def radius_sq(self) -> np.ndarray:
        return _grid(self.dim, self.L, self.N).R2

    def integrate(self) -> float:
        return float(self.values.sum() * self.cell)

    def with_values(self, values) -> "GridField":
        return GridField(self.dim, self.L, self.N, values)

    def boundary_ratio(self) -> float:
        """max |values| on the box faces relative to max |values|."""
        v = np.abs(self.values)
        top = v.max()
        if top == 0:
            return 0.0
        faces = [np.take(v, [0, -1], axis=a) for a in range(self.dim)]
        return float(max(f.max() for f in faces) / top)

    def to_bytes(self) -> bytes:
        return _HEADER.pack(self.dim, self.L, self.N) + self.values.astype("<f8").tobytes(order="C")

    @classmethod
    def from_bytes(cls, data: bytes) -> "GridField":
        dim, L, N = _HEADER.unpack_from(data)
        vals = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape((N,) * dim)
        return cls(int(dim), float(L), int(N), vals.copy())

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "GridField":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


@dataclass(frozen=True)
class _Grid:
    R2: np.ndarray
    ring: np.ndarray


@lru_cache(maxsize=16)
def _grid(dim: int, L: float, N: int) -> _Grid:
    h = 2 * L / N
    x = -L + h * np.arange(N)
    X = np.meshgrid(*([x] * dim), indexing="ij")
    R2 = sum(xi**2 for xi in X)
    ring = np.max(np.abs(np.stack(X)), axis=0) >= RING_FRACTION * L
    return _Grid(R2, ring)


@lru_cache(maxsize=16)
def _multiplier(dim: int, L: float, N: int, s: float) -> np.ndarray:
    h = 2 * L / N
    k = 2 * np.pi * sfft.fftfreq(N, h)
    kr = 2 * np.pi * sfft.rfftfreq(N, h)
    K = np.meshgrid(*([k] * (dim - 1) + [kr]), indexing="ij")
    return sum(ki**2 for ki in K) ** s


def _check_order(dim: int, s: float):
    if not 0 < s < dim / 2:
        raise DomainError(f"need 0 < s < n/2 = {dim / 2}, got s = {s}")


def _periodic_frac_laplacian(values: np.ndarray, s: float, dim: int, L: float, N: int) -> np.ndarray:
    mult = _multiplier(dim, L, N, s)
    return sfft.irfftn(mult * sfft.rfftn(values), s=values.shape)


def bubble_kappa(n: int, s: float) -> float:
    """kappa with (-Delta)^s (1+|x|^2)^{-(n-2s)/2} = kappa (1+|x|^2)^{-(n+2s)/2}."""
    return 2 ** (2 * s) * math.exp(log_gamma((n + 2 * s) / 2) - log_gamma((n - 2 * s) / 2))


# More scales fit better but the fit becomes ill-conditioned: tiny ring changes
# then move the diagnostics, and inside the time step they destabilize RK4.
FAR_FIELD_SCALES = (1.0,)


@dataclass(frozen=True)
class _FarField:
    """Far-field bases phi_l = (1+|x|^2/l^2)^{-(n-2s)/2} and phi_l^r for scales l.

    lead_* are the coefficients of |x|^{-(n-2s)} or |x|^{-(n+2s)} in the
    basis functions and in their images, used for exterior integrals.
    """

    phi: np.ndarray       # (k, N, ..., N)
    phi_r: np.ndarray
    L_phi: np.ndarray     # (-Delta)^s phi_l
    I_phi_r: np.ndarray   # (-Delta)^{-s} phi_l^r
    fit_phi: np.ndarray   # least-squares solve on the ring, (k, ring size)
    fit_phi_r: np.ndarray
    lead_phi: np.ndarray
    lead_L_phi: np.ndarray
    lead_phi_r: np.ndarray
    lead_I_phi_r: np.ndarray
    ring: np.ndarray
    psi_gap: float        # int_{R^n} (1+|x|^2)^{-n} minus its grid sum


@lru_cache(maxsize=32)
def _farfield(dim: int, L: float, N: int, s: float, scales: tuple = FAR_FIELD_SCALES) -> _FarField:
    g = _grid(dim, L, N)
    n = dim
    kap = bubble_kappa(n, s)
    ell = np.asarray(scales, dtype=float)
    phi = np.stack([(1 + g.R2 / l**2) ** (-(n - 2 * s) / 2) for l in ell])
    phi_r = np.stack([(1 + g.R2 / l**2) ** (-(n + 2 * s) / 2) for l in ell])
    bshape = (-1,) + (1,) * dim
    L_phi = (kap * ell ** (-2 * s)).reshape(bshape) * phi_r
    I_phi_r = (ell ** (2 * s) / kap).reshape(bshape) * phi
    psi = (1 + g.R2) ** (-float(n))
    full = math.pi ** (n / 2) * gamma_fn(n / 2) / gamma_fn(n)
    gap = full - psi.sum() * (2 * L / N) ** n
    return _FarField(
        phi, phi_r, L_phi, I_phi_r,
        np.linalg.pinv(phi[:, g.ring].T), np.linalg.pinv(phi_r[:, g.ring].T),
        ell ** (n - 2 * s), kap * ell**n, ell ** (n + 2 * s), ell**n / kap,
        g.ring, gap,
    )


def _warn_tail(ratio: float, what: str):
    if ratio > TAIL_THRESHOLD:
        warnings.warn(f"{what}: boundary/peak ratio {ratio:.2e} exceeds {TAIL_THRESHOLD:g}",
                      TruncationWarning, stacklevel=3)


def frac_laplacian(field: GridField, s: float, far_field: bool = False) -> GridField:
    """(-Delta)^s by the periodic multiplier |xi|^{2s}.

    With far_field=True the fitted multiple of phi is handled analytically and
    only the remainder sees the multiplier.
    """
    _check_order(field.dim, s)
    out, _, _ = _frac_laplacian_values(field, s, far_field)
    return field.with_values(out)


def _frac_laplacian_values(field: GridField, s: float, far_field: bool, warn: bool = True,
                           scales: tuple = FAR_FIELD_SCALES):
    """Values plus the leading tail coefficients of the input and of the output."""
    v = field.values
    if not far_field:
        if warn:
            _warn_tail(field.boundary_ratio(), "frac_laplacian")
        return _periodic_frac_laplacian(v, s, field.dim, field.L, field.N), 0.0, 0.0
    ff = _farfield(field.dim, field.L, field.N, s, scales)
    c = ff.fit_phi @ v[ff.ring]
    rem = v - np.tensordot(c, ff.phi, 1)
    if warn:
        top = max(np.abs(v).max(), 1e-300)
        _warn_tail(field.with_values(rem).boundary_ratio() * np.abs(rem).max() / top, "frac_laplacian remainder")
    out = np.tensordot(c, ff.L_phi, 1) + _periodic_frac_laplacian(rem, s, field.dim, field.L, field.N)
    return out, float(c @ ff.lead_phi), float(c @ ff.lead_L_phi)


def _box_integral(dim: int, a: float) -> float:
    """int over [-1, 1]^dim of |x|^{-a}."""
    if dim == 1:
        return 2 / (1 - a)
    val, _ = sint.quad(lambda t: (1 / math.cos(t)) ** (2 - a) / (2 - a), 0, math.pi / 4)
    return 8 * val


@lru_cache(maxsize=8)
def _riesz_kernel(dim: int, L: float, N: int, s: float) -> np.ndarray:
    """Quadrature weights of c |x|^{-(n-2s)} on the (2N-1)^dim difference stencil.

    The self weight makes the stencil integrate the kernel exactly over its box.
    """
    h = 2 * L / N
    d = h * np.arange(-(N - 1), N)
    D = np.meshgrid(*([d] * dim), indexing="ij")
    R2 = sum(di**2 for di in D)
    a = dim - 2 * s
    c = riesz_constant(dim, s)
    origin = (N - 1,) * dim
    with np.errstate(divide="ignore"):
        K = c * R2 ** (-a / 2) * h**dim
    K[origin] = 0.0
    half = (N - 0.5) * h
    K[origin] = c * half ** (dim - a) * _box_integral(dim, a) - K.sum()
    return K


def riesz_potential(field: GridField, s: float, far_field: bool = False) -> GridField:
    """(-Delta)^{-s} by zero-padded free-space convolution with c |x|^{-(n-2s)}."""
    _check_order(field.dim, s)
    out, _, _ = _riesz_values(field, s, far_field)
    return field.with_values(out)


def _riesz_values(field: GridField, s: float, far_field: bool, scales: tuple = FAR_FIELD_SCALES):
    K = _riesz_kernel(field.dim, field.L, field.N, s)
    N = field.N
    sl = tuple(slice(N - 1, 2 * N - 1) for _ in range(field.dim))
    v = field.values
    if not far_field:
        return signal.fftconvolve(v, K, mode="full")[sl], 0.0, 0.0
    ff = _farfield(field.dim, field.L, field.N, s, scales)
    c = ff.fit_phi_r @ v[ff.ring]
    rem = v - np.tensordot(c, ff.phi_r, 1)
    out = np.tensordot(c, ff.I_phi_r, 1) + signal.fftconvolve(rem, K, mode="full")[sl]
    return out, float(c @ ff.lead_phi_r), float(c @ ff.lead_I_phi_r)


# -- the flow -------------------------------------------------------------------

def _check_flow_params(field: GridField, P: Params):
    if P.n != field.dim:
        raise DomainError(f"Params.n = {P.n} does not match grid dimension {field.dim}")
    if not P.s < 1:
        raise DomainError(f"the flow requires s < 1, got s = {P.s}")


def fde_rhs(field: GridField, P: Params, far_field: bool = True) -> GridField:
    """-(-Delta)^s v^m."""
    _check_flow_params(field, P)
    if np.any(field.values <= 0):
        raise PositivityError("the flow needs v > 0 everywhere")
    return field.with_values(-_rhs(field, P, far_field))


def _rhs(field: GridField, P: Params, far_field: bool) -> np.ndarray:
    w = field.with_values(field.values**P.m)
    return _frac_laplacian_values(w, P.s, far_field, warn=False)[0]


@dataclass
class FlowRecord:
    t: float
    J: float
    dJdt: float
    F_u: float
    G_v: float
    minus_dGdt: float
    kappa_estimate: float
    Lambda: float
    K: float
    clipped_mass: float


@dataclass
class FlowState:
    field: GridField
    P: Params
    t: float = 0.0
    history: list = field(default_factory=list)
    steps: int = 0
    stop_reason: str = ""
    far_field: bool = True

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.history])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "J", "F_u", "G_v", "minus_dGdt", "residual"])
        res = identity_residuals(self) if len(self.history) >= 3 else np.full(len(self.history), np.nan)
        for rec, r in zip(self.history, res):
            w.writerow([f"{x:.17g}" for x in (rec.t, rec.J, rec.F_u, rec.G_v, rec.minus_dGdt, r)])
        return buf.getvalue()


def _tail_integral(values: np.ndarray, coef: float, psi_gap: float, cell: float) -> float:
    # integrand ~ coef |x|^{-2n} outside the box
    return float(values.sum() * cell + coef * psi_gap)


def measure(field: GridField, P: Params, far_field: bool = True) -> FlowRecord:
    """Flow diagnostics of a single snapshot (t is left at 0)."""
    _check_flow_params(field, P)
    v = field.values
    if np.any(v <= 0):
        raise PositivityError("diagnostics need v > 0 everywhere")
    n, s, m, p = P.n, P.s, P.m, P.p
    S = sobolev_constant(P)
    gap = _farfield(n, field.L, field.N, s).psi_gap if far_field else 0.0
    cell = field.cell
    w = v**m
    # a_*: tail coefficients of w and (-Delta)^s w; b_*: of v and (-Delta)^{-s} v
    Lw, a_w, a_Lw = _frac_laplacian_values(field.with_values(w), s, far_field, False, FAR_FIELD_SCALES)
    Iv, b_v, b_Iv = _riesz_values(field, s, far_field, FAR_FIELD_SCALES)
    J = _tail_integral(v**p, max(b_v, 0.0) ** p, gap, cell)
    norm_s = _tail_integral(w * Lw, a_w * a_Lw, gap, cell)
    energy = _tail_integral(v * Iv, b_v * b_Iv, gap, cell)
    F_u = S * norm_s - J ** (2 / P.q)
    G_v = S * J ** (2 / p) - energy
    dJdt = -p * norm_s
    minus_dG = 2 * J ** (2 * s / n) * F_u
    Lam = (n + 2 * s) / (2 * n) * dJdt / J
    keep = v >= CLIP_LEVEL
    # (-Delta)^s v^m + Lambda v = -(dv/dt - Lambda v), zero on separated solutions
    dens = np.where(keep, v ** (m - 1) * (Lw + Lam * v) ** 2, 0.0)
    Kcoef = b_v ** (m - 1) * (a_Lw + Lam * b_v) ** 2 if b_v > 0 else 0.0
    Kval = _tail_integral(dens, Kcoef, gap, cell)
    clipped = float(v[~keep].sum() * cell)
    return FlowRecord(0.0, J, dJdt, F_u, G_v, minus_dG, minus_dG / J, Lam, Kval, clipped)


def _record(state: FlowState) -> None:
    rec = measure(state.field, state.P, state.far_field)
    rec.t = state.t
    state.history.append(rec)


def time_step(field: GridField, P: Params, c_safe: float = 0.4) -> float:
    """c_safe h^{2s} / max(m v^{m-1})."""
    return c_safe * field.h ** (2 * P.s) / float(np.max(P.m * field.values ** (P.m - 1)))


def fde_step(state: FlowState, dt: float) -> FlowState:
    """One classical RK4 step."""
    P, f = state.P, state.field
    v = f.values

    def rhs(x):
        return -_rhs(f.with_values(x), P, state.far_field)

    k1 = rhs(v)
    k2 = rhs(v + 0.5 * dt * k1)
    k3 = rhs(v + 0.5 * dt * k2)
    k4 = rhs(v + dt * k3)
    new = v + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return replace(state, field=f.with_values(new), t=state.t + dt, steps=state.steps + 1)


def fde_run(v0: GridField, P: Params, t_end: float, c_safe: float = 0.4, record_every: int = 100,
            dt_floor: float = 1e-12, max_steps: int = 10**7, far_field: bool = True,
            record: bool = True) -> FlowState:
    """Integrate up to t_end, extinction approach, or positivity loss."""
    _check_flow_params(v0, P)
    if np.any(v0.values <= 0):
        raise PositivityError("initial datum must be positive")
    state = FlowState(v0, P, far_field=far_field)
    if not far_field:
        _warn_tail(v0.with_values(v0.values**P.m).boundary_ratio(), "fde_run")
    if record:
        _record(state)
    while state.t < t_end:
        v = state.field.values
        if v.min() < EXTINCTION_RATIO * v.max():
            state.stop_reason = "extinction"
            break
        if state.steps >= max_steps:
            state.stop_reason = "max_steps"
            break
        dt = time_step(state.field, P, c_safe)
        if dt < dt_floor:
            raise StiffnessError(f"time step {dt:.3e} fell below {dt_floor:.1e} at t = {state.t}")
        dt = min(dt, t_end - state.t)
        new = fde_step(state, dt)
        if np.any(new.field.values <= 0):
            state.stop_reason = "positivity"
            break
        new.history = state.history
        state = new
        if record and state.steps % record_every == 0:
            _record(state)
    else:
        state.stop_reason = "t_end"
    if record and state.history[-1].t != state.t:
        _record(state)
    return state


# -- exact solutions and fits ----------------------------------------------------

def separated_amplitude(P: Params) -> float:
    """(kappa/alpha)^alpha with alpha = (n+2s)/(4s)."""
    alpha = (P.n + 2 * P.s) / (4 * P.s)
    return (bubble_kappa(P.n, P.s) / alpha) ** alpha


def separated_solution(P: Params, L: float, N: int, t: float = 0.0, T: float = 1.0, lam: float = 1.2,
                       x0=None) -> GridField:
    """Exact solution lam^{-(n+2s)/2} a (T-t)^alpha u_*^r((x-x0)/lam)."""
    if not t < T:
        raise DomainError("need t < T")
    n, s = P.n, P.s
    alpha = (n + 2 * s) / (4 * s)
    g = GridField(n, L, N, np.ones((N,) * n))
    X = g.coords()
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)
    R2 = sum((xi - ci) ** 2 for xi, ci in zip(X, x0))
    amp = lam ** (-(n + 2 * s) / 2) * separated_amplitude(P) * (T - t) ** alpha
    return g.with_values(amp * (1 + R2 / lam**2) ** (-(n + 2 * s) / 2))


def separated_time_derivative(P: Params, L: float, N: int, t: float = 0.0, T: float = 1.0,
                              lam: float = 1.2) -> GridField:
    alpha = (P.n + 2 * P.s) / (4 * P.s)
    v = separated_solution(P, L, N, t, T, lam)
    return v.with_values(-alpha * v.values / (T - t))


def separated_residual(P: Params, L: float, N: int, t: float = 0.0, T: float = 1.0, lam: float = 1.2,
                       far_field: bool = True) -> float:
    """||dv/dt + (-Delta)^s v^m|| / ||dv/dt|| for the injected separated solution."""
    v = separated_solution(P, L, N, t, T, lam)
    vt = separated_time_derivative(P, L, N, t, T, lam).values
    Lw = _rhs(v, P, far_field)
    return float(np.linalg.norm(vt + Lw) / np.linalg.norm(vt))


def extinction_exponent(P: Params) -> float:
    """J ~ (T-t)^{n/(2s)} along the separated solution."""
    return P.n / (2 * P.s)


@dataclass
class ExtinctionFit:
    exponent: float
    T: float
    log_prefactor: float
    T_known: bool


def fit_extinction(t, J, T: float | None = None) -> ExtinctionFit:
    """Fit log J = c + e log(T - t); T is fitted unless given."""
    t = np.asarray(t, dtype=float)
    logJ = np.log(np.asarray(J, dtype=float))
    if len(t) < 4:
        raise InsufficientDataError("need at least four samples")
    if T is not None:
        e, c = np.polyfit(np.log(T - t), logJ, 1)
        return ExtinctionFit(float(e), float(T), float(c), True)
    # initial guess from the known-T fit on a trial T
    slope = np.polyfit(t, logJ, 1)[0]
    T0 = t[-1] + max(t[-1] - t[0], 1e-3)
    e0 = -slope * (T0 - t.mean())

    def model(tt, c, TT, e):
        return c + e * np.log(np.maximum(TT - tt, 1e-300))

    popt, _ = optimize.curve_fit(model, t, logJ, p0=[logJ[0] - e0 * math.log(T0), T0, e0],
                                 bounds=([-np.inf, t[-1] * (1 + 1e-9) + 1e-12, 0], np.inf), max_nfev=20000)
    return ExtinctionFit(float(popt[2]), float(popt[1]), float(popt[0]), False)


def two_bubble_datum(P: Params, L: float, N: int, separation: float = 6.0, T: float = 1.0,
                     lam: float = 1.2) -> GridField:
    """Sum of two separated-solution profiles centered at +-separation/2 on the first axis."""
    x0 = np.zeros(P.n)
    x0[0] = separation / 2
    a = separated_solution(P, L, N, 0.0, T, lam, x0)
    b = separated_solution(P, L, N, 0.0, T, lam, -x0)
    return a.with_values(a.values + b.values)


def perturbed_datum(P: Params, L: float, N: int, amplitude: float = 0.5, width: float = 1.0, shift=1.0,
                    T: float = 1.0, lam: float = 1.2) -> GridField:
    """Separated datum times 1 + amplitude * Gaussian bump centered off the origin."""
    v = separated_solution(P, L, N, 0.0, T, lam)
    X = v.coords()
    R2 = (X[0] - shift) ** 2 + sum(xi**2 for xi in X[1:])
    return v.with_values(v.values * (1 + amplitude * np.exp(-R2 / width**2)))


# -- checks along a trajectory ---------------------------------------------------

def finite_difference_dGdt(state: FlowState) -> np.ndarray:
    """Second-order finite differences of G along the recorded history."""
    if len(state.history) < 3:
        raise InsufficientDataError("need at least three history samples")
    return np.gradient(state.column("G_v"), state.column("t"))


def identity_residuals(state: FlowState) -> np.ndarray:
    """|dG/dt (finite differences) + 2 J^{2s/n} F[u]| / |2 J^{2s/n} F[u]|; NaN at the endpoints."""
    fd = finite_difference_dGdt(state)
    an = state.column("minus_dGdt")
    with np.errstate(divide="ignore", invalid="ignore"):
        res = np.abs(fd + an) / np.abs(an)
    res[0] = res[-1] = np.nan
    return res


@dataclass
class FlowDiagnostics:
    J: float
    dJdt: float
    F_u: float
    G_v: float
    dGdt: float
    kappa0: float
    Lambda: float
    K: float
    clipped_mass: float

    def to_dict(self) -> dict:
        return asdict(self)


def flow_diagnostics(state: FlowState) -> FlowDiagnostics:
    """Diagnostics of the current snapshot; kappa0 = -G'(0)/J(0) from the first record."""
    if not state.history:
        raise InsufficientDataError("the state has no history")
    rec = measure(state.field, state.P, state.far_field)
    first = state.history[0]
    return FlowDiagnostics(rec.J, rec.dJdt, rec.F_u, rec.G_v, -rec.minus_dGdt, first.minus_dGdt / first.J,
                           rec.Lambda, rec.K, rec.clipped_mass)


@dataclass
class LemmaCheck:
    status: str          # "holds", "violated" or "inconclusive"
    t: np.ndarray
    margin: np.ndarray   # G'' - (J'/J) G', should be >= 0
    tolerance: np.ndarray
    conclusive: np.ndarray

    @property
    def holds(self) -> bool:
        return self.status == "holds"


def verify_comparison_lemma(state: FlowState, rel_floor: float = 1e-6, noise_level: float = 1e-3) -> LemmaCheck:
    """Check G'' >= (J'/J) G' (equivalently G''/G' <= J'/J) at interior samples.

    G' comes from the exact identity, G'' from its centered differences; the
    tolerance is the disagreement with the second difference of G itself.
    G' = 2J - 2 S J^{2s/n} ||u||_s^2 is a difference of terms of size 2J, so a
    sample where |G'| < noise_level * 2J says nothing about the sign of G''/G'.
    """
    if not state.P.s < 1:
        raise DomainError("the comparison lemma assumes s < 1")
    if len(state.history) < 5:
        raise InsufficientDataError("need at least five history samples")
    t = state.column("t")
    J = state.column("J")
    dJ = state.column("dJdt")
    dG = -state.column("minus_dGdt")
    G = state.column("G_v")
    d2G = np.gradient(dG, t)
    d2G_alt = np.gradient(np.gradient(G, t), t)
    margin = d2G - dJ / J * dG
    scale = np.abs(d2G) + np.abs(dJ / J * dG)
    tol = np.abs(d2G - d2G_alt) + rel_floor * scale
    conclusive = np.abs(dG) > noise_level * 2 * J
    inner = slice(1, -1)
    m, tl, c = margin[inner], tol[inner], conclusive[inner]
    if not np.any(c):
        status = "inconclusive"
    elif np.all(m[c] >= -tl[c]):
        status = "holds"
    else:
        status = "violated"
    return LemmaCheck(status, t[inner], m, tl, c)


def verify_growth_bound(state: FlowState, rel_tol: float = 1e-6) -> bool:
    """-G'(t) <= kappa0 J(t) along the history."""
    J = state.column("J")
    mdG = state.column("minus_dGdt")
    kappa0 = mdG[0] / J[0]
    return bool(np.all(mdG <= kappa0 * J + rel_tol * np.abs(kappa0 * J) + 1e-300))


def check_monotonicity(state: FlowState, rel_tol: float = 1e-9) -> bool:
    """J nonincreasing and G nonincreasing along the history."""
    J = state.column("J")
    G = state.column("G_v")
    okJ = np.all(np.diff(J) <= rel_tol * np.abs(J[:-1]))
    scaleG = sobolev_constant(state.P) * J[:-1] ** (2 / state.P.p)
    okG = np.all(np.diff(G) <= rel_tol * scaleG)
    return bool(okJ and okG)


# -- improved nonlinear inequality --------------------------------------------------

def phi(x, C: float = 1.0):
    """sqrt(C^2 + 2 C x) - C for x >= 0 and 0 < C <= 1."""
    if not 0 < C <= 1:
        raise DomainError(f"need 0 < C <= 1, got {C}")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("phi is defined for x >= 0")
    # C^2 + 2Cx - C^2 over the sum, stable near x = 0
    out = 2 * C * x / (np.sqrt(C * C + 2 * C * x) + C)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PhiGain:
    C: float = 1.0

    def __post_init__(self):
        if not 0 < self.C <= 1:
            raise DomainError(f"need 0 < C <= 1, got {self.C}")

    def __call__(self, x):
        return phi(x, self.C)

    @property
    def crossover(self) -> float:
        """phi(x) <= C x exactly when x >= this value."""
        return 2 * (1 - self.C) / self.C


@dataclass
class NonlinearCheck:
    holds: bool
    margin: float
    scale: float
    J: float
    F_u: float
    G_v: float


def verify_improved_nonlinear(F: ZonalFunction, P: Params, C: float = 1.0, tol: float = 1e-8) -> NonlinearCheck:
    """S J^{1+2s/n} phi(J^{2s/n-1} F[u]) - G[u^r] for u given by its q-lift F."""
    if not P.s < 1:
        raise DomainError("the improved nonlinear inequality assumes s < 1")
    rep = deficit_report(F, P)
    S = sobolev_constant(P)
    n, s = P.n, P.s
    J = rep.J
    x = J ** (2 * s / n - 1) * max(rep.F_value, 0.0)
    main = S * J ** (1 + 2 * s / n) * phi(x, C)
    margin = main - rep.G_value
    scale = S * J ** (4 * s / n) * (S * rep.sobolev_norm_sq + rep.lq_norm**2) + S * rep.lp_norm**2 + rep.hls_energy
    return NonlinearCheck(margin >= -tol * scale, margin, scale, J, rep.F_value, rep.G_value)
