"""Closed-form adaptation dynamics from the characteristic curves.

The mean fitness of the population obeys

    mbar(t) = -mu*(n/2)*tanh(mu*t) - (H(t) - delta(t))**2 / 2 + R0'(t),

where H(t) = mu * int_0^t delta(u) sinh(mu*u)/cosh(mu*t) du is a weighted
history of the optimum displacement and R0' carries the initial condition.
Variance and skewness are extracted from the auxiliary function
Q(t, z, zt) -- the generating function of the two fitness components,
composed with the characteristic change of variables -- by finite-difference
stencils.  All hyperbolic factors are evaluated in exponentially scaled form
so the formulas stay finite for arbitrarily long times.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .environment import EnvTrajectory, HorizonError, Linear, LinearPlusSin, ModelParams, Power, Sin, SinSq, Tabulated
from .numerics import (
    DomainError,
    QuadratureSpec,
    hyp_ratio_cosh_cosh,
    hyp_ratio_sinh_cosh,
    integrate,
    log_cosh,
    stencil_derivative,
)


class NegativeVarianceError(RuntimeError):
    """The extracted fitness variance is materially negative (numerical breakdown)."""


class ZeroVarianceError(RuntimeError):
    """Skewness is undefined because the fitness variance vanishes."""


class UnsupportedTrajectoryError(ValueError):
    """The requested closed-form summary does not exist for this trajectory."""


# ---------------------------------------------------------------------------
# initial conditions (generating function of the fitness components at t=0)
# ---------------------------------------------------------------------------


class InitialCondition:
    """Initial generating function C0(z1, z2) and its two first partials.

    C0(0, 0) = 0 for every variant (normalization of a log-transformed
    probability distribution).
    """

    def C0(self, params: ModelParams, z1: float, z2: float) -> float:
        raise NotImplementedError

    def d1(self, params: ModelParams, z1: float, z2: float) -> float:
        raise NotImplementedError

    def d2(self, params: ModelParams, z1: float, z2: float) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class Clonal(InitialCondition):
    """All individuals at the optimum: C0 identically zero."""

    def C0(self, params, z1, z2):
        return 0.0

    def d1(self, params, z1, z2):
        return 0.0

    def d2(self, params, z1, z2):
        return 0.0


@dataclass(frozen=True)
class DiracInit(InitialCondition):
    """Clonal population at phenotype x* with x*_1 = x1_star, |x*|^2 = norm2_star."""

    x1_star: float
    norm2_star: float

    def __post_init__(self) -> None:
        if self.norm2_star < self.x1_star**2 * (1.0 - 1e-12):
            raise ValueError("norm2_star must be >= x1_star**2")

    def C0(self, params, z1, z2):
        return z1 * self.x1_star - 0.5 * z2 * self.norm2_star

    def d1(self, params, z1, z2):
        return self.x1_star

    def d2(self, params, z1, z2):
        return -0.5 * self.norm2_star


@dataclass(frozen=True)
class IsotropicGaussianInit(InitialCondition):
    """Gaussian phenotype cloud N(a*u, sigma2*I_n), mean a along the shift axis."""

    a: float
    sigma2: float

    def __post_init__(self) -> None:
        if self.sigma2 < 0.0:
            raise ValueError("sigma2 must be >= 0")

    def C0(self, params, z1, z2):
        s2 = self.sigma2
        den = 1.0 + z2 * s2
        return -(params.n / 2.0) * math.log(den) + (
            z1 * z1 * s2 + 2.0 * self.a * z1 - z2 * self.a * self.a
        ) / (2.0 * den)

    def d1(self, params, z1, z2):
        den = 1.0 + z2 * self.sigma2
        return (z1 * self.sigma2 + self.a) / den

    def d2(self, params, z1, z2):
        s2 = self.sigma2
        den = 1.0 + z2 * s2
        num = z1 * z1 * s2 + 2.0 * self.a * z1 - z2 * self.a * self.a
        return (
            -(params.n / 2.0) * s2 / den
            - 0.5 * s2 * num / (den * den)
            - 0.5 * self.a * self.a / den
        )


@dataclass(frozen=True)
class CustomInit(InitialCondition):
    """User-supplied C0(z1, z2); missing partials are finite-differenced (h=1e-5)."""

    C0_fn: Callable[[float, float], float]
    d1_fn: Callable[[float, float], float] | None = None
    d2_fn: Callable[[float, float], float] | None = None

    def __post_init__(self) -> None:
        if abs(self.C0_fn(0.0, 0.0)) > 1e-12:
            raise ValueError("C0(0, 0) must equal 0")

    def C0(self, params, z1, z2):
        return self.C0_fn(z1, z2)

    def d1(self, params, z1, z2):
        if self.d1_fn is not None:
            return self.d1_fn(z1, z2)
        return stencil_derivative(lambda v: self.C0_fn(v, z2), z1, 1, h=1e-5)

    def d2(self, params, z1, z2):
        if self.d2_fn is not None:
            return self.d2_fn(z1, z2)
        return stencil_derivative(lambda v: self.C0_fn(z1, v), z2, 1, h=1e-5)


# ---------------------------------------------------------------------------
# characteristic curves
# ---------------------------------------------------------------------------


def y2(params: ModelParams, z: float) -> float:
    """Second characteristic coordinate tanh(mu*z)/mu; saturates at 1/mu."""
    return math.tanh(params.mu * z) / params.mu


def _y1_diag_integral(
    params: ModelParams,
    traj: EnvTrajectory,
    tau: float,
    zeta: float,
    spec: QuadratureSpec | None = None,
) -> float:
    """int_0^zeta delta(zeta + tau - s) cosh(mu s)/cosh(mu zeta) ds.

    Adaptive quadrature with the scaled cosh ratio; for tabulated paths the
    integral is taken node-aligned (trapezoid on the path grid) so that the
    piecewise-linear kinks cannot stall the adaptive refinement.
    """
    if zeta == 0.0:
        return 0.0
    mu = params.mu
    if isinstance(traj, Tabulated):
        # substitute u = zeta + tau - s:  int_tau^{zeta+tau} delta(u) cosh(mu (zeta+tau-u))/cosh(mu zeta) du
        lo, hi = (tau, zeta + tau) if zeta > 0 else (zeta + tau, tau)
        nodes = traj.times[(traj.times > lo) & (traj.times < hi)]
        u = np.concatenate(([lo], nodes, [hi]))
        w = traj.delta(u) * np.exp(log_cosh(mu * (zeta + tau - u)) - log_cosh(mu * zeta))
        val = float(np.trapezoid(w, u))
        return val if zeta > 0 else -val

    lznorm = log_cosh(mu * zeta)

    def f(s: np.ndarray) -> np.ndarray:
        return traj.delta(zeta + tau - s) * np.exp(log_cosh(mu * s) - lznorm)

    if zeta > 0:
        return integrate(f, 0.0, zeta, spec)
    return -integrate(f, zeta, 0.0, spec)


def _ratio_term(params: ModelParams, t: float, z: float, d: float) -> float:
    """(z - zt) * cosh(mu (z+t))/cosh(mu z) with the factor attached in log space."""
    if d == 0.0:
        return 0.0
    mu = params.mu
    return math.copysign(
        math.exp(math.log(abs(d)) + log_cosh(mu * (z + t)) - log_cosh(mu * z)), d
    )


def y1(
    params: ModelParams,
    traj: EnvTrajectory,
    t: float,
    z: float,
    z_tilde: float,
    spec: QuadratureSpec | None = None,
) -> float:
    """First characteristic coordinate at (t, z, z_tilde)."""
    return _y1_diag_integral(params, traj, t, z, spec) + _ratio_term(
        params, t, z, z - z_tilde
    )


def h_delta(
    params: ModelParams,
    traj: EnvTrajectory,
    t: float,
    spec: QuadratureSpec | None = None,
) -> float:
    """Weighted history integral mu * int_0^t delta(u) sinh(mu u)/cosh(mu t) du.

    Tabulated paths are integrated by trapezoid on their own node grid
    (the path is piecewise linear, so adaptivity buys nothing); closed-form
    variants use adaptive quadrature of the scaled integrand.
    """
    if t == 0.0:
        return 0.0
    if t < 0.0:
        raise DomainError("h_delta requires t >= 0")
    mu = params.mu
    if isinstance(traj, Tabulated):
        nodes = traj.times[traj.times < t]
        u = np.concatenate((nodes, [t]))
        w = mu * traj.delta(u) * hyp_ratio_sinh_cosh(mu * u, mu * t)
        return float(np.trapezoid(w, u))

    def f(u: np.ndarray) -> np.ndarray:
        return mu * traj.delta(u) * hyp_ratio_sinh_cosh(mu * u, np.full_like(u, mu * t))

    return integrate(f, 0.0, t, spec)


def _phi0_first(
    params: ModelParams,
    traj: EnvTrajectory,
    t: float,
    spec: QuadratureSpec | None = None,
) -> float:
    """y1(0, t, t) = int_0^t delta(u) cosh(mu (t-u))/cosh(mu t) du."""
    if t == 0.0:
        return 0.0
    mu = params.mu
    if isinstance(traj, Tabulated):
        nodes = traj.times[traj.times < t]
        u = np.concatenate((nodes, [t]))
        w = traj.delta(u) * hyp_ratio_cosh_cosh(mu * (t - u), np.full_like(u, mu * t))
        return float(np.trapezoid(w, u))

    def f(u: np.ndarray) -> np.ndarray:
        return traj.delta(u) * hyp_ratio_cosh_cosh(mu * (t - u), np.full_like(u, mu * t))

    return integrate(f, 0.0, t, spec)


def _r0_prime(
    params: ModelParams,
    traj: EnvTrajectory,
    init: InitialCondition,
    t: float,
    spec: QuadratureSpec | None = None,
) -> float:
    """Initial-condition contribution to mbar(t); identically 0 for Clonal."""
    if isinstance(init, Clonal):
        return 0.0
    mu = params.mu
    sech = math.exp(-log_cosh(mu * t))
    p1 = _phi0_first(params, traj, t, spec)
    p2 = y2(params, t)
    H = h_delta(params, traj, t, spec)
    return (traj.delta(t) - H) * sech * init.d1(params, p1, p2) + sech * sech * init.d2(
        params, p1, p2
    )


def mbar_closed(
    params: ModelParams,
    traj: EnvTrajectory,
    init: InitialCondition,
    t: float,
    spec: QuadratureSpec | None = None,
) -> float:
    """Mean fitness at time t: mutation load + lag load + initial-condition term."""
    if t < 0.0:
        raise DomainError("mbar_closed requires t >= 0")
    mu = params.mu
    H = h_delta(params, traj, t, spec)
    lag = H - traj.delta(t)
    return (
        -mu * (params.n / 2.0) * math.tanh(mu * t)
        - 0.5 * lag * lag
        + _r0_prime(params, traj, init, t, spec)
    )


# ---------------------------------------------------------------------------
# Q evaluation
#
# Q(t,z,zt) = int_0^t [gamma(y1(t-s, z+s, zt+s), y2(z+s))
#                      - gamma(y1(t-s, s, s), y2(s))] ds
#             + C0(y1(0, z+t, zt+t), y2(z+t)) - C0(y1(0, t, t), y2(t))
#
# Along the integration path the inner characteristic integrals collapse onto
# a single cumulative function: with A = logcosh(mu (z+t)),
#
#   y1(t-s, z+s, zt+s) = e^{A - logcosh(mu (z+s))} * (G_z(t-s) + (z - zt)),
#   G_z(U) = int_U^{z+t} delta(u) e^{logcosh(mu (z+t-u)) - A} du,
#
# so one cumulative per distinct z value serves every outer node.  The outer
# integral and the cumulative use fixed, scale-resolved composite Simpson
# rules; a fixed rule makes the quadrature bias a smooth function of (z, zt),
# which the moment-extraction stencils then cancel.  (Point-adaptive
# quadrature would make the bias jump between neighbouring stencil nodes and
# ruin the third-derivative extraction at large mu*t.)
# ---------------------------------------------------------------------------


def _gamma(params: ModelParams, z1, z2):
    mu2 = params.mu * params.mu
    return mu2 * (0.5 * z1 * z1 - 0.5 * params.n * z2)


def _segment_integrals(
    traj: EnvTrajectory,
    lo: np.ndarray,
    hi: np.ndarray,
    weight_log: Callable[[np.ndarray], np.ndarray],
    m: int,
) -> np.ndarray:
    """Composite Simpson of delta(u)*exp(weight_log(u)) over each [lo_i, hi_i]."""
    widths = hi - lo
    # sub-panel edges and midpoints: shape (segments, m, 3)
    j = np.arange(m)
    base = lo[:, None] + widths[:, None] * (j / m)
    h = (widths / m)[:, None]
    u = np.stack([base, base + 0.5 * h, base + h], axis=-1)
    f = traj.delta(u) * np.exp(weight_log(u))
    return np.einsum("smk,k->s", f, np.array([1.0, 4.0, 1.0])) / 6.0 * (widths / m)


def _cumulative_G(
    params: ModelParams,
    traj: EnvTrajectory,
    t: float,
    z: float,
    s_fine: np.ndarray,
    m_inner: int,
) -> np.ndarray:
    """G_z(t - s) for every node of s_fine, plus G_z(0) as the last element."""
    mu = params.mu
    top = z + t
    A = log_cosh(mu * top)

    # breakpoints: the reversed outer nodes, 0, and the base z+t
    pts = np.unique(np.concatenate((t - s_fine, [0.0, top])))
    lo, hi = pts[:-1], pts[1:]

    def wlog(u):
        return log_cosh(mu * (top - u)) - A

    seg = _segment_integrals(traj, lo, hi, wlog, m_inner)
    # The suffix values near the base are re-amplified by e^{mu (t-s)} when the
    # outer integrand is assembled, and the z-row and 0-row grids differ
    # structurally there (the base breakpoint z+t splits a panel).  Integrate
    # those few segments to roundoff so the row-to-row error mismatch cannot
    # survive the amplification.
    h_fine = s_fine[1] - s_fine[0] if s_fine.size > 1 else max(t, 1.0)
    near_top = hi > min(t, top) - 2.5 * h_fine
    if np.any(near_top):
        seg = seg.copy()
        seg[near_top] = _segment_integrals(
            traj, lo[near_top], hi[near_top], wlog, 64 * m_inner
        )
    if getattr(traj, "singular_at_zero", False) and hi[0] > 0.0:
        # refine the first segment geometrically: delta has a power-law kink at u=0
        edges = hi[0] * 0.5 ** np.arange(26.0)[::-1]
        glo = np.concatenate(([0.0], edges[:-1]))
        seg = seg.copy()
        seg[0] = float(np.sum(_segment_integrals(traj, glo, edges, wlog, 2)))

    # accumulate anchored at the base z+t: G there is 0 and nearby values are
    # sums of the local (exponentially small) segments.  Anchoring at u=0
    # would compute them as differences of O(G(0)) prefixes, and the rounding
    # residue explodes under the e^{mu(t-s)} factor applied later.
    i_top = int(np.searchsorted(pts, top))
    G = np.empty(pts.size)
    G[: i_top + 1] = np.concatenate(
        (np.cumsum(seg[:i_top][::-1])[::-1], [0.0])
    )
    if i_top < pts.size - 1:
        G[i_top + 1 :] = -np.cumsum(seg[i_top:])
    g_at = dict(zip(pts.tolist(), G.tolist()))
    g_nodes = np.array([g_at[u] for u in (t - s_fine).tolist()])
    return np.concatenate((g_nodes, [g_at[0.0]]))


def _outer_grid(params: ModelParams, traj: EnvTrajectory, t: float) -> tuple[np.ndarray, int]:
    """Fine node grid on [0, t] (panel edges + midpoints) and inner sub-panel count."""
    mu = params.mu
    period = traj.period_hint()
    h_s = min(1.0 / (12.0 * mu), period / 96.0, t / 4.0)
    n_panels = max(4, int(math.ceil(t / h_s)))
    s_fine = np.linspace(0.0, t, 2 * n_panels + 1)
    h_fine = t / (2 * n_panels)
    h_in = min(1.0 / (20.0 * mu), period / 128.0, traj.kink_spacing())
    m_inner = max(1, int(math.ceil(h_fine / h_in)))
    return s_fine, m_inner


def q_eval(
    params: ModelParams,
    traj: EnvTrajectory,
    init: InitialCondition,
    t: float,
    z: float,
    z_tilde: float,
    spec: QuadratureSpec | None = None,
) -> float:
    """Value of Q(t, z, z_tilde); Q(t, 0, 0) = 0 holds exactly by construction.

    z and z_tilde may take small negative values (the moment stencils step
    slightly across 0); the trajectory domain must cover [0, t + max(z, 0)].
    """
    return _q_core(params, traj, init, t, z, z - z_tilde, spec)


def _q_core(
    params: ModelParams,
    traj: EnvTrajectory,
    init: InitialCondition,
    t: float,
    z: float,
    d: float,
    spec: QuadratureSpec | None = None,
) -> float:
    """Q at (z, z_tilde = z - d), with the off-diagonal displacement d explicit.

    Q depends on z_tilde only through d, and the moment stencils need
    displacements of order sech(mu t) -- far below the rounding granularity
    of z at large times -- so d is carried as its own argument instead of
    being reconstructed from z - z_tilde.
    """
    if t < 0.0:
        raise DomainError("q_eval requires t >= 0")
    if t + max(z, 0.0) > traj.horizon:
        raise HorizonError("q_eval needs the trajectory on [0, t + z]")
    if z == 0.0 and d == 0.0:
        return 0.0
    mu = params.mu
    if t == 0.0:
        arg1 = _y1_diag_integral(params, traj, 0.0, z, spec) + d
        return init.C0(params, arg1, y2(params, z))

    s_fine, m_inner = _outer_grid(params, traj, t)
    A_z = log_cosh(mu * (z + t))
    A_0 = log_cosh(mu * t)

    g_z = _cumulative_G(params, traj, t, z, s_fine, m_inner)
    if z == 0.0:
        g_0 = g_z
    else:
        g_0 = _cumulative_G(params, traj, t, 0.0, s_fine, m_inner)

    e_z = np.exp(A_z - log_cosh(mu * (z + s_fine)))
    e_0 = np.exp(A_0 - log_cosh(mu * s_fine))
    y1a = e_z * (g_z[:-1] + d)
    y1b = e_0 * g_0[:-1]
    beta_a = _gamma(params, y1a, np.tanh(mu * (z + s_fine)) / mu)
    beta_b = _gamma(params, y1b, np.tanh(mu * s_fine) / mu)
    f = beta_a - beta_b

    h_fine = s_fine[1] - s_fine[0]
    w = np.ones(s_fine.size)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    integral = float(np.dot(w, f)) * h_fine / 3.0

    q0_a = init.C0(params, g_z[-1] + d, y2(params, z + t))
    q0_b = init.C0(params, g_0[-1], y2(params, t))
    return integral + q0_a - q0_b


# ---------------------------------------------------------------------------
# variance and skewness via stencils on Q sections
# ---------------------------------------------------------------------------


def _diag_section(params, traj, init, t, spec):
    return lambda zeta: q_eval(params, traj, init, t, zeta, zeta, spec)


def _d2_richardson(g: Callable[[float], float], h: float) -> float:
    d_h = stencil_derivative(g, 0.0, 2, h=h)
    d_h2 = stencil_derivative(g, 0.0, 2, h=0.5 * h)
    return (4.0 * d_h2 - d_h) / 3.0


def _d3_richardson(g: Callable[[float], float], h: float) -> float:
    d_h = stencil_derivative(g, 0.0, 3, h=h)
    d_h2 = stencil_derivative(g, 0.0, 3, h=0.5 * h)
    return (4.0 * d_h2 - d_h) / 3.0


_H_DIAG = 0.02
_H_DIAG3 = 0.4
_H_W = 1e-3
_H_CROSS = 1e-3


def variance_closed(
    params: ModelParams,
    traj: EnvTrajectory,
    init: InitialCondition,
    t: float,
    spec: QuadratureSpec | None = None,
    eps_tol: float = 1e-7,
) -> float:
    """Fitness variance V(t) = d2R/dz2(t,0) + delta'(t)/cosh(mu t) * dQ/dzt(t,0,0).

    Both partials come from finite-difference stencils over q_eval; the
    zt-step is scaled by sech(mu t) because Q's off-diagonal curvature grows
    like cosh(mu t)^2.  Values within eps_tol below 0 are clamped to 0 with a
    warning; anything more negative raises NegativeVarianceError.

    At t = 0 the stencil would need the trajectory at negative times, so the
    variance is taken directly from the initial condition: with delta(0) = 0
    the fitness is the second component alone and V(0) is its variance.
    """
    mu = params.mu
    if t == 0.0:
        return max(
            0.0,
            stencil_derivative(lambda z2: init.d2(params, 0.0, z2), 0.0, 1, h=1e-5),
        )
    d2R = _d2_richardson(_diag_section(params, traj, init, t, spec), _H_DIAG)
    sech_t = math.exp(-log_cosh(mu * t))

    def phi_w(w: float) -> float:
        return _q_core(params, traj, init, t, 0.0, -w * sech_t, spec)

    x1 = stencil_derivative(phi_w, 0.0, 1, h=_H_W)  # dQ/dzt(t,0,0) / cosh(mu t)
    v = d2R + float(traj.delta_prime(t)) * x1
    if v < 0.0:
        if v < -eps_tol:
            raise NegativeVarianceError(
                f"variance {v} at t={t} is negative beyond tolerance {eps_tol}"
            )
        warnings.warn(f"variance {v:.3e} at t={t} clamped to 0", stacklevel=2)
        return 0.0
    return v


def skewness_closed(
    params: ModelParams,
    traj: EnvTrajectory,
    init: InitialCondition,
    t: float,
    spec: QuadratureSpec | None = None,
) -> float:
    """Skewness of the fitness distribution at time t.

    Combines the third diagonal derivative of R, the first diagonal
    derivative, and sech-scaled off-diagonal partials of Q; requires a
    strictly positive variance (undefined at t=0 for a clonal start).
    """
    mu = params.mu
    v = variance_closed(params, traj, init, t, spec)
    if v <= 0.0:
        raise ZeroVarianceError(f"variance is 0 at t={t}; skewness undefined")
    if t == 0.0:
        # third cumulant of the second fitness component, from the init alone
        m3 = stencil_derivative(lambda z2: init.d2(params, 0.0, z2), 0.0, 2, h=1e-4)
        return m3 / v**1.5
    g = _diag_section(params, traj, init, t, spec)
    d3R = _d3_richardson(g, _H_DIAG3)
    d1R = stencil_derivative(g, 0.0, 1, h=1e-4)

    sech_t = math.exp(-log_cosh(mu * t))

    def phi(zeta: float, w: float) -> float:
        return _q_core(params, traj, init, t, zeta, -w * sech_t, spec)

    x1 = stencil_derivative(lambda w: phi(0.0, w), 0.0, 1, h=_H_W)
    h, k = _H_CROSS, _H_CROSS
    cross = (phi(h, k) - phi(h, -k) - phi(-h, k) + phi(-h, -k)) / (4.0 * h * k)

    dp = float(traj.delta_prime(t))
    dpp = float(traj.delta_second(t))
    bracket = (
        d3R
        + 2.0 * mu * mu * d1R
        + dpp * x1
        + 3.0 * dp * (cross - mu * math.tanh(mu * t) * x1)
    )
    return bracket / v**1.5


# ---------------------------------------------------------------------------
# asymptotic summaries, critical speeds
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AsymptoticSummary:
    """Variant-specific large-time behaviour of the fitness moments."""

    variant: str
    mbar_inf: float | None = None
    mbar_diverges: bool = False
    vm_inf: float | None = None
    vm_diverges: bool = False
    skew_inf: float | None = None
    mu_star: float | None = None
    mean_over_period: float | None = None
    period: float | None = None


def asymptotic_summary(params: ModelParams, traj: EnvTrajectory) -> AsymptoticSummary:
    """Closed-form large-time summary for the supported trajectory families."""
    mu, n = params.mu, params.n
    load = -mu * n / 2.0
    if isinstance(traj, Linear):
        c = traj.c
        vm = mu * mu * n / 2.0 + c * c / mu
        return AsymptoticSummary(
            variant="linear",
            mbar_inf=load - c * c / (2.0 * mu * mu),
            vm_inf=vm,
            skew_inf=-(mu**3 * n + 3.0 * c * c) / vm**1.5,
            mu_star=(2.0 * c * c / n) ** (1.0 / 3.0),
        )
    if isinstance(traj, Power):
        if traj.alpha < 1.0:
            return AsymptoticSummary(
                variant="power", mbar_inf=load, vm_inf=mu * mu * n / 2.0
            )
        return AsymptoticSummary(variant="power", mbar_diverges=True, vm_diverges=True)
    if isinstance(traj, Sin):
        w, dm = traj.omega, traj.delta_max
        return AsymptoticSummary(
            variant="sin",
            mean_over_period=load - dm * dm * w * w / (4.0 * (w * w + mu * mu)),
            period=math.pi / w,
        )
    if isinstance(traj, SinSq):
        w, dm = traj.omega, traj.delta_max
        return AsymptoticSummary(
            variant="sinsq",
            mean_over_period=load - dm * dm * w * w / (16.0 * w * w + 4.0 * mu * mu),
            period=math.pi / w,
        )
    if isinstance(traj, LinearPlusSin):
        w, dm, c = traj.omega, traj.delta_max, traj.c
        return AsymptoticSummary(
            variant="linear_plus_sin",
            mean_over_period=load
            - c * c / (2.0 * mu * mu)
            - dm * dm * w * w / (4.0 * (w * w + mu * mu)),
            period=2.0 * math.pi / w,
        )
    raise UnsupportedTrajectoryError(
        f"no closed-form summary for {type(traj).__name__}"
    )


@dataclass(frozen=True)
class CriticalSpeed:
    """Critical shift speed for persistence; c_star = 0 with never_persists set
    when even a static environment cannot sustain the population."""

    c_star: float
    never_persists: bool


def critical_speed(params: ModelParams) -> CriticalSpeed:
    """c* = mu*sqrt(2 r_max - mu n), the fastest sustainable optimum speed."""
    rad = 2.0 * params.r_max - params.mu * params.n
    if rad < 0.0:
        return CriticalSpeed(0.0, True)
    return CriticalSpeed(params.mu * math.sqrt(rad), False)


def critical_speed_with_fluctuations(
    params: ModelParams, delta_max: float, omega: float
) -> CriticalSpeed:
    """Critical speed when periodic fluctuations add their own lag load."""
    if delta_max < 0.0 or omega < 0.0:
        raise DomainError("delta_max and omega must be >= 0")
    mu = params.mu
    rad = 2.0 * params.r_max - mu * params.n
    if omega > 0.0 or delta_max > 0.0:
        rad -= delta_max**2 * omega**2 / (2.0 * (omega**2 + mu**2))
    if rad < 0.0:
        return CriticalSpeed(0.0, True)
    return CriticalSpeed(mu * math.sqrt(rad), False)


# ---------------------------------------------------------------------------
# trajectory assembly and population-size coupling
# ---------------------------------------------------------------------------


@dataclass
class MomentTrajectory:
    """Time series of fitness moments with provenance tag.

    vm/skew/rho are optional; vm entries are >= 0 and times strictly
    increasing.  source is one of 'analytic', 'ibm', 'ide'.
    """

    times: np.ndarray
    mbar: np.ndarray
    vm: np.ndarray | None = None
    skew: np.ndarray | None = None
    rho: np.ndarray | None = None
    source: str = "analytic"

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.mbar = np.asarray(self.mbar, dtype=float)
        if self.times.ndim != 1 or self.times.shape != self.mbar.shape:
            raise ValueError("times and mbar must be equal-length 1-D arrays")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0.0):
            raise ValueError("times must be strictly increasing")

    def to_csv(self, path) -> None:
        """Write columns t,mbar,vm,skew[,rho]; absent series leave empty fields."""
        import csv as _csv

        cols = ["t", "mbar", "vm", "skew"]
        if self.rho is not None:
            cols.append("rho")
        with open(path, "w", newline="") as fh:
            w = _csv.writer(fh)
            w.writerow(cols)
            for i, t in enumerate(self.times):
                row = [repr(float(t)), repr(float(self.mbar[i]))]
                row.append("" if self.vm is None else repr(float(self.vm[i])))
                row.append("" if self.skew is None else repr(float(self.skew[i])))
                if self.rho is not None:
                    row.append(repr(float(self.rho[i])))
                w.writerow(row)


def mean_fitness_trajectory(
    params: ModelParams,
    traj: EnvTrajectory,
    init: InitialCondition,
    times,
    spec: QuadratureSpec | None = None,
    include_moments: bool = False,
    rho0: float | None = None,
) -> MomentTrajectory:
    """Evaluate the closed-form moments on a time grid.

    include_moments adds the stencil-based variance and skewness (markedly
    more expensive per point); rho0 additionally integrates the logistic
    population-size equation along the same grid.
    """
    times = np.asarray(times, dtype=float)
    mbar = np.array([mbar_closed(params, traj, init, t, spec) for t in times])
    vm = skew = rho = None
    if include_moments:
        vm = np.array([variance_closed(params, traj, init, t, spec) for t in times])
        skew_list = []
        for i, t in enumerate(times):
            if vm[i] <= 0.0:
                skew_list.append(np.nan)
            else:
                skew_list.append(skewness_closed(params, traj, init, t, spec))
        skew = np.array(skew_list)
    if rho0 is not None:
        rho, _, _ = persistence_rho(params, traj, init, times, rho0, spec=spec)
    return MomentTrajectory(times=times, mbar=mbar, vm=vm, skew=skew, rho=rho,
                            source="analytic")


def persistence_rho(
    params: ModelParams,
    traj: EnvTrajectory,
    init: InitialCondition,
    times,
    rho0: float,
    floor: float = 1e-12,
    spec: QuadratureSpec | None = None,
) -> tuple[np.ndarray, bool, float | None]:
    """Integrate rho' = rho*(r_max + mbar(t) - rho) by classical RK4 on the grid.

    Returns (rho series, extinct flag, extinction time).  Extinction is
    declared when rho first drops below `floor`; a negative rho raises
    RuntimeError (the grid is too coarse for the decay rate).
    """
    if rho0 <= 0.0:
        raise DomainError("rho0 must be > 0")
    times = np.asarray(times, dtype=float)

    def rbar(t: float) -> float:
        return params.r_max + mbar_closed(params, traj, init, t, spec)

    rho = np.empty(times.size)
    rho[0] = rho0
    extinct = False
    t_extinct: float | None = None
    for i in range(times.size - 1):
        t, h = times[i], times[i + 1] - times[i]
        y = rho[i]
        r1 = rbar(t)
        rm = rbar(t + 0.5 * h)
        r2 = rbar(t + h)
        k1 = y * (r1 - y)
        y2_ = y + 0.5 * h * k1
        k2 = y2_ * (rm - y2_)
        y3 = y + 0.5 * h * k2
        k3 = y3 * (rm - y3)
        y4 = y + h * k3
        k4 = y4 * (r2 - y4)
        y_next = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if y_next < 0.0:
            raise RuntimeError(
                f"rho went negative at t={times[i + 1]}; refine the time grid"
            )
        rho[i + 1] = y_next
        if not extinct and y_next < floor:
            extinct = True
            t_extinct = float(times[i + 1])
    return rho, extinct, t_extinct
