"""Shared numerical kernels.

Overflow-safe hyperbolic ratios, adaptive Simpson quadrature, central
finite-difference stencils, and the seeded random-stream descriptor used by
every stochastic component.  Everything here is a pure function of its
inputs and safe for concurrent use.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

_LN2 = math.log(2.0)
_MASK64 = (1 << 64) - 1


class DomainError(ValueError):
    """An argument lies outside the regime an operation is defined for."""


class NonConvergenceError(RuntimeError):
    """Adaptive quadrature exhausted its subdivision budget."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and budget for adaptive quadrature."""

    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_subdivisions: int = 2**15

    def __post_init__(self) -> None:
        if not self.rel_tol > 0.0:
            raise ValueError("rel_tol must be > 0")
        if not self.abs_tol > 0.0:
            raise ValueError("abs_tol must be > 0")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


@dataclass(frozen=True)
class RngStream:
    """Immutable descriptor of a reproducible random stream.

    Identical (seed, stream_id) pairs reproduce identical draw sequences;
    distinct stream_id values give statistically independent streams.  The
    backing generator is counter-based (Philox4x64), so streams are cheap to
    split and safe to consume in parallel.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        """Materialize a fresh generator positioned at the stream start."""
        key = (self.seed & _MASK64) | ((self.stream_id & _MASK64) << 64)
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, offset: int) -> "RngStream":
        """Derived stream with stream_id shifted by ``offset``."""
        return RngStream(self.seed, (self.stream_id + offset) & _MASK64)


def log_cosh(x):
    """ln(cosh(x)), overflow-safe for any magnitude of x."""
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax)) - _LN2


def hyp_ratio_sinh_cosh(a, b):
    """sinh(a)/cosh(b) in exponentially scaled form, valid for a <= b.

    Computed as e^(a-b) * (1 - e^(-2a)) / (1 + e^(-2b)); never overflows for
    arguments up to 1e6 because a - b <= 0.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a > b):
        raise DomainError("hyp_ratio_sinh_cosh requires a <= b")
    out = np.exp(a - b) * (-np.expm1(-2.0 * a)) / (1.0 + np.exp(-2.0 * b))
    return float(out) if out.ndim == 0 else out


def hyp_ratio_cosh_cosh(a, b):
    """cosh(a)/cosh(b) in exponentially scaled form, valid for a <= b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a > b):
        raise DomainError("hyp_ratio_cosh_cosh requires a <= b")
    out = np.exp(a - b) * (1.0 + np.exp(-2.0 * a)) / (1.0 + np.exp(-2.0 * b))
    return float(out) if out.ndim == 0 else out


_INIT_PANELS = 8


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    lo: float,
    hi: float,
    spec: QuadratureSpec | None = None,
) -> float:
    """Adaptive composite Simpson quadrature of a vectorized integrand.

    ``f`` must map an ndarray of abscissae to an ndarray of values.  The
    interval is bisected recursively until the Richardson error estimate of
    every panel fits within its width-proportional share of
    max(abs_tol, rel_tol * |integral|).  Deterministic for fixed inputs.

    Raises NonConvergenceError if max_subdivisions panels are exhausted.
    """
    if spec is None:
        spec = QuadratureSpec()
    if lo > hi:
        raise DomainError("integrate requires lo <= hi")
    if lo == hi:
        return 0.0

    span = hi - lo
    # Start from several uniform panels so that periodic integrands cannot
    # fool the first error estimate by symmetry.
    edges = np.linspace(lo, hi, _INIT_PANELS + 1)
    a = edges[:-1].copy()
    h = np.diff(edges)
    fa = np.asarray(f(a), dtype=float)
    fm = np.asarray(f(a + 0.5 * h), dtype=float)
    fb = np.asarray(f(a + h), dtype=float)

    done_sum = 0.0
    n_panels = _INIT_PANELS
    for _ in range(64):
        # Simpson on each panel and on its two halves.
        fl = np.asarray(f(a + 0.25 * h), dtype=float)
        fr = np.asarray(f(a + 0.75 * h), dtype=float)
        s1 = (h / 6.0) * (fa + 4.0 * fm + fb)
        s2 = (h / 12.0) * (fa + 4.0 * fl + 2.0 * fm + 4.0 * fr + fb)
        err = (s2 - s1) / 15.0
        est_total = done_sum + float(np.sum(s2))
        tol = max(spec.abs_tol, spec.rel_tol * abs(est_total))
        ok = np.abs(err) <= tol * (h / span)

        done_sum += float(np.sum(s2[ok] + err[ok]))
        if bool(np.all(ok)):
            return done_sum

        keep = ~ok
        n_panels += int(np.count_nonzero(keep))
        if n_panels > spec.max_subdivisions:
            raise NonConvergenceError(
                f"quadrature did not converge within {spec.max_subdivisions} panels"
            )
        # split the rejected panels in two
        a_bad, h_bad = a[keep], 0.5 * h[keep]
        a = np.concatenate([a_bad, a_bad + h_bad])
        h = np.concatenate([h_bad, h_bad])
        fa = np.concatenate([fa[keep], fm[keep]])
        fb = np.concatenate([fm[keep], fb[keep]])
        fm = np.concatenate([fl[keep], fr[keep]])
    raise NonConvergenceError("quadrature refinement loop exceeded depth 64")


def stencil_derivative(
    g: Callable[[float], float],
    x: float,
    order: int,
    h: float | None = None,
) -> float:
    """Central finite difference of order 1, 2 or 3 at x.

    Order 1 applies one Richardson extrapolation step (h, h/2); order 2 and 3
    are the plain central stencils.  Step defaults follow the usual
    truncation/rounding balance: 1e-4*max(1,|x|) for orders 1-2 and
    1e-2*max(1,|x|) for order 3.
    """
    if h is None:
        h = (1e-4 if order <= 2 else 1e-2) * max(1.0, abs(x))
    if h <= 0.0:
        raise DomainError("stencil step h must be > 0")
    if order == 1:
        d1 = (g(x + h) - g(x - h)) / (2.0 * h)
        h2 = 0.5 * h
        d2 = (g(x + h2) - g(x - h2)) / (2.0 * h2)
        return (4.0 * d2 - d1) / 3.0
    if order == 2:
        return (g(x + h) - 2.0 * g(x) + g(x - h)) / (h * h)
    if order == 3:
        return (g(x + 2 * h) - 2.0 * g(x + h) + 2.0 * g(x - h) - g(x - 2 * h)) / (
            2.0 * h**3
        )
    raise DomainError(f"unsupported derivative order {order}")
