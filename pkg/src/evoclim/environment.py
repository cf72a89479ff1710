"""Catalogue of optimum trajectories delta(t) and the model parameter block.

The optimum moves along a fixed unit direction; its scalar displacement
delta(t) is one of several closed-form families, a user-tabulated path, or a
realized Ornstein-Uhlenbeck sample path (which is materialized into a
tabulated path on construction).  delta(0) = 0 is enforced for every variant.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .numerics import RngStream


class HorizonError(ValueError):
    """Evaluation time lies outside a tabulated trajectory's domain."""


def _scalar_ok(out):
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ModelParams:
    """Mutation/selection parameters of the isotropic model.

    n: trait-space dimension; lam: mutational variance per trait; U: mutation
    rate per capita per generation; r_max: growth rate of the optimal
    phenotype.  The mutation parameter mu = sqrt(U * lam) is derived.
    """

    n: int
    lam: float
    U: float
    r_max: float = 0.0

    def __post_init__(self) -> None:
        if self.n < 1 or int(self.n) != self.n:
            raise ValueError("n must be a positive integer")
        if not self.lam > 0.0:
            raise ValueError("lam must be > 0")
        if not self.U > 0.0:
            raise ValueError("U must be > 0")
        if self.r_max < 0.0:
            raise ValueError("r_max must be >= 0")

    @property
    def mu(self) -> float:
        return math.sqrt(self.U * self.lam)

    def u_c(self) -> float:
        """Mutation-rate threshold n^2*lam/4 above which the diffusion regime applies."""
        return self.n * self.n * self.lam / 4.0


class EnvTrajectory:
    """Base class for optimum displacement paths delta(t).

    delta/delta_prime/delta_second accept scalars or arrays and are
    vectorized; horizon is +inf for closed forms and the last node time for
    tabulated paths.
    """

    horizon: float = math.inf
    #: smallest length scale on which delta oscillates (np.inf when aperiodic)
    singular_at_zero: bool = False

    def delta(self, t):
        raise NotImplementedError

    def delta_prime(self, t):
        raise NotImplementedError

    def delta_second(self, t):
        raise NotImplementedError

    def period_hint(self) -> float:
        """Oscillation period of delta, or inf for aperiodic variants."""
        return math.inf

    def kink_spacing(self) -> float:
        """Spacing of slope discontinuities (inf for smooth variants)."""
        return math.inf

    def _check_domain(self, t) -> None:
        t = np.asarray(t)
        if np.any(t < 0.0):
            raise HorizonError("trajectory evaluated at t < 0")
        if np.any(t > self.horizon):
            raise HorizonError(
                f"trajectory evaluated beyond its horizon ({self.horizon})"
            )


@dataclass(frozen=True)
class Linear(EnvTrajectory):
    """delta(t) = c*t."""

    c: float

    def delta(self, t):
        self._check_domain(t)
        return _scalar_ok(self.c * np.asarray(t, dtype=float))

    def delta_prime(self, t):
        self._check_domain(t)
        return _scalar_ok(np.full_like(np.asarray(t, dtype=float), self.c))

    def delta_second(self, t):
        self._check_domain(t)
        return _scalar_ok(np.zeros_like(np.asarray(t, dtype=float)))


@dataclass(frozen=True)
class Power(EnvTrajectory):
    """delta(t) = c*t^alpha with alpha > 0, alpha != 1 (use Linear for alpha=1)."""

    c: float
    alpha: float

    def __post_init__(self) -> None:
        if not self.alpha > 0.0:
            raise ValueError("alpha must be > 0")
        if self.alpha == 1.0:
            raise ValueError("alpha = 1 must be expressed as Linear")
        object.__setattr__(self, "singular_at_zero", self.alpha != int(self.alpha))

    def delta(self, t):
        self._check_domain(t)
        return _scalar_ok(self.c * np.asarray(t, dtype=float) ** self.alpha)

    def delta_prime(self, t):
        self._check_domain(t)
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore"):
            return _scalar_ok(self.c * self.alpha * t ** (self.alpha - 1.0))

    def delta_second(self, t):
        self._check_domain(t)
        t = np.asarray(t, dtype=float)
        a = self.alpha
        with np.errstate(divide="ignore"):
            return _scalar_ok(self.c * a * (a - 1.0) * t ** (a - 2.0))


@dataclass(frozen=True)
class Sin(EnvTrajectory):
    """delta(t) = delta_max * sin(omega*t)."""

    delta_max: float
    omega: float

    def delta(self, t):
        self._check_domain(t)
        return _scalar_ok(self.delta_max * np.sin(self.omega * np.asarray(t, dtype=float)))

    def delta_prime(self, t):
        self._check_domain(t)
        w = self.omega
        return _scalar_ok(self.delta_max * w * np.cos(w * np.asarray(t, dtype=float)))

    def delta_second(self, t):
        self._check_domain(t)
        w = self.omega
        return _scalar_ok(-self.delta_max * w * w * np.sin(w * np.asarray(t, dtype=float)))
    def period_hint(self) -> float:
        return 2.0 * math.pi / self.omega



@dataclass(frozen=True)
class SinSq(EnvTrajectory):
    """delta(t) = delta_max * sin(omega*t)^2."""

    delta_max: float
    omega: float

    def delta(self, t):
        self._check_domain(t)
        return _scalar_ok(
            self.delta_max * np.sin(self.omega * np.asarray(t, dtype=float)) ** 2
        )

    def delta_prime(self, t):
        self._check_domain(t)
        w = self.omega
        return _scalar_ok(self.delta_max * w * np.sin(2.0 * w * np.asarray(t, dtype=float)))

    def delta_second(self, t):
        self._check_domain(t)
        w = self.omega
        return _scalar_ok(
            2.0 * self.delta_max * w * w * np.cos(2.0 * w * np.asarray(t, dtype=float))
        )
    def period_hint(self) -> float:
        return math.pi / self.omega



@dataclass(frozen=True)
class LinearPlusSin(EnvTrajectory):
    """delta(t) = c*t + delta_max * sin(omega*t)."""

    c: float
    delta_max: float
    omega: float

    def delta(self, t):
        self._check_domain(t)
        t = np.asarray(t, dtype=float)
        return _scalar_ok(self.c * t + self.delta_max * np.sin(self.omega * t))

    def delta_prime(self, t):
        self._check_domain(t)
        t = np.asarray(t, dtype=float)
        return _scalar_ok(self.c + self.delta_max * self.omega * np.cos(self.omega * t))

    def delta_second(self, t):
        self._check_domain(t)
        t = np.asarray(t, dtype=float)
        return _scalar_ok(-self.delta_max * self.omega**2 * np.sin(self.omega * t))
    def period_hint(self) -> float:
        return 2.0 * math.pi / self.omega



@dataclass(frozen=True, eq=False)
class Tabulated(EnvTrajectory):
    """Piecewise-linear path through (times, values) nodes, times[0] = 0, values[0] = 0.

    Evaluation between nodes is linear interpolation; beyond the last node it
    is an error.  The derivative is the secant slope of the containing
    segment and the second derivative is 0 between nodes.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if times.ndim != 1 or times.shape != values.shape or times.size < 2:
            raise ValueError("times and values must be equal-length 1-D arrays (>= 2 nodes)")
        if np.any(np.diff(times) <= 0.0):
            raise ValueError("times must be strictly increasing")
        if times[0] != 0.0:
            raise ValueError("tabulated paths must start at t = 0")
        if values[0] != 0.0:
            raise ValueError("tabulated paths must satisfy delta(0) = 0")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_slopes", np.diff(values) / np.diff(times))

    @property
    def horizon(self) -> float:  # type: ignore[override]
        return float(self.times[-1])

    def delta(self, t):
        self._check_domain(t)
        return _scalar_ok(np.interp(np.asarray(t, dtype=float), self.times, self.values))

    def _segment(self, t):
        idx = np.searchsorted(self.times, np.asarray(t, dtype=float), side="right") - 1
        return np.clip(idx, 0, self.times.size - 2)

    def delta_prime(self, t):
        self._check_domain(t)
        return _scalar_ok(self._slopes[self._segment(t)])

    def delta_second(self, t):
        self._check_domain(t)
        return _scalar_ok(np.zeros_like(np.asarray(t, dtype=float)))

    def to_csv(self, path) -> None:
        """Write the path as two-column CSV with a `t,delta` header."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "delta"])
            for t, v in zip(self.times, self.values):
                w.writerow([repr(float(t)), repr(float(v))])

    @classmethod
    def from_csv(cls, path) -> "Tabulated":
        """Read a path written by to_csv; the `t,delta` header is required."""
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or [c.strip() for c in rows[0]] != ["t", "delta"]:
            raise ValueError(f"{path}: expected header 't,delta'")
        data = np.array([[float(r[0]), float(r[1])] for r in rows[1:]])
        return cls(times=data[:, 0], values=data[:, 1])
    def kink_spacing(self) -> float:
        return float(np.min(np.diff(self.times)))



def realize_ou(
    nu: float,
    beta_noise: float,
    dt: float,
    horizon: float,
    stream: RngStream,
) -> Tabulated:
    """Euler-Maruyama realization of d(delta) = -nu*delta*dt + beta*dW.

    Returns the path as a Tabulated trajectory on nodes k*dt up to horizon,
    with delta(0) = 0.  Deterministic for a fixed stream.
    """
    if nu < 0.0 or beta_noise < 0.0:
        raise ValueError("nu and beta_noise must be >= 0")
    if not 0.0 < dt <= horizon:
        raise ValueError("need 0 < dt <= horizon")
    n_steps = int(math.floor(horizon / dt + 1e-12))
    times = dt * np.arange(n_steps + 1)
    xi = stream.generator().standard_normal(n_steps)
    # delta_{k+1} = (1 - nu*dt) * delta_k + beta*sqrt(dt)*xi_k, delta_0 = 0:
    # a first-order recurrence, evaluated by a C-speed linear filter.
    drive = beta_noise * math.sqrt(dt) * xi
    values = np.empty(n_steps + 1)
    values[0] = 0.0
    values[1:] = lfilter([1.0], [1.0, -(1.0 - nu * dt)], drive)
    return Tabulated(times=times, values=values)
