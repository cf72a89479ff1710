"""Scenario definition and flat key=value config parsing.

Config files are INI-style text with dotted sections, one scenario per file:

    [params]
    n = 3
    lambda = 0.005
    U = 0.1125
    r_max = 0.0

    [trajectory]
    kind = linear          ; linear | power | sin | sinsq | linear_plus_sin
    c = 0.00632634         ;         | tabulated | ou

    [init]
    kind = clonal          ; clonal | dirac | gaussian

    [engines]
    analytic = true
    ibm = false
    ide = false

    [times]
    t_max = 1000
    points = 512

    [ibm]
    N = 10000
    replicates = 1000
    record_every = 10

    [ide]
    M1 = 512
    Mr = 256
    dt = 0.05

    [run]
    seed = 1234

Validation errors name the offending field (section.key).
"""
from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field

import numpy as np

from ..analytic import Clonal, DiracInit, InitialCondition, IsotropicGaussianInit
from ..environment import (
    EnvTrajectory,
    Linear,
    LinearPlusSin,
    ModelParams,
    Power,
    Sin,
    SinSq,
    Tabulated,
    realize_ou,
)
from ..numerics import RngStream


class ConfigError(ValueError):
    """A scenario config failed validation; the message names the field."""


@dataclass
class IbmSettings:
    N: int = 1000
    replicates: int = 100
    record_every: int = 10


@dataclass
class IdeSettings:
    M1: int = 512
    Mr: int = 256
    M: int = 4096  # 1-D grid size when n == 1
    dt: float = 0.05


@dataclass
class Scenario:
    """Fully resolved description of one run."""

    params: ModelParams
    trajectory: EnvTrajectory
    init: InitialCondition
    engines: tuple[str, ...]
    t_max: float
    points: int = 512
    ibm: IbmSettings = field(default_factory=IbmSettings)
    ide: IdeSettings = field(default_factory=IdeSettings)
    seed: int = 0
    name: str = "scenario"
    #: raw trajectory spec retained for reporting (e.g. the OU parameters)
    trajectory_spec: dict = field(default_factory=dict)
    init_spec: dict = field(default_factory=dict)

    def record_every(self) -> int:
        k = max(1, round(self.t_max / self.points))
        if self.ibm.record_every:
            k = self.ibm.record_every
        return int(k)

    def times(self) -> np.ndarray:
        k = self.record_every()
        return np.arange(0.0, self.t_max + 0.5 * k, k)

    def describe(self) -> dict:
        """Full resolved parameter set for report sidecars."""
        p = self.params
        return {
            "name": self.name,
            "params": {"n": p.n, "lambda": p.lam, "U": p.U, "r_max": p.r_max, "mu": p.mu},
            "trajectory": self.trajectory_spec or {"kind": type(self.trajectory).__name__},
            "init": self.init_spec or {"kind": type(self.init).__name__},
            "engines": list(self.engines),
            "t_max": self.t_max,
            "points": self.points,
            "record_every": self.record_every(),
            "ibm": vars(self.ibm).copy(),
            "ide": vars(self.ide).copy(),
            "seed": self.seed,
        }


def _get(cp: configparser.ConfigParser, section: str, key: str, conv, default=None):
    if not cp.has_option(section, key):
        if default is not None:
            return default
        raise ConfigError(f"missing required field {section}.{key}")
    raw = cp.get(section, key)
    try:
        return conv(raw)
    except ValueError as exc:
        raise ConfigError(f"invalid value for {section}.{key}: {raw!r}") from exc


def _get_bool(cp, section, key, default=False):
    if not cp.has_option(section, key):
        return default
    raw = cp.get(section, key).strip().lower()
    if raw in ("1", "true", "yes", "on"):
        return True
    if raw in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"invalid value for {section}.{key}: {raw!r} (expected boolean)")


def _build_trajectory(cp: configparser.ConfigParser, seed: int):
    kind = _get(cp, "trajectory", "kind", str).strip().lower()
    spec = {"kind": kind}
    if kind == "linear":
        c = _get(cp, "trajectory", "c", float)
        spec["c"] = c
        return Linear(c=c), spec
    if kind == "power":
        c = _get(cp, "trajectory", "c", float)
        alpha = _get(cp, "trajectory", "alpha", float)
        spec.update(c=c, alpha=alpha)
        try:
            return Power(c=c, alpha=alpha), spec
        except ValueError as exc:
            raise ConfigError(f"invalid trajectory.alpha: {exc}") from exc
    if kind == "sin":
        dm = _get(cp, "trajectory", "delta_max", float)
        om = _get(cp, "trajectory", "omega", float)
        spec.update(delta_max=dm, omega=om)
        return Sin(delta_max=dm, omega=om), spec
    if kind == "sinsq":
        dm = _get(cp, "trajectory", "delta_max", float)
        om = _get(cp, "trajectory", "omega", float)
        spec.update(delta_max=dm, omega=om)
        return SinSq(delta_max=dm, omega=om), spec
    if kind == "linear_plus_sin":
        c = _get(cp, "trajectory", "c", float)
        dm = _get(cp, "trajectory", "delta_max", float)
        om = _get(cp, "trajectory", "omega", float)
        spec.update(c=c, delta_max=dm, omega=om)
        return LinearPlusSin(c=c, delta_max=dm, omega=om), spec
    if kind == "tabulated":
        path = _get(cp, "trajectory", "path", str)
        spec["path"] = path
        try:
            return Tabulated.from_csv(path), spec
        except (OSError, ValueError) as exc:
            raise ConfigError(f"trajectory.path: {exc}") from exc
    if kind == "ou":
        nu = _get(cp, "trajectory", "nu", float)
        beta = _get(cp, "trajectory", "beta", float)
        dt = _get(cp, "trajectory", "dt", float, default=0.1)
        horizon = _get(cp, "trajectory", "horizon", float)
        stream_id = _get(cp, "trajectory", "stream_id", int, default=10_000)
        spec.update(nu=nu, beta=beta, dt=dt, horizon=horizon, stream_id=stream_id, seed=seed)
        try:
            path = realize_ou(nu, beta, dt, horizon, RngStream(seed, stream_id))
        except ValueError as exc:
            raise ConfigError(f"trajectory: {exc}") from exc
        return path, spec
    raise ConfigError(f"unknown trajectory.kind: {kind!r}")


def _build_init(cp: configparser.ConfigParser):
    if not cp.has_section("init"):
        return Clonal(), {"kind": "clonal"}
    kind = _get(cp, "init", "kind", str, default="clonal").strip().lower()
    spec = {"kind": kind}
    if kind == "clonal":
        return Clonal(), spec
    if kind == "dirac":
        x1 = _get(cp, "init", "x1_star", float)
        n2 = _get(cp, "init", "norm2_star", float, default=x1 * x1)
        spec.update(x1_star=x1, norm2_star=n2)
        try:
            return DiracInit(x1_star=x1, norm2_star=n2), spec
        except ValueError as exc:
            raise ConfigError(f"init: {exc}") from exc
    if kind == "gaussian":
        a = _get(cp, "init", "a", float, default=0.0)
        s2 = _get(cp, "init", "sigma2", float)
        spec.update(a=a, sigma2=s2)
        return IsotropicGaussianInit(a=a, sigma2=s2), spec
    raise ConfigError(f"unknown init.kind: {kind!r}")


def parse_config(path) -> Scenario:
    """Parse and validate a scenario file; raises ConfigError on any defect."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")

    for section in ("params", "trajectory", "times"):
        if not cp.has_section(section):
            raise ConfigError(f"missing required section [{section}]")

    n = _get(cp, "params", "n", int)
    lam = _get(cp, "params", "lambda", float)
    U = _get(cp, "params", "U", float)
    r_max = _get(cp, "params", "r_max", float, default=0.0)
    try:
        params = ModelParams(n=n, lam=lam, U=U, r_max=r_max)
    except ValueError as exc:
        raise ConfigError(f"params: {exc}") from exc

    seed = _get(cp, "run", "seed", int, default=0) if cp.has_section("run") else 0
    traj, traj_spec = _build_trajectory(cp, seed)
    init, init_spec = _build_init(cp)

    engines = []
    if cp.has_section("engines"):
        for eng in ("analytic", "ibm", "ide"):
            if _get_bool(cp, "engines", eng, default=False):
                engines.append(eng)
    else:
        engines = ["analytic"]
    if not engines:
        raise ConfigError("engines: at least one engine must be selected")

    t_max = _get(cp, "times", "t_max", float)
    if t_max <= 0:
        raise ConfigError("times.t_max must be > 0")
    points = _get(cp, "times", "points", int, default=512)
    if t_max > traj.horizon:
        raise ConfigError(
            f"times.t_max = {t_max} exceeds the trajectory horizon {traj.horizon}"
        )

    ibm = IbmSettings()
    if cp.has_section("ibm"):
        ibm.N = _get(cp, "ibm", "N", int, default=ibm.N)
        ibm.replicates = _get(cp, "ibm", "replicates", int, default=ibm.replicates)
        ibm.record_every = _get(cp, "ibm", "record_every", int, default=ibm.record_every)
        if ibm.N < 1:
            raise ConfigError("ibm.N must be >= 1")
        if ibm.replicates < 1:
            raise ConfigError("ibm.replicates must be >= 1")

    ide = IdeSettings()
    if cp.has_section("ide"):
        ide.M1 = _get(cp, "ide", "M1", int, default=ide.M1)
        ide.Mr = _get(cp, "ide", "Mr", int, default=ide.Mr)
        ide.M = _get(cp, "ide", "M", int, default=ide.M)
        ide.dt = _get(cp, "ide", "dt", float, default=ide.dt)
        if ide.dt <= 0:
            raise ConfigError("ide.dt must be > 0")

    import os

    name = os.path.splitext(os.path.basename(str(path)))[0]
    scenario = Scenario(
        params=params,
        trajectory=traj,
        init=init,
        engines=tuple(engines),
        t_max=t_max,
        points=points,
        ibm=ibm,
        ide=ide,
        seed=seed,
        name=name,
        trajectory_spec=traj_spec,
        init_spec=init_spec,
    )
    validate_scenario(scenario)
    return scenario


def validate_scenario(s: Scenario) -> None:
    """Cross-field checks shared by file parsing and programmatic construction."""
    if not s.engines:
        raise ConfigError("engines: at least one engine must be selected")
    for eng in s.engines:
        if eng not in ("analytic", "ibm", "ide"):
            raise ConfigError(f"engines: unknown engine {eng!r}")
    if s.t_max > s.trajectory.horizon:
        raise ConfigError("times.t_max exceeds the trajectory horizon")
    if "ide" in s.engines and s.params.n >= 2 and not isinstance(s.init, (Clonal,)):
        if not isinstance(s.init, IsotropicGaussianInit) or s.init.a != 0.0:
            # the reduced grid needs isotropy about a point on the shift axis
            if not isinstance(s.init, IsotropicGaussianInit):
                raise ConfigError("ide: init must be clonal or isotropic gaussian")
