"""Figure presets: fully populated scenarios for the reference experiments.

All presets share n = 3, lambda = 0.005 and an initially clonal population at
the optimum.  U = 10*U_c (U_c = n^2 lambda / 4) except fig3a, which runs at
U = U_c.  Panel-specific choices:

    fig2a  linear shift, c = sqrt(n mu^3) (lag load = mutation load), N = 1e4
    fig2b  sin,  delta_max = sqrt(31 lambda), omega = mu*pi, N = 1e3
    fig2c  sin^2, delta_max = 10 sqrt(lambda), omega = mu*pi, N = 1e3
    fig2d  linear + sin with the fig2a/fig2b values, N = 1e3
    fig3a  Ornstein-Uhlenbeck optimum, nu = 0.01, beta = 0.1, U = U_c
    fig3b  same path parameters at U = 10*U_c

The OU presets realize one path from the scenario seed (Euler-Maruyama,
dt = 0.1, a documented choice) and feed the identical tabulated path to both
the analytic engine and the IBM.  Grid and timestep choices for the ide
engine are this package's own (the experiments they reproduce do not pin
them); the cross-engine comparison budget absorbs scheme differences.
"""
from __future__ import annotations

import math

from ..analytic import Clonal
from ..environment import Linear, LinearPlusSin, ModelParams, Sin, SinSq, realize_ou
from ..numerics import RngStream
from .config import ConfigError, IbmSettings, IdeSettings, Scenario

_N_TRAITS = 3
_LAMBDA = 0.005
_U_C = _N_TRAITS**2 * _LAMBDA / 4.0

#: stream id reserved for realizing preset OU paths
_OU_STREAM = 10_000

PRESET_NAMES = ("fig2a", "fig2b", "fig2c", "fig2d", "fig3a", "fig3b")


def preset(name: str, seed: int = 20200527) -> Scenario:
    """Return the fully populated scenario for a named reference figure."""
    if name not in PRESET_NAMES:
        raise ConfigError(f"unknown preset {name!r}; expected one of {PRESET_NAMES}")

    U = _U_C if name == "fig3a" else 10.0 * _U_C
    params = ModelParams(n=_N_TRAITS, lam=_LAMBDA, U=U)
    mu = params.mu
    c = math.sqrt(_N_TRAITS * mu**3)
    delta_max_sin = math.sqrt(31.0 * _LAMBDA)
    omega = mu * math.pi

    if name == "fig2a":
        traj = Linear(c=c)
        spec = {"kind": "linear", "c": c}
        ibm = IbmSettings(N=10_000, replicates=1000, record_every=10)
        t_max = 1000.0
    elif name == "fig2b":
        traj = Sin(delta_max=delta_max_sin, omega=omega)
        spec = {"kind": "sin", "delta_max": delta_max_sin, "omega": omega}
        ibm = IbmSettings(N=1000, replicates=1000, record_every=10)
        t_max = 1000.0
    elif name == "fig2c":
        dm = 10.0 * math.sqrt(_LAMBDA)
        traj = SinSq(delta_max=dm, omega=omega)
        spec = {"kind": "sinsq", "delta_max": dm, "omega": omega}
        ibm = IbmSettings(N=1000, replicates=1000, record_every=10)
        t_max = 1000.0
    elif name == "fig2d":
        traj = LinearPlusSin(c=c, delta_max=delta_max_sin, omega=omega)
        spec = {
            "kind": "linear_plus_sin",
            "c": c,
            "delta_max": delta_max_sin,
            "omega": omega,
        }
        ibm = IbmSettings(N=1000, replicates=1000, record_every=10)
        t_max = 1000.0
    else:  # fig3a, fig3b
        t_max = 1000.0
        nu, beta, dt = 0.01, 0.1, 0.1
        traj = realize_ou(nu, beta, dt, t_max, RngStream(seed, _OU_STREAM))
        spec = {
            "kind": "ou",
            "nu": nu,
            "beta": beta,
            "dt": dt,
            "horizon": t_max,
            "seed": seed,
            "stream_id": _OU_STREAM,
        }
        ibm = IbmSettings(N=1000, replicates=1000, record_every=10)

    engines = ("analytic", "ibm") if name.startswith("fig3") else ("analytic", "ibm", "ide")
    return Scenario(
        params=params,
        trajectory=traj,
        init=Clonal(),
        engines=engines,
        t_max=t_max,
        points=512,
        ibm=ibm,
        ide=IdeSettings(M1=512, Mr=256, dt=0.05),
        seed=seed,
        name=name,
        trajectory_spec=spec,
        init_spec={"kind": "clonal"},
    )
