"""Parameter sweeps over the analytic asymptotics, with extremum refinement."""
from __future__ import annotations

import csv
import math
from dataclasses import replace

import numpy as np

from ..analytic import asymptotic_summary
from ..environment import ModelParams
from .config import ConfigError, Scenario


def _set_axis(scenario: Scenario, axis: str, value: float) -> Scenario:
    """Return a copy of the scenario with the dotted parameter set to value."""
    if axis in ("params.mu", "mu"):
        # mu = sqrt(U*lam) is derived; sweep it by rescaling U at fixed lam
        p = scenario.params
        U = value * value / p.lam
        return replace(scenario, params=ModelParams(n=p.n, lam=p.lam, U=U, r_max=p.r_max))
    if axis.startswith("params."):
        p = scenario.params
        fieldname = axis.split(".", 1)[1]
        if fieldname not in ("lam", "U", "r_max"):
            raise ConfigError(f"sweep axis {axis!r} is not a scalar model field")
        kwargs = {"n": p.n, "lam": p.lam, "U": p.U, "r_max": p.r_max}
        kwargs[fieldname] = value
        return replace(scenario, params=ModelParams(**kwargs))
    if axis.startswith("trajectory."):
        fieldname = axis.split(".", 1)[1]
        if not hasattr(scenario.trajectory, fieldname):
            raise ConfigError(f"trajectory has no field {fieldname!r}")
        return replace(scenario, trajectory=replace(scenario.trajectory, **{fieldname: value}))
    raise ConfigError(f"unknown sweep axis {axis!r}")


def parabolic_refine(xs: np.ndarray, ys: np.ndarray, idx: int) -> float:
    """Vertex of the parabola through the three points around xs[idx]."""
    if idx == 0 or idx == len(xs) - 1:
        return float(xs[idx])
    x0, x1, x2 = xs[idx - 1], xs[idx], xs[idx + 1]
    y0, y1, y2 = ys[idx - 1], ys[idx], ys[idx + 1]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom
    if a == 0.0:
        return float(x1)
    return float(-b / (2.0 * a))


def sweep(base: Scenario, axis: str, values) -> dict:
    """Evaluate the analytic asymptotics along one parameter axis.

    Returns rows of (value, mbar_inf or mean_over_period, vm_inf) plus the
    parabola-refined locations of the interior extrema of each column.
    """
    values = np.asarray(list(values), dtype=float)
    if values.size < 3:
        raise ConfigError("sweep needs at least 3 values")
    rows = []
    for v in values:
        s = _set_axis(base, axis, float(v))
        summ = asymptotic_summary(s.params, s.trajectory)
        mbar = summ.mbar_inf if summ.mbar_inf is not None else summ.mean_over_period
        if summ.mbar_diverges:
            mbar = -math.inf
        vm = summ.vm_inf
        if summ.vm_diverges:
            vm = math.inf
        rows.append((float(v), mbar, vm))

    arr = np.array([[r[0], r[1] if r[1] is not None else np.nan,
                     r[2] if r[2] is not None else np.nan] for r in rows])
    out = {"axis": axis, "rows": rows}
    mb = arr[:, 1]
    if np.all(np.isfinite(mb)):
        i = int(np.argmax(mb))
        out["argmax_mbar"] = parabolic_refine(arr[:, 0], mb, i)
        out["argmax_mbar_grid"] = float(arr[i, 0])
        out["grid_step"] = float(np.max(np.diff(arr[:, 0])))
    vm = arr[:, 2]
    if np.all(np.isfinite(vm)):
        i = int(np.argmin(vm))
        out["argmin_vm"] = parabolic_refine(arr[:, 0], vm, i)
        out["argmin_vm_grid"] = float(arr[i, 0])
    return out


def write_sweep_csv(result: dict, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["value", "mbar_limit", "vm_limit"])
        for v, mb, vm in result["rows"]:
            w.writerow([repr(v), "" if mb is None else repr(mb), "" if vm is None else repr(vm)])
