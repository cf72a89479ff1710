"""Run a scenario across its engines, compare, and export results.

Outputs per run directory: analytic.csv / ibm.csv / ide.csv (per selected
engine), combined.csv, report.json and figure.svg.  Re-running a scenario
with the same seed produces byte-identical CSVs; the combined CSV's per-
engine columns equal the standalone exports exactly.
"""
from __future__ import annotations

import csv
import json
import math
import os
import time
from dataclasses import dataclass

import numpy as np

from ..analytic import (
    Clonal,
    IsotropicGaussianInit,
    MomentTrajectory,
    asymptotic_summary,
    mean_fitness_trajectory,
)
from ..environment import Tabulated
from ..ibm import ReplicateStats, run_replicates
from ..ide import DensityInit, default_grid_1d, default_grid_reduced, solve_ide_1d, solve_pde_reduced
from ..numerics import RngStream
from .config import Scenario
from .svg import SvgFigure


class EngineError(RuntimeError):
    """An engine failed; the message carries the engine name."""


@dataclass
class ComparisonReport:
    """Per-engine trajectories plus cross-engine deviation metrics."""

    scenario: dict
    analytic: MomentTrajectory | None = None
    ibm: ReplicateStats | None = None
    ide: MomentTrajectory | None = None
    deviations: dict | None = None
    coverage: float | None = None
    runtimes: dict | None = None

    def summary(self) -> dict:
        out = {
            "scenario": self.scenario,
            "deviations": self.deviations or {},
            "coverage": self.coverage,
            "runtimes": self.runtimes or {},
        }
        return out


def _sup_and_mean_dev(a: np.ndarray, b: np.ndarray) -> dict:
    d = np.abs(np.asarray(a) - np.asarray(b))
    return {"sup": float(np.max(d)), "mean": float(np.mean(d))}


def coverage_fraction(curve: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> float:
    """Fraction of grid times where the curve lies inside [lo, hi]."""
    curve = np.asarray(curve)
    inside = (curve >= np.asarray(lo)) & (curve <= np.asarray(hi))
    return float(np.mean(inside))


def _run_analytic(scenario: Scenario, times: np.ndarray) -> MomentTrajectory:
    return mean_fitness_trajectory(
        scenario.params, scenario.trajectory, scenario.init, times
    )


def _run_ibm(scenario: Scenario, times: np.ndarray) -> ReplicateStats:
    at = None
    init = scenario.init
    if not isinstance(init, Clonal):
        from ..analytic import DiracInit

        if isinstance(init, DiracInit):
            vec = np.zeros(scenario.params.n)
            vec[0] = init.x1_star
            extra = init.norm2_star - init.x1_star**2
            if extra > 1e-12:
                if scenario.params.n < 2:
                    raise EngineError("ibm: dirac init with norm2 > x1^2 needs n >= 2")
                vec[1] = math.sqrt(extra)
            at = vec
        else:
            raise EngineError("ibm: only clonal or dirac initial conditions are supported")
    return run_replicates(
        scenario.params,
        scenario.trajectory,
        N=scenario.ibm.N,
        T=int(scenario.t_max),
        replicates=scenario.ibm.replicates,
        base_stream=RngStream(scenario.seed, 0),
        record_every=scenario.record_every(),
        at=at,
    )


def _run_ide(scenario: Scenario, times: np.ndarray) -> MomentTrajectory:
    params, traj = scenario.params, scenario.trajectory
    q0 = DensityInit("near_dirac")
    init = scenario.init
    if isinstance(init, IsotropicGaussianInit):
        q0 = DensityInit("gaussian", mean=init.a, var=init.sigma2)
    if params.n == 1:
        grid = default_grid_1d(params, traj, scenario.t_max, M=scenario.ide.M)
        return solve_ide_1d(
            params, traj, q0, scenario.t_max, grid=grid, dt=scenario.ide.dt,
            record_every=float(scenario.record_every()),
        )
    grid = default_grid_reduced(
        params, traj, scenario.t_max, M1=scenario.ide.M1, Mr=scenario.ide.Mr
    )
    return solve_pde_reduced(
        params, traj, q0, scenario.t_max, grid=grid, dt=scenario.ide.dt,
        record_every=float(scenario.record_every()),
    )


def run_scenario(scenario: Scenario, outdir=None) -> ComparisonReport:
    """Run the selected engines, build the comparison report, write artifacts."""
    times = scenario.times()
    report = ComparisonReport(scenario=scenario.describe())
    runtimes: dict[str, float] = {}

    for engine in scenario.engines:
        t0 = time.perf_counter()
        try:
            if engine == "analytic":
                report.analytic = _run_analytic(scenario, times)
            elif engine == "ibm":
                report.ibm = _run_ibm(scenario, times)
            elif engine == "ide":
                report.ide = _run_ide(scenario, times)
        except EngineError:
            raise
        except Exception as exc:
            raise EngineError(f"{engine}: {exc}") from exc
        runtimes[engine] = time.perf_counter() - t0
    report.runtimes = runtimes

    deviations = {}
    if report.analytic is not None and report.ibm is not None:
        deviations["analytic_vs_ibm"] = _sup_and_mean_dev(
            report.analytic.mbar, report.ibm.mean_mbar
        )
        report.coverage = coverage_fraction(
            report.analytic.mbar, report.ibm.q025, report.ibm.q975
        )
    if report.analytic is not None and report.ide is not None:
        deviations["analytic_vs_ide"] = _sup_and_mean_dev(
            report.analytic.mbar, report.ide.mbar
        )
    if report.ibm is not None and report.ide is not None:
        deviations["ibm_vs_ide"] = _sup_and_mean_dev(
            report.ibm.mean_mbar, report.ide.mbar
        )
    report.deviations = deviations

    if outdir is not None:
        write_artifacts(scenario, report, outdir)
    return report


def write_artifacts(scenario: Scenario, report: ComparisonReport, outdir) -> None:
    os.makedirs(outdir, exist_ok=True)
    meta = scenario.describe()

    if report.analytic is not None:
        path = os.path.join(outdir, "analytic.csv")
        report.analytic.to_csv(path)
        with open(os.path.join(outdir, "analytic.meta.json"), "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
    if report.ibm is not None:
        report.ibm.to_csv(os.path.join(outdir, "ibm.csv"))
        report.ibm.write_meta(os.path.join(outdir, "ibm.meta.json"), extra=meta)
    if report.ide is not None:
        report.ide.to_csv(os.path.join(outdir, "ide.csv"))
        with open(os.path.join(outdir, "ide.meta.json"), "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)

    _write_combined(report, os.path.join(outdir, "combined.csv"))

    with open(os.path.join(outdir, "report.json"), "w") as fh:
        json.dump(report.summary(), fh, indent=2, sort_keys=True)

    _write_figure(scenario, report, os.path.join(outdir, "figure.svg"))


def _write_combined(report: ComparisonReport, path) -> None:
    cols: list[tuple[str, np.ndarray]] = []
    times = None
    if report.analytic is not None:
        times = report.analytic.times
        cols.append(("analytic_mbar", report.analytic.mbar))
    if report.ibm is not None:
        times = report.ibm.times if times is None else times
        cols.append(("ibm_mean_mbar", report.ibm.mean_mbar))
        cols.append(("ibm_q025", report.ibm.q025))
        cols.append(("ibm_q975", report.ibm.q975))
    if report.ide is not None:
        times = report.ide.times if times is None else times
        cols.append(("ide_mbar", report.ide.mbar))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [c[0] for c in cols])
        for i, t in enumerate(times):
            row = [repr(float(t))]
            for _, arr in cols:
                row.append(repr(float(arr[i])) if i < len(arr) else "")
            w.writerow(row)


def _write_figure(scenario: Scenario, report: ComparisonReport, path) -> None:
    fig = SvgFigure(title=scenario.name)
    params = scenario.params
    if report.ibm is not None:
        fig.band(report.ibm.times, report.ibm.q025, report.ibm.q975, color="#ffb6c1",
                 label="IBM 2.5-97.5% band")
        fig.markers(report.ibm.times, report.ibm.mean_mbar, color="#d62728",
                    label="IBM replicate mean")
    if report.ide is not None:
        fig.polyline(report.ide.times, report.ide.mbar, color="#222222", dash="6,4",
                     label="grid solver")
    if report.analytic is not None:
        fig.polyline(report.analytic.times, report.analytic.mbar, color="#1f77b4",
                     width=2.0, label="analytic")
    load = -params.mu * params.n / 2.0
    fig.hline(load, color="#d62728", label="mutation load")
    if not isinstance(scenario.trajectory, Tabulated):
        try:
            summ = asymptotic_summary(params, scenario.trajectory)
            if summ.mean_over_period is not None:
                fig.hline(summ.mean_over_period, color="#333333",
                          label="period-average limit")
        except Exception:
            pass
    fig.write(path)
