"""Wright-Fisher individual-based benchmark.

Constant population size N; each generation, selection and drift act through
multinomial sampling of N offspring weighted by exp(fitness), then every
offspring receives a Poisson(U) number of mutations, each adding an
independent N(0, lam*I_n) displacement.  Generations are non-overlapping with
duration 1.  The hot loop is a compiled kernel fed with pre-drawn random
variates, so replicate streams stay on the counter-based generator contract.
"""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass

import numba
import numpy as np

from .environment import EnvTrajectory, ModelParams
from .numerics import RngStream


@dataclass
class PopulationState:
    """N x n phenotype matrix plus generation counter and its random stream."""

    phenotypes: np.ndarray
    generation: int
    stream: RngStream

    def __post_init__(self) -> None:
        self.phenotypes = np.asarray(self.phenotypes, dtype=float)
        if self.phenotypes.ndim != 2 or self.phenotypes.shape[0] < 1:
            raise ValueError("phenotypes must be an N x n matrix with N >= 1")
        if not hasattr(self, "_rng") or self._rng is None:
            self._rng = self.stream.generator()

    @property
    def size(self) -> int:
        return self.phenotypes.shape[0]


def init_clonal(
    params: ModelParams,
    N: int,
    stream: RngStream,
    at: np.ndarray | None = None,
) -> PopulationState:
    """Clonal population of N individuals, at the optimum (or at phenotype `at`)."""
    if N < 1:
        raise ValueError("N must be >= 1")
    x = np.zeros((N, params.n))
    if at is not None:
        at = np.asarray(at, dtype=float)
        if at.shape != (params.n,):
            raise ValueError(f"`at` must have shape ({params.n},)")
        x[:] = at
    return PopulationState(phenotypes=x, generation=0, stream=stream)


@numba.njit(cache=True)
def _wf_generation(x, delta, u_sorted, kmut, normals, out):
    """One selection + mutation sweep; returns (mbar, mbar1, mbar2) of the parents.

    Selection: inverse-CDF on the cumulative weight array with the sorted
    uniforms u_sorted (a two-pointer merge, equivalent to per-offspring
    multinomial draws).  Weights are exp(m_i - max_j m_j): the max shift
    cancels in the normalization and prevents underflow far from the optimum.
    Mutation: offspring k receives kmut[k] mutations; their sum is a single
    N(0, kmut*lam*I_n) displacement, supplied in `normals` (already scaled by
    sqrt(lam)) for the offspring with kmut > 0 in order.
    """
    N, n = x.shape
    m = np.empty(N)
    mmax = -np.inf
    mbar = 0.0
    mbar1 = 0.0
    mbar2 = 0.0
    half_d2 = 0.5 * delta * delta
    for i in range(N):
        s = 0.0
        for j in range(n):
            s += x[i, j] * x[i, j]
        mi = -0.5 * s + delta * x[i, 0] - half_d2
        m[i] = mi
        mbar += mi
        mbar1 += x[i, 0]
        mbar2 += -0.5 * s
        if mi > mmax:
            mmax = mi
    mbar /= N
    mbar1 /= N
    mbar2 /= N

    cw = np.empty(N)
    acc = 0.0
    for i in range(N):
        acc += np.exp(m[i] - mmax)
        cw[i] = acc
    total = acc

    p = 0
    nm = 0
    for k in range(N):
        uk = u_sorted[k] * total
        while p < N - 1 and cw[p] < uk:
            p += 1
        km = kmut[k]
        if km > 0:
            sc = np.sqrt(float(km))
            for j in range(n):
                out[k, j] = x[p, j] + sc * normals[nm, j]
            nm += 1
        else:
            for j in range(n):
                out[k, j] = x[p, j]
    return mbar, mbar1, mbar2


def population_moments(state: PopulationState, params: ModelParams, traj: EnvTrajectory):
    """(mbar, mbar1, mbar2) of the current population at its own generation time."""
    x = state.phenotypes
    delta = float(traj.delta(float(state.generation)))
    m2 = -0.5 * np.einsum("ij,ij->i", x, x)
    m1 = x[:, 0]
    m = delta * m1 + m2 - 0.5 * delta * delta
    return float(m.mean()), float(m1.mean()), float(m2.mean())


def step(state: PopulationState, params: ModelParams, traj: EnvTrajectory) -> PopulationState:
    """Advance one generation in place (and return the state).

    The optimum is evaluated at the start of the generation (t = current
    generation counter), then N offspring are drawn by weighted inverse-CDF
    sampling and mutated.
    """
    if float(state.generation + 1) > traj.horizon:
        raise ValueError("trajectory horizon does not cover the next generation")
    x = state.phenotypes
    N, n = x.shape
    rng = state._rng
    delta = float(traj.delta(float(state.generation)))
    u = np.sort(rng.random(N))
    kmut = rng.poisson(params.U, N)
    n_mutants = int(np.count_nonzero(kmut))
    normals = rng.standard_normal((n_mutants, n)) * math.sqrt(params.lam)
    out = np.empty_like(x)
    _wf_generation(x, delta, u, kmut, normals, out)
    state.phenotypes = out
    state.generation += 1
    return state


@dataclass
class ReplicateStats:
    """Cross-replicate mean fitness with empirical 2.5%/97.5% quantile band."""

    times: np.ndarray
    mean_mbar: np.ndarray
    q025: np.ndarray
    q975: np.ndarray
    series: np.ndarray | None = None
    component_means: tuple[np.ndarray, np.ndarray] | None = None
    seeds: dict | None = None

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "mean_mbar", "q025", "q975"])
            for i, t in enumerate(self.times):
                w.writerow(
                    [
                        repr(float(t)),
                        repr(float(self.mean_mbar[i])),
                        repr(float(self.q025[i])),
                        repr(float(self.q975[i])),
                    ]
                )

    def write_series(self, path) -> None:
        """Optional per-replicate matrix (rows = replicates, cols = times)."""
        if self.series is None:
            raise ValueError("series were not recorded")
        np.savetxt(path, self.series, delimiter=",")

    def write_meta(self, path, extra: dict | None = None) -> None:
        meta = dict(self.seeds or {})
        if extra:
            meta.update(extra)
        with open(path, "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)


def _run_one_replicate(args) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    (params, traj, N, T, stream, record_every, at) = args
    state = init_clonal(params, N, stream, at=at)
    n_rec = T // record_every + 1
    mbar = np.empty(n_rec)
    m1 = np.empty(n_rec)
    m2 = np.empty(n_rec)
    k = 0
    for g in range(T + 1):
        if g % record_every == 0:
            mbar[k], m1[k], m2[k] = population_moments(state, params, traj)
            k += 1
        if g < T:
            step(state, params, traj)
    return mbar, m1, m2


def worker_count() -> int:
    """Worker cap from EVOCLIM_THREADS, defaulting to the machine's CPU count."""
    env = os.environ.get("EVOCLIM_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_replicates(
    params: ModelParams,
    traj: EnvTrajectory,
    N: int,
    T: int,
    replicates: int,
    base_stream: RngStream,
    record_every: int = 1,
    keep_series: bool = False,
    record_components: bool = False,
    at: np.ndarray | None = None,
) -> ReplicateStats:
    """Run `replicates` independent populations; replicate r uses stream_id base+r.

    Records the population mean fitness every record_every generations and
    returns the cross-replicate mean together with the 0.025/0.975 empirical
    quantiles.  Replicates are independent tasks; aggregation is ordered by
    replicate index, so results do not depend on scheduling.
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    if T < 0:
        raise ValueError("T must be >= 0")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    times = np.arange(0, T + 1, record_every, dtype=float)
    jobs = [
        (params, traj, N, T, base_stream.child(r), record_every, at)
        for r in range(replicates)
    ]
    workers = min(worker_count(), replicates)
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_one_replicate, jobs, chunksize=8))
    else:
        results = [_run_one_replicate(j) for j in jobs]

    series = np.stack([r[0] for r in results])
    mean = series.mean(axis=0)
    q025 = np.quantile(series, 0.025, axis=0)
    q975 = np.quantile(series, 0.975, axis=0)
    comp = None
    if record_components:
        comp = (
            np.stack([r[1] for r in results]).mean(axis=0),
            np.stack([r[2] for r in results]).mean(axis=0),
        )
    return ReplicateStats(
        times=times,
        mean_mbar=mean,
        q025=q025,
        q975=q975,
        series=series if keep_series else None,
        component_means=comp,
        seeds={
            "seed": base_stream.seed,
            "base_stream_id": base_stream.stream_id,
            "replicates": replicates,
        },
    )
