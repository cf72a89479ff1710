"""evoclim: adaptation dynamics of an asexual population tracking a moving optimum.

Three cross-validated engines:

* ``analytic``  — closed-form trajectories of mean fitness, variance and
  skewness built from the characteristic curves of the underlying
  transport equation;
* ``ibm``       — a Wright-Fisher individual-based benchmark;
* ``ide``       — deterministic mutation-selection grid solvers.

The ``harness`` subpackage adds scenario configs, figure presets, parameter
sweeps, cross-engine comparison and a CLI.
"""
from .numerics import (
    DomainError,
    NonConvergenceError,
    QuadratureSpec,
    RngStream,
    hyp_ratio_cosh_cosh,
    hyp_ratio_sinh_cosh,
    integrate,
    stencil_derivative,
)
from .environment import (
    HorizonError,
    Linear,
    LinearPlusSin,
    ModelParams,
    Power,
    Sin,
    SinSq,
    Tabulated,
    realize_ou,
)
from .analytic import (
    AsymptoticSummary,
    Clonal,
    CriticalSpeed,
    CustomInit,
    DiracInit,
    IsotropicGaussianInit,
    MomentTrajectory,
    NegativeVarianceError,
    critical_speed,
    critical_speed_with_fluctuations,
    h_delta,
    mbar_closed,
    mean_fitness_trajectory,
    persistence_rho,
    q_eval,
    skewness_closed,
    variance_closed,
    y1,
    y2,
)
from .ibm import PopulationState, ReplicateStats, init_clonal, run_replicates, step
from .ide import DensityInit, Grid1D, GridReduced, solve_ide_1d, solve_pde_reduced

__version__ = "0.1.0"

__all__ = [
    "AsymptoticSummary",
    "Clonal",
    "CriticalSpeed",
    "CustomInit",
    "DensityInit",
    "DiracInit",
    "DomainError",
    "Grid1D",
    "GridReduced",
    "HorizonError",
    "IsotropicGaussianInit",
    "Linear",
    "LinearPlusSin",
    "ModelParams",
    "MomentTrajectory",
    "NegativeVarianceError",
    "NonConvergenceError",
    "PopulationState",
    "Power",
    "QuadratureSpec",
    "ReplicateStats",
    "RngStream",
    "Sin",
    "SinSq",
    "Tabulated",
    "critical_speed",
    "critical_speed_with_fluctuations",
    "h_delta",
    "hyp_ratio_cosh_cosh",
    "hyp_ratio_sinh_cosh",
    "init_clonal",
    "integrate",
    "mbar_closed",
    "mean_fitness_trajectory",
    "persistence_rho",
    "q_eval",
    "realize_ou",
    "run_replicates",
    "skewness_closed",
    "solve_ide_1d",
    "solve_pde_reduced",
    "step",
    "stencil_derivative",
    "variance_closed",
    "y1",
    "y2",
]
