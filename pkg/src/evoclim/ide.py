"""Deterministic grid solvers for the mutation-selection dynamics.

Two engines:

* ``solve_ide_1d``   -- the one-trait integro-differential equation
  dq/dt = U(J*q - q) + q(m - mbar), with the mutation kernel J = N(0, lam)
  applied by FFT convolution on a zero-padded grid and explicit Euler in
  time.
* ``solve_pde_reduced`` -- the diffusion approximation
  dq/dt = (mu^2/2) Lap q + q(m - mbar) for n >= 2, reduced by isotropy to
  coordinates (x1, r) with Lap = d2/dx1^2 + d2/dr^2 + ((n-2)/r) d/dr,
  solved by Strang splitting: half-step Crank-Nicolson ADI diffusion, exact
  pointwise growth, half-step diffusion.  The radial operator is discretized
  in conservative flux form on cell-centered nodes, which gives the r=0
  regularity (zero flux) for free; outer boundaries are homogeneous
  Dirichlet.

Both solvers renormalize the mass to 1 every step and record fitness
moments by (weighted) trapezoid rule.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numba
import numpy as np
from scipy.fft import irfft, rfft

from .analytic import MomentTrajectory
from .environment import EnvTrajectory, ModelParams


class CFLViolationError(RuntimeError):
    """dt * max|m - mbar| exceeded the explicit-stability budget."""


@dataclass(frozen=True)
class DensityInit:
    """Initial density profile: 'gaussian' with (mean, var) or 'near_dirac'.

    A true point mass is not representable on a grid; near_dirac uses a
    Gaussian with variance lam (one mutational step), the smallest natural
    scale of the model.
    """

    kind: str
    mean: float = 0.0
    var: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("gaussian", "near_dirac"):
            raise ValueError("kind must be 'gaussian' or 'near_dirac'")
        if self.kind == "gaussian" and (self.var is None or self.var <= 0.0):
            raise ValueError("gaussian init requires var > 0")

    def variance(self, params: ModelParams) -> float:
        return params.lam if self.kind == "near_dirac" else float(self.var)


@dataclass
class Grid1D:
    """Uniform symmetric grid on [-L, L] with M nodes (M a power of two)."""

    L: float
    M: int = 4096
    values: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.L <= 0.0:
            raise ValueError("L must be > 0")
        if self.M < 8 or (self.M & (self.M - 1)) != 0:
            raise ValueError("M must be a power of two >= 8")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.M)

    @property
    def dx(self) -> float:
        return 2.0 * self.L / (self.M - 1)


@dataclass
class GridReduced:
    """Axis nodes x1 in [-L1, L1] (M1 points) and cell-centered radial nodes.

    The radial nodes sit at (j + 1/2) * dr in [0, Lr]; densities carry the
    angular volume weight omega_{n-2} r^{n-2} in every mass or moment
    integral.
    """

    L1: float
    Lr: float
    M1: int = 512
    Mr: int = 256

    def __post_init__(self) -> None:
        if self.L1 <= 0.0 or self.Lr <= 0.0:
            raise ValueError("domain half-widths must be > 0")
        if self.M1 < 8 or self.Mr < 8:
            raise ValueError("grid must have at least 8 points per axis")

    @property
    def x1(self) -> np.ndarray:
        return np.linspace(-self.L1, self.L1, self.M1)

    @property
    def dx1(self) -> float:
        return 2.0 * self.L1 / (self.M1 - 1)

    @property
    def dr(self) -> float:
        return self.Lr / self.Mr

    @property
    def r(self) -> np.ndarray:
        return (np.arange(self.Mr) + 0.5) * self.dr


def _max_abs_delta(traj: EnvTrajectory, T: float) -> float:
    ts = np.linspace(0.0, T, 4097)
    return float(np.max(np.abs(traj.delta(ts))))


def default_grid_1d(params: ModelParams, traj: EnvTrajectory, T: float, M: int = 4096) -> Grid1D:
    """Domain sized so that boundary density stays negligible.

    Covers the optimum's range plus 8 equilibrium standard deviations
    (sqrt(mu)) plus 6 mutation-kernel widths: the integro-differential tails
    are populated by single jumps from the core, which reach further than
    the diffusion scale.
    """
    L = _max_abs_delta(traj, T) + 8.0 * math.sqrt(params.mu) + 6.0 * math.sqrt(params.lam)
    return Grid1D(L=L, M=M)


def default_grid_reduced(
    params: ModelParams, traj: EnvTrajectory, T: float, M1: int = 512, Mr: int = 256
) -> GridReduced:
    s = 8.0 * math.sqrt(params.mu)
    return GridReduced(L1=_max_abs_delta(traj, T) + s, Lr=s, M1=M1, Mr=Mr)


def _moments_from_samples(m: np.ndarray, q: np.ndarray, w: np.ndarray):
    """Mean, variance and skewness of fitness values m under weights q*w."""
    p = q * w
    p = p / p.sum()
    mbar = float(np.sum(p * m))
    d = m - mbar
    vm = float(np.sum(p * d * d))
    m3 = float(np.sum(p * d * d * d))
    skew = m3 / vm**1.5 if vm > 0.0 else math.nan
    return mbar, vm, skew


def _record_times(T: float, record_every: float, dt: float):
    n_steps = int(round(T / dt))
    if abs(n_steps * dt - T) > 1e-9 * max(1.0, T):
        raise ValueError("dt must divide T")
    stride = int(round(record_every / dt))
    if stride < 1 or abs(stride * dt - record_every) > 1e-9:
        raise ValueError("record_every must be a positive multiple of dt")
    return n_steps, stride


def solve_ide_1d(
    params: ModelParams,
    traj: EnvTrajectory,
    q0: DensityInit,
    T: float,
    grid: Grid1D | None = None,
    dt: float = 0.05,
    record_every: float = 1.0,
    snapshot_times: list | None = None,
) -> MomentTrajectory:
    """Explicit-Euler/FFT solve of the 1-D mutation-selection IDE.

    Requires params.n == 1.  Raises CFLViolationError when
    dt * max|m - mbar| > 0.2 on the grid; warns when boundary density
    exceeds 1e-9.  Mass is renormalized to 1 every step.
    """
    if params.n != 1:
        raise ValueError("the integro-differential solver is one-dimensional (n=1)")
    if grid is None:
        grid = default_grid_1d(params, traj, T)
    x, dx = grid.x, grid.dx
    M = grid.M

    var0 = q0.variance(params)
    q = np.exp(-0.5 * (x - q0.mean) ** 2 / var0)
    q /= np.trapezoid(q, dx=dx)

    # mutation kernel N(0, lam) stamped on grid offsets, zero-padded FFT
    n_pad = 2 * M
    offsets = np.arange(n_pad, dtype=float)
    offsets[M:] -= n_pad
    kernel = np.exp(-0.5 * (offsets * dx) ** 2 / params.lam) / math.sqrt(
        2.0 * math.pi * params.lam
    )
    kernel_hat = rfft(kernel)

    n_steps, stride = _record_times(T, record_every, dt)
    times, mbars, vms, skews = [], [], [], []
    snapshots: list = []
    warned_boundary = False
    max_renorm = 0.0

    qpad = np.zeros(n_pad)
    for k in range(n_steps + 1):
        t = k * dt
        m = -0.5 * (x - float(traj.delta(t))) ** 2
        mbar = float(np.trapezoid(q * m, dx=dx))
        if k % stride == 0:
            mb, vm, sk = _moments_from_samples(m, q, np.full(M, dx))
            times.append(t)
            mbars.append(mb)
            vms.append(vm)
            skews.append(sk)
        if snapshot_times is not None and any(abs(t - ts) < 0.5 * dt for ts in snapshot_times):
            snapshots.append((t, q.copy()))
        if k == n_steps:
            break
        if dt * float(np.max(np.abs(m - mbar))) > 0.2:
            raise CFLViolationError(
                f"dt*max|m-mbar| = {dt * float(np.max(np.abs(m - mbar))):.3f} > 0.2 at t={t}"
            )
        qpad[:M] = q
        conv = irfft(rfft(qpad) * kernel_hat)[:M] * dx
        q = q + dt * (params.U * (conv - q) + q * (m - mbar))
        np.clip(q, 0.0, None, out=q)
        mass = float(np.trapezoid(q, dx=dx))
        max_renorm = max(max_renorm, abs(mass - 1.0))
        q /= mass
        if not warned_boundary and max(q[0], q[-1]) > 1e-9:
            warnings.warn(f"boundary density {max(q[0], q[-1]):.2e} at t={t}")
            warned_boundary = True

    out = MomentTrajectory(
        times=np.array(times),
        mbar=np.array(mbars),
        vm=np.array(vms),
        skew=np.array(skews),
        source="ide",
    )
    out.max_renorm_correction = max_renorm
    out.snapshots = snapshots
    out.grid = grid
    grid.values = q
    return out


# ---------------------------------------------------------------------------
# prefactored Thomas solves for the ADI sweeps (constant tridiagonal systems)
# ---------------------------------------------------------------------------


@numba.njit(cache=True)
def _thomas_axis0(w, invb, c, B):
    M = B.shape[0]
    for i in range(1, M):
        B[i] -= w[i] * B[i - 1]
    B[M - 1] *= invb[M - 1]
    for i in range(M - 2, -1, -1):
        B[i] = (B[i] - c[i] * B[i + 1]) * invb[i]


@numba.njit(cache=True)
def _thomas_axis1(w, invb, c, B):
    M0, M1 = B.shape
    for i in range(M0):
        for j in range(1, M1):
            B[i, j] -= w[j] * B[i, j - 1]
        B[i, M1 - 1] *= invb[M1 - 1]
        for j in range(M1 - 2, -1, -1):
            B[i, j] = (B[i, j] - c[j] * B[i, j + 1]) * invb[j]



@numba.njit(cache=True)
def _adi_half_step(q, tmp, rX, rD, rS, xw, xi, xc, xX, xD, xS, rw, ri, rc):
    """One Peaceman-Rachford half-step, fused: q <- Dr_impl Dx_expl Dx_impl Dr_expl q.

    Coefficient arrays are zero-padded to full length; tmp is scratch of
    q's shape.  Order: explicit r, implicit x, explicit x, implicit r.
    """
    M1, Mr = q.shape
    for i in range(M1):
        for j in range(Mr):
            v = rD[j] * q[i, j]
            if j > 0:
                v += rX[j] * q[i, j - 1]
            if j < Mr - 1:
                v += rS[j] * q[i, j + 1]
            tmp[i, j] = v
    for i in range(1, M1):
        for j in range(Mr):
            tmp[i, j] -= xw[i] * tmp[i - 1, j]
    for j in range(Mr):
        tmp[M1 - 1, j] *= xi[M1 - 1]
    for i in range(M1 - 2, -1, -1):
        for j in range(Mr):
            tmp[i, j] = (tmp[i, j] - xc[i] * tmp[i + 1, j]) * xi[i]
    for i in range(M1):
        for j in range(Mr):
            v = xD[i] * tmp[i, j]
            if i > 0:
                v += xX[i] * tmp[i - 1, j]
            if i < M1 - 1:
                v += xS[i] * tmp[i + 1, j]
            q[i, j] = v
    for i in range(M1):
        for j in range(1, Mr):
            q[i, j] -= rw[j] * q[i, j - 1]
        q[i, Mr - 1] *= ri[Mr - 1]
        for j in range(Mr - 2, -1, -1):
            q[i, j] = (q[i, j] - rc[j] * q[i, j + 1]) * ri[j]


class _Tridiag:
    """Prefactored I - coef*A for a tridiagonal A given by (sub, diag, sup)."""

    def __init__(self, sub, diag, sup):
        self.sub = sub
        self.diag = diag
        self.sup = sup
        M = diag.size
        btil = np.empty(M)
        w = np.zeros(M)
        btil[0] = diag[0]
        for i in range(1, M):
            w[i] = sub[i] / btil[i - 1]
            btil[i] = diag[i] - w[i] * sup[i - 1]
        self.w = w
        self.invb = 1.0 / btil
        self.c = np.concatenate((sup, [0.0]))

    def solve_axis0(self, B):
        _thomas_axis0(self.w, self.invb, self.c, B)

    def solve_axis1(self, B):
        _thomas_axis1(self.w, self.invb, self.c, B)


def _apply_tridiag_axis0(sub, diag, sup, B):
    out = diag[:, None] * B
    out[1:] += sub[1:, None] * B[:-1]
    out[:-1] += sup[:, None] * B[1:]
    return out


def _apply_tridiag_axis1(sub, diag, sup, B):
    out = diag[None, :] * B
    out[:, 1:] += sub[None, 1:] * B[:, :-1]
    out[:, :-1] += sup[None, :] * B[:, 1:]
    return out


def radial_laplacian_coeffs(grid: GridReduced, n: int):
    """Sub/diag/sup of the conservative radial operator (1/r^v) d/dr(r^v d/dr).

    v = n-2; for n = 2 all flux weights collapse to 1 and the operator is the
    plain 1-D Laplacian with a reflecting (zero-flux) boundary at r = 0.
    """
    r = grid.r
    dr = grid.dr
    v = n - 2
    r_minus = r - 0.5 * dr
    r_plus = r + 0.5 * dr
    if v == 0:
        wm = np.ones_like(r)
        wp = np.ones_like(r)
        wc = np.ones_like(r)
    else:
        wm = r_minus**v
        wp = r_plus**v
        wc = r**v
    wm[0] = 0.0  # zero flux through r = 0
    sub = wm / (wc * dr * dr)
    sup_full = wp / (wc * dr * dr)
    diag = -(wm + wp) / (wc * dr * dr)  # Dirichlet beyond the outer edge
    return sub, diag, sup_full[:-1]


def _axis_laplacian_coeffs(M: int, dx: float):
    sub = np.full(M, 1.0 / (dx * dx))
    sub[0] = 0.0
    sup = np.full(M - 1, 1.0 / (dx * dx))
    diag = np.full(M, -2.0 / (dx * dx))
    return sub, diag, sup


def solve_pde_reduced(
    params: ModelParams,
    traj: EnvTrajectory,
    q0: DensityInit,
    T: float,
    grid: GridReduced | None = None,
    dt: float = 0.05,
    record_every: float = 1.0,
    snapshot_times: list | None = None,
) -> MomentTrajectory:
    """Strang-split Crank-Nicolson ADI solve of the reduced diffusion model.

    Requires params.n >= 2 and an initial profile isotropic about a point on
    the shift axis.  Each step: half-step diffusion (Peaceman-Rachford ADI
    over x1 and r), full-step exact pointwise growth exp(dt*(m - mbar)),
    half-step diffusion; mass renormalized to 1 after every step.
    """
    n = params.n
    if n < 2:
        raise ValueError("the reduced solver needs n >= 2; use solve_ide_1d for n = 1")
    if grid is None:
        grid = default_grid_reduced(params, traj, T)
    x1, r = grid.x1, grid.r
    dx1, dr = grid.dx1, grid.dr

    omega = 2.0 * math.pi ** ((n - 1) / 2.0) / math.gamma((n - 1) / 2.0)
    wx = np.full(grid.M1, dx1)
    wx[0] = wx[-1] = 0.5 * dx1
    wr = omega * r ** (n - 2) * dr
    W = wx[:, None] * wr[None, :]

    var0 = q0.variance(params)
    q = np.exp(-0.5 * ((x1[:, None] - q0.mean) ** 2 + r[None, :] ** 2) / var0)
    q /= float((q * W).sum())

    mu2 = params.mu**2
    # Peaceman-Rachford ADI for a diffusion half-step of length dt/2:
    # each direction is implicit over dt/4.
    coef = mu2 / 2.0 * (dt / 4.0)
    sx, dxd, px = _axis_laplacian_coeffs(grid.M1, dx1)
    sr, drd, pr = radial_laplacian_coeffs(grid, n)
    impl_x = _Tridiag(-coef * sx, 1.0 - coef * dxd, -coef * px)
    impl_r = _Tridiag(-coef * sr, 1.0 - coef * drd, -coef * pr)

    def _pad(arr, size):
        out = np.zeros(size)
        out[: arr.size] = arr
        return out

    rX, rD, rS = coef * sr, 1.0 + coef * drd, _pad(coef * pr, grid.Mr)
    xX, xD, xS = coef * sx, 1.0 + coef * dxd, _pad(coef * px, grid.M1)
    xc = _pad(impl_x.c[:-1], grid.M1)
    rc = _pad(impl_r.c[:-1], grid.Mr)
    scratch = np.empty((grid.M1, grid.Mr))

    def diffuse_half(qm):
        _adi_half_step(qm, scratch, rX, rD, rS,
                       impl_x.w, impl_x.invb, xc, xX, xD, xS,
                       impl_r.w, impl_r.invb, rc)
        return qm

    n_steps, stride = _record_times(T, record_every, dt)
    times, mbars, vms, skews = [], [], [], []
    snapshots: list = []
    warned_boundary = False
    max_renorm = 0.0
    max_clip = 0.0
    r2 = r[None, :] ** 2

    def fitness(t):
        return -0.5 * ((x1[:, None] - float(traj.delta(t))) ** 2 + r2)

    for k in range(n_steps + 1):
        t = k * dt
        m = fitness(t)
        if k % stride == 0:
            mb, vm, sk = _moments_from_samples(m.ravel(), q.ravel(), W.ravel())
            times.append(t)
            mbars.append(mb)
            vms.append(vm)
            skews.append(sk)
        if snapshot_times is not None and any(abs(t - ts) < 0.5 * dt for ts in snapshot_times):
            snapshots.append((t, q.copy()))
        if k == n_steps:
            break

        if k % stride == 0:
            p = q * W
            mbar = float((p * m).sum() / p.sum())
            live = q > 1e-12 * q.max()
            if dt * float(np.max(np.abs(m[live] - mbar))) > 0.2:
                raise CFLViolationError(
                    f"dt*max|m-mbar| > 0.2 on the populated region at t={t}"
                )

        q = diffuse_half(q)
        m_mid = fitness(t + 0.5 * dt)
        mbar_mid = float((q * W * m_mid).sum() / (q * W).sum())
        q = q * np.exp(dt * (m_mid - mbar_mid))
        q = diffuse_half(q)

        neg = q < 0.0
        if np.any(neg):
            clipped = -float((q[neg] * W[neg]).sum())
            max_clip = max(max_clip, clipped)
            q[neg] = 0.0
        mass = float((q * W).sum())
        max_renorm = max(max_renorm, abs(mass - 1.0))
        q /= mass
        edge = max(float(q[0].max()), float(q[-1].max()), float(q[:, -1].max()))
        if not warned_boundary and edge > 1e-9:
            warnings.warn(f"boundary density {edge:.2e} at t={t}")
            warned_boundary = True

    out = MomentTrajectory(
        times=np.array(times),
        mbar=np.array(mbars),
        vm=np.array(vms),
        skew=np.array(skews),
        source="ide",
    )
    out.max_renorm_correction = max_renorm
    out.max_clipped_mass = max_clip
    out.final_density = q
    out.snapshots = snapshots
    out.grid = grid
    return out

def write_snapshots(result: MomentTrajectory, outdir) -> None:
    """Write recorded density snapshots as CSV matrices with a JSON manifest."""
    import json
    import os

    snaps = getattr(result, "snapshots", None)
    if not snaps:
        raise ValueError("no snapshots were recorded")
    os.makedirs(outdir, exist_ok=True)
    manifest = {"times": [], "files": [], "grid": {}}
    grid = getattr(result, "grid", None)
    if isinstance(grid, Grid1D):
        manifest["grid"] = {"kind": "1d", "L": grid.L, "M": grid.M}
    elif isinstance(grid, GridReduced):
        manifest["grid"] = {
            "kind": "reduced",
            "L1": grid.L1,
            "Lr": grid.Lr,
            "M1": grid.M1,
            "Mr": grid.Mr,
        }
    for i, (t, q) in enumerate(snaps):
        fname = f"density_{i:03d}.csv"
        np.savetxt(os.path.join(outdir, fname), np.atleast_2d(q), delimiter=",")
        manifest["times"].append(t)
        manifest["files"].append(fname)
    with open(os.path.join(outdir, "snapshots.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
