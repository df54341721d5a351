"""Expectation values, quadrature squeezing, phase-transition scans and
adiabatic-ramp diagnostics."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse
from scipy.optimize import minimize_scalar

from .ansatz import analytic_scaled_moments, build_ansatz_state, residual, solve_ansatz
from .fock_space import BosonOperators, TruncationWarning
from .model import (
    ContinuationError,
    ModelParams,
    ProductSpace,
    Regime,
    ZeroStateTracker,
    build_scaled_hamiltonian,
    classify,
)


def expectation(op: np.ndarray, state: np.ndarray) -> complex:
    """<psi|op|psi> for a vector, tr(op W) for a square matrix."""
    state = np.asarray(state)
    if state.ndim == 1:
        if op.shape[1] != state.shape[0]:
            raise ValueError(f"dimension mismatch: op {op.shape}, state {state.shape}")
        return complex(np.vdot(state, op @ state))
    if state.shape != op.shape:
        raise ValueError(f"dimension mismatch: op {op.shape}, density {state.shape}")
    return complex(np.trace(op @ state))


def fidelity(psi: np.ndarray, phi: np.ndarray) -> float:
    """|<psi|phi>|^2 for pure states."""
    return float(abs(np.vdot(psi, phi)) ** 2)


def boson_density(state: np.ndarray, fock_dim: int) -> np.ndarray:
    """Reduced density matrix of the vibrational mode.

    Accepts a boson-only vector, a product-space vector, or a product-space
    density matrix (spin-major ordering).
    """
    state = np.asarray(state)
    if state.ndim == 1:
        amps = state.reshape(-1, fock_dim)
        return amps.T @ amps.conj()
    spin_dim = state.shape[0] // fock_dim
    return np.einsum("ajak->jk", state.reshape(spin_dim, fock_dim, spin_dim, fock_dim))


def _quadrature_moments(rho_b: np.ndarray, boson: BosonOperators):
    x, y = boson.x, boson.y
    ex = np.real(np.trace(x @ rho_b))
    ey = np.real(np.trace(y @ rho_b))
    xx = np.real(np.trace(x @ x @ rho_b))
    yy = np.real(np.trace(y @ y @ rho_b))
    sym = np.real(np.trace((x @ y + y @ x) @ rho_b)) / 2
    return ex, ey, xx, yy, sym


def quadrature_variance(state: np.ndarray, phi: float, boson: BosonOperators) -> float:
    """Var[X cos(phi) + Y sin(phi)] of the vibrational mode."""
    rho_b = boson_density(state, boson.dim)
    ex, ey, xx, yy, sym = _quadrature_moments(rho_b, boson)
    c, s = math.cos(phi), math.sin(phi)
    second = c * c * xx + s * s * yy + 2 * c * s * sym
    return float(second - (c * ex + s * ey) ** 2)


def min_quadrature_variance(
    state: np.ndarray, boson: BosonOperators, angle_tol: float = 1e-10
) -> tuple[float, float]:
    """Minimum quadrature variance and its angle in [0, pi).

    The variance is pi-periodic with a single minimum per period; a coarse grid
    brackets it and golden-section search refines the angle.
    """
    rho_b = boson_density(state, boson.dim)
    ex, ey, xx, yy, sym = _quadrature_moments(rho_b, boson)

    def var(phi):
        c, s = math.cos(phi), math.sin(phi)
        return c * c * xx + s * s * yy + 2 * c * s * sym - (c * ex + s * ey) ** 2

    grid = np.linspace(0.0, math.pi, 16, endpoint=False)
    vals = [var(p) for p in grid]
    k = int(np.argmin(vals))
    step = grid[1] - grid[0]
    lo, mid, hi = grid[k] - step, grid[k], grid[k] + step
    if not (var(mid) < var(lo) and var(mid) < var(hi)):
        # flat variance (e.g. vacuum): every angle is a minimizer
        return float(vals[k]), float(grid[k])
    res = minimize_scalar(var, bracket=(lo, mid, hi), method="golden", tol=angle_tol)
    return float(res.fun), float(res.x % math.pi)


@dataclass
class ScanRow:
    x: float
    jx_num: float | None
    jy_num: float | None
    jz_num: float | None
    jx_an: float
    jy_an: float
    jz_an: float
    var_min: float | None
    r_ansatz: float | None
    residual: float | None
    eigenvalue: float | None
    overlap: float | None
    status: str = "ok"
    a_mean: complex | None = field(default=None, repr=False)
    fock_tail: float | None = field(default=None, repr=False)

    FIELDS = (
        "x", "jx_num", "jy_num", "jz_num", "jx_an", "jy_an", "jz_an",
        "var_min", "r_ansatz", "residual", "eigenvalue", "overlap",
    )  # fmt: skip


def scan_phase_transition(
    n_ions: int,
    coupling: float,
    x_grid: Sequence[float],
    n_max: int,
    max_step: float = 0.02,
    min_overlap: float = 0.5,
) -> list[ScanRow]:
    """Tracked-state moments against the mean-field curves on an ascending x grid.

    Continuation failure below threshold raises ContinuationError; at or above
    threshold the remaining rows keep analytic values and get status
    "continuation-failed" with empty numeric fields.
    """
    x_grid = [float(x) for x in x_grid]
    if any(b < a for a, b in zip(x_grid, x_grid[1:])) or (x_grid and x_grid[0] < 0):
        raise ValueError("x grid must be ascending and non-negative")
    space = ProductSpace.build(n_ions, n_max)
    tracker = ZeroStateTracker(n_ions, coupling, n_max, max_step, min_overlap, space=space)
    half = n_ions / 2
    rows = []
    failed_at = None
    for x in x_grid:
        jy_an, jz_an, jx_an = analytic_scaled_moments(x)
        params = ModelParams.from_scaled(n_ions, x, coupling)
        regime = classify(x)
        r_ansatz = res = None
        if regime is Regime.BELOW:
            sol = solve_ansatz(params)
            r_ansatz = sol.r
            psi_an = build_ansatz_state(sol, space.spin, space.boson)
            res = residual(build_scaled_hamiltonian(params, n_max, space), psi_an)
        row = ScanRow(x, None, None, None, jx_an, jy_an, jz_an, None, r_ansatz, res, None, None)
        if failed_at is None:
            try:
                point = tracker.advance_to(x)
            except ContinuationError as err:
                if regime is Regime.BELOW:
                    raise
                failed_at = err.x
        if failed_at is not None:
            row.status = "continuation-failed"
            rows.append(row)
            continue
        psi = point.state
        row.jx_num = float(np.real(expectation(space.jx, psi))) / half
        row.jy_num = float(np.real(expectation(space.jy, psi))) / half
        row.jz_num = float(np.real(expectation(space.jz, psi))) / half
        row.var_min = min_quadrature_variance(psi, space.boson)[0]
        row.eigenvalue = point.eigenvalue
        row.overlap = point.overlap
        row.a_mean = expectation(space.a, psi)
        row.fock_tail = space.fock_tail(psi)
        rows.append(row)
    return rows


@dataclass(frozen=True)
class LinearRamp:
    """x(t) = x_final * min(t / ramp_time, 1)."""

    x_final: float
    ramp_time: float

    def __call__(self, t: float) -> float:
        if self.ramp_time <= 0:
            return self.x_final
        return self.x_final * min(max(t, 0.0) / self.ramp_time, 1.0)


@dataclass
class SweepSample:
    t: float
    x: float
    fidelity: float
    energy: float
    var_min: float
    leak: float


def adiabatic_sweep(
    n_ions: int,
    coupling: float,
    ramp,
    t_end: float,
    dt: float,
    n_max: int,
    n_samples: int = 101,
    track_step: float = 0.02,
    leak_tol: float = 1e-6,
) -> list[SweepSample]:
    """Ramp the drive from zero and compare with the tracked zero state.

    The Schrodinger equation is stepped with RK4, holding E at its mid-step
    value.  `ramp` maps physical time to scaled drive x and must start at 0.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if ramp(0.0) != 0:
        raise ValueError("ramp must start at x = 0")
    space = ProductSpace.build(n_ions, n_max)
    h0 = scipy.sparse.csr_matrix(coupling * space.interaction)
    v = scipy.sparse.csr_matrix(space.drive_term)
    tracker = ZeroStateTracker(n_ions, coupling, n_max, track_step, space=space)
    n_steps = int(round(t_end / dt))
    stride = max(1, n_steps // max(n_samples - 1, 1))
    drive_per_x = n_ions * coupling / 2

    psi = space.ground_state()
    out = []
    warned = False

    def sample(k):
        nonlocal warned
        t = k * dt
        x = ramp(t)
        point = tracker.advance_to(x)
        h = h0 + (x * drive_per_x) * v
        leak = space.fock_tail(psi)
        if leak > leak_tol and not warned:
            warnings.warn(
                f"{leak:.2e} probability in the top Fock levels at t = {t:.6g}; raise n_max",
                TruncationWarning,
                stacklevel=3,
            )
            warned = True
        out.append(
            SweepSample(
                t=t,
                x=x,
                fidelity=fidelity(point.state, psi),
                energy=float(np.real(np.vdot(psi, h @ psi))),
                var_min=min_quadrature_variance(psi, space.boson)[0],
                leak=leak,
            )
        )

    sample(0)
    for k in range(n_steps):
        e_mid = ramp((k + 0.5) * dt) * drive_per_x
        h = h0 + e_mid * v
        k1 = -1j * (h @ psi)
        k2 = -1j * (h @ (psi + 0.5 * dt * k1))
        k3 = -1j * (h @ (psi + 0.5 * dt * k2))
        k4 = -1j * (h @ (psi + dt * k3))
        psi = psi + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        if (k + 1) % stride == 0 or k + 1 == n_steps:
            sample(k + 1)
    return out
