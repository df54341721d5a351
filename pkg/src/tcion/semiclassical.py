"""Classical oscillator + top model in scaled units.

    H = X Jx - Y Jy + chi X,   {X, Y} = 1,   {J_i, J_j} = eps_ijk J_k

Heating enters as independent Wiener increments sqrt(gamma) dW on X and Y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, astuple

import numpy as np
from scipy.integrate import solve_ivp


class NoFixedPoint(ValueError):
    """|chi| > N/2: the conservation law forbids the fixed point."""


class BelowThreshold(ValueError):
    pass


class StiffnessError(RuntimeError):
    pass


@dataclass(frozen=True)
class PhasePoint:
    x_pos: float
    y_mom: float
    jx: float
    jy: float
    jz: float

    @classmethod
    def from_array(cls, arr) -> "PhasePoint":
        return cls(*(float(v) for v in arr))

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)

    @property
    def spin_norm2(self) -> float:
        return self.jx**2 + self.jy**2 + self.jz**2


@dataclass(frozen=True)
class SweepConfig:
    chi: float
    n_ions_equiv: float
    t_end: float
    rel_tol: float = 1e-11  # 1e-9 lets quadratic invariants drift ~3e-8 over t = 100
    abs_tol: float = 1e-14
    seed: int = 0
    gamma: float = 0.0
    n_traj: int = 1
    dt: float = 1e-3
    n_samples: int = 101
    freeze_spin: bool = False

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("integrator tolerances must be > 0")
        if self.n_traj < 1:
            raise ValueError("n_traj must be >= 1")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if self.n_samples < 2:
            raise ValueError("n_samples must be >= 2")


def _rhs(state: np.ndarray, chi: float) -> np.ndarray:
    # works on (5,) or (5, n_traj) arrays
    x, y, jx, jy, jz = state
    return np.array([-jy, -jx - chi, -y * jz, -x * jz, x * jy + y * jx])


def eom_rhs(p: PhasePoint, chi: float) -> PhasePoint:
    return PhasePoint.from_array(_rhs(p.as_array(), chi))


def energy(p: PhasePoint | np.ndarray, chi: float):
    x, y, jx, jy, _ = p.as_array() if isinstance(p, PhasePoint) else p
    return x * jx - y * jy + chi * x


@dataclass
class Trajectory:
    t: np.ndarray
    states: np.ndarray  # shape (len(t), 5)
    energy: np.ndarray
    spin_norm2: np.ndarray

    @property
    def spin_norm_drift(self) -> float:
        return float(np.max(np.abs(self.spin_norm2 - self.spin_norm2[0])))

    @property
    def energy_drift(self) -> float:
        return float(np.max(np.abs(self.energy - self.energy[0])))

    def point(self, k: int) -> PhasePoint:
        return PhasePoint.from_array(self.states[k])


def _trajectory(t, states, chi) -> Trajectory:
    states = np.asarray(states)
    return Trajectory(
        t=np.asarray(t),
        states=states,
        energy=energy(states.T, chi),
        spin_norm2=np.sum(states[:, 2:] ** 2, axis=1),
    )


def integrate(p0: PhasePoint, cfg: SweepConfig, t_eval=None) -> Trajectory:
    """Adaptive DOP853 integration of the deterministic flow (gamma must be 0)."""
    if cfg.gamma != 0:
        raise ValueError("integrate is deterministic; use sde_integrate for gamma > 0")
    if t_eval is None:
        t_eval = np.linspace(0.0, cfg.t_end, cfg.n_samples)
    sol = solve_ivp(
        lambda t, y: _rhs(y, cfg.chi),
        (0.0, cfg.t_end),
        p0.as_array(),
        method="DOP853",
        t_eval=t_eval,
        rtol=cfg.rel_tol,
        atol=cfg.abs_tol,
    )
    if not sol.success:
        raise StiffnessError(f"integration stopped at t = {sol.t[-1]:.6g}: {sol.message}")
    return _trajectory(sol.t, sol.y.T, cfg.chi)


def fixed_point(chi: float, n_ions_equiv: float) -> PhasePoint:
    """X = Y = Jy = 0, Jx = -chi, Jz = sqrt(N^2/4 - chi^2); energy 0."""
    half = n_ions_equiv / 2
    if abs(chi) > half:
        raise NoFixedPoint(
            f"|chi| = {abs(chi):.6g} exceeds N/2 = {half:.6g}: there is no fixed point above threshold"
        )
    return PhasePoint(0.0, 0.0, -chi, 0.0, math.sqrt(half * half - chi * chi))


def jacobian(p: PhasePoint) -> np.ndarray:
    x, y, jx, jy, jz = p.as_array()
    return np.array(
        [
            [0, 0, 0, -1, 0],
            [0, 0, -1, 0, 0],
            [0, -jz, 0, 0, -y],
            [-jz, 0, 0, 0, -x],
            [jy, jx, y, x, 0],
        ],
        dtype=float,
    )


def linearize(p: PhasePoint, chi: float = 0.0) -> tuple[np.ndarray, np.ndarray, float]:
    """Jacobian, its eigenvalues, and the leading growth rate (max real part).

    chi only shifts the Y equation by a constant and drops out of the Jacobian.
    """
    jac = jacobian(p)
    evals = np.linalg.eigvals(jac)
    return jac, evals, float(np.max(evals.real))


def canonical_transform(p: PhasePoint, theta: float) -> PhasePoint:
    """Barred variables from the original ones.

    The forward map is a simultaneous rotation of (X, Y) and (Jx, Jy):
        X  = Xb cos + Yb sin,     Y  = Yb cos - Xb sin
        Jx = Jbx cos - Jby sin,   Jy = Jbx sin + Jby cos
    and this function returns its inverse.
    """
    c, s = math.cos(theta), math.sin(theta)
    return PhasePoint(
        p.x_pos * c - p.y_mom * s,
        p.x_pos * s + p.y_mom * c,
        p.jx * c + p.jy * s,
        -p.jx * s + p.jy * c,
        p.jz,
    )


def inverse_canonical_transform(pb: PhasePoint, theta: float) -> PhasePoint:
    c, s = math.cos(theta), math.sin(theta)
    return PhasePoint(
        pb.x_pos * c + pb.y_mom * s,
        pb.y_mom * c - pb.x_pos * s,
        pb.jx * c - pb.jy * s,
        pb.jx * s + pb.jy * c,
        pb.jz,
    )


def transformed_energy(pb: PhasePoint, theta: float, chi: float) -> float:
    """Xb (Jbx + chi cos) - Yb (Jby - chi sin)."""
    return pb.x_pos * (pb.jx + chi * math.cos(theta)) - pb.y_mom * (pb.jy - chi * math.sin(theta))


@dataclass(frozen=True)
class ZeroEnergyCurve:
    """Zero-energy phase curves above threshold, in barred variables.

    family "xbar": Xb = 0 and Jby = chi sin(theta)
    family "ybar": Yb = 0 and Jbx = -chi cos(theta)
    """

    theta: float
    chi: float
    n_ions_equiv: float

    @property
    def jby(self) -> float:
        return self.chi * math.sin(self.theta)

    @property
    def jbx(self) -> float:
        return -self.chi * math.cos(self.theta)

    def point(self, family: str, free_osc: float, jb_free: float, jz: float = 0.0) -> PhasePoint:
        """Original-frame point on a family; `free_osc`, `jb_free` are the unconstrained coordinates."""
        if family == "xbar":
            pb = PhasePoint(0.0, free_osc, jb_free, self.jby, jz)
        elif family == "ybar":
            pb = PhasePoint(free_osc, 0.0, self.jbx, jb_free, jz)
        else:
            raise ValueError(f"unknown family {family!r}")
        return inverse_canonical_transform(pb, self.theta)


def zero_energy_curve(chi: float, n_ions_equiv: float) -> ZeroEnergyCurve:
    """Curve joining the threshold fixed point: cos(theta) = N Omega / 2E = 1/x."""
    x = 2 * chi / n_ions_equiv
    if x < 1 and not math.isclose(x, 1.0, abs_tol=1e-12):
        raise BelowThreshold(f"x = {x:.6g} < 1: use fixed_point below threshold")
    return ZeroEnergyCurve(theta=math.acos(min(1.0, 1 / x)), chi=chi, n_ions_equiv=n_ions_equiv)


def euler_path(p0: PhasePoint, chi: float, dt: float, n_steps: int) -> np.ndarray:
    """Fixed-step explicit Euler; the gamma = 0 limit of sde_integrate."""
    out = np.empty((n_steps + 1, 5))
    out[0] = p0.as_array()
    for k in range(n_steps):
        out[k + 1] = out[k] + dt * _rhs(out[k], chi)
    return out


@dataclass
class EnsembleStats:
    t: np.ndarray
    mean_x: np.ndarray
    mean_y: np.ndarray
    var_x: np.ndarray
    var_y: np.ndarray
    n_traj: int
    paths: np.ndarray | None = None  # (n_traj, len(t), 5) when requested

    @property
    def stderr_x(self) -> np.ndarray:
        """Standard error of mean_x."""
        return np.sqrt(self.var_x / self.n_traj)

    @property
    def stderr_y(self) -> np.ndarray:
        return np.sqrt(self.var_y / self.n_traj)

    @property
    def var_stderr_x(self) -> np.ndarray:
        """Standard error of var_x for Gaussian samples."""
        return self.var_x * math.sqrt(2 / max(self.n_traj - 1, 1))

    @property
    def var_stderr_y(self) -> np.ndarray:
        return self.var_y * math.sqrt(2 / max(self.n_traj - 1, 1))


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for trajectory `index`, keyed by (seed, index)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


def sde_integrate(
    p0: PhasePoint, cfg: SweepConfig, block: int = 256, keep_paths: bool = False
) -> EnsembleStats:
    """Euler-Maruyama ensemble with noise sqrt(gamma) dW on X and Y.

    Each trajectory draws its increments from its own Philox stream, so
    results do not depend on `block`.  With freeze_spin the spin is held at
    zero, leaving pure oscillator diffusion.
    """
    if not cfg.dt > 0:
        raise ValueError(f"dt must be > 0, got {cfg.dt}")
    n_steps = int(round(cfg.t_end / cfg.dt))
    if n_steps < 1:
        raise ValueError("t_end must cover at least one step")
    stride = max(1, n_steps // (cfg.n_samples - 1))
    sample_steps = np.arange(0, n_steps + 1, stride)
    if sample_steps[-1] != n_steps:
        sample_steps = np.append(sample_steps, n_steps)
    n_s = len(sample_steps)
    sums = np.zeros((2, n_s))
    sq_sums = np.zeros((2, n_s))
    paths = np.empty((cfg.n_traj, n_s, 5)) if keep_paths else None
    amp = math.sqrt(cfg.gamma * cfg.dt)
    start = p0.as_array()
    if cfg.freeze_spin:
        start[2:] = 0.0

    for b0 in range(0, cfg.n_traj, block):
        idx = range(b0, min(b0 + block, cfg.n_traj))
        m = len(idx)
        if cfg.gamma > 0:
            noise = np.stack([trajectory_rng(cfg.seed, i).standard_normal((n_steps, 2)) for i in idx], axis=-1)
        state = np.repeat(start[:, None], m, axis=1)
        rec = np.empty((n_s, 5, m))
        rec[0] = state
        s_i = 1
        for k in range(n_steps):
            drift = _rhs(state, cfg.chi)
            if cfg.freeze_spin:
                drift[2:] = 0.0
            state = state + cfg.dt * drift
            if cfg.gamma > 0:
                state[0] += amp * noise[k, 0]
                state[1] += amp * noise[k, 1]
            if s_i < n_s and k + 1 == sample_steps[s_i]:
                rec[s_i] = state
                s_i += 1
        sums += rec[:, :2, :].sum(axis=2).T
        sq_sums += (rec[:, :2, :] ** 2).sum(axis=2).T
        if keep_paths:
            paths[b0 : b0 + m] = rec.transpose(2, 0, 1)

    n = cfg.n_traj
    mean = sums / n
    var = (sq_sums - n * mean**2) / max(n - 1, 1)
    var = np.maximum(var, 0.0)
    return EnsembleStats(
        t=sample_steps * cfg.dt,
        mean_x=mean[0],
        mean_y=mean[1],
        var_x=var[0],
        var_y=var[1],
        n_traj=n,
        paths=paths,
    )
