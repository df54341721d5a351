"""Density-matrix evolution with centre-of-mass heating.

    dW/dt = -i Omega [a J+ + a^dag J-, W] + (gamma/2)(D[a] + D[a^dag]) W
    D[A] rho = 2 A rho A^dag - A^dag A rho - rho A^dag A

The drive E (a + a^dag) can be added to the commutator; it is off by default.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import ProductSpace


class TruncationError(ValueError):
    def __init__(self, message: str, required_n_max: int):
        super().__init__(message)
        self.required_n_max = required_n_max


class AccuracyError(RuntimeError):
    pass


@dataclass(frozen=True)
class HeatingParams:
    gamma: float
    coupling: float
    drive: float = 0.0

    def __post_init__(self):
        if not self.gamma >= 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if not self.coupling >= 0:
            raise ValueError(f"coupling must be >= 0, got {self.coupling}")

    @property
    def default_dt(self) -> float:
        rate = max(self.coupling, self.gamma, abs(self.drive))
        return 1e-3 / rate if rate > 0 else 1e-3


@dataclass
class DensityOp:
    matrix: np.ndarray

    @classmethod
    def from_state(cls, psi: np.ndarray) -> "DensityOp":
        psi = np.asarray(psi, dtype=complex)
        return cls(np.outer(psi, psi.conj()))

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    @property
    def purity(self) -> float:
        # tr(W^2) for Hermitian W is the squared Frobenius norm
        return float(np.sum(np.abs(self.matrix) ** 2))

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.hermitian_part())[0])

    def hermitian_part(self) -> np.ndarray:
        return 0.5 * (self.matrix + self.matrix.conj().T)

    @property
    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))


def dissipator(a_op: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """D[A] rho = 2 A rho A^dag - A^dag A rho - rho A^dag A."""
    rho = rho.matrix if isinstance(rho, DensityOp) else rho
    a_dag = a_op.conj().T
    ada = a_dag @ a_op
    return 2 * a_op @ rho @ a_dag - ada @ rho - rho @ ada


@dataclass
class MasterEquation:
    """Precomputed operators for repeated right-hand-side evaluations."""

    space: ProductSpace
    hp: HeatingParams
    include_drive: bool = False
    hamiltonian: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        h = self.hp.coupling * self.space.interaction
        if self.include_drive:
            h = h + self.hp.drive * self.space.drive_term
        self.hamiltonian = h
        a = self.space.a
        ad = self.space.adag
        self._a, self._ad = a, ad
        # D[a] + D[a^dag] = 2 a W a^dag + 2 a^dag W a - {a^dag a + a a^dag, W}
        self._anti = ad @ a + a @ ad

    def rhs(self, w: np.ndarray) -> np.ndarray:
        h = self.hamiltonian
        out = -1j * (h @ w - w @ h)
        if self.hp.gamma:
            a, ad = self._a, self._ad
            diss = 2 * (a @ w @ ad) + 2 * (ad @ w @ a) - self._anti @ w - w @ self._anti
            out = out + 0.5 * self.hp.gamma * diss
        return out


def master_rhs(w, hp: HeatingParams, space: ProductSpace, include_drive: bool = False) -> np.ndarray:
    w = w.matrix if isinstance(w, DensityOp) else w
    return MasterEquation(space, hp, include_drive).rhs(w)


@dataclass
class MasterRun:
    t: np.ndarray
    n_mean: np.ndarray
    a_mean: np.ndarray
    jz_mean: np.ndarray
    trace: np.ndarray
    purity: np.ndarray
    min_eig: np.ndarray
    final: DensityOp

    @property
    def trace_drift(self) -> float:
        return float(np.max(np.abs(self.trace - 1.0)))

    @property
    def min_eig_excursion(self) -> float:
        return float(np.min(self.min_eig))


def required_n_max(n0: float, gamma: float, t_end: float) -> int:
    """Smallest cutoff with <n>(t_end) = n0 + gamma t_end <= n_max / 4."""
    return max(1, math.ceil(4 * (n0 + gamma * t_end)))


def evolve_master(
    w0: DensityOp,
    hp: HeatingParams,
    space: ProductSpace,
    t_end: float,
    dt: float | None = None,
    include_drive: bool = False,
    sample_every: int = 1,
    track_min_eig: bool = True,
    trace_tol: float = 1e-6,
) -> MasterRun:
    """Fixed-step RK4 integration, recording moments every `sample_every` steps.

    Trace and positivity are monitored, never corrected.
    """
    dt = hp.default_dt if dt is None else dt
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    w = np.array(w0.matrix, dtype=complex)
    n_op = space.n
    n0 = float(np.real(np.trace(n_op @ w)))
    need = required_n_max(n0, hp.gamma, t_end)
    if space.boson.n_max < need:
        raise TruncationError(
            f"n_max = {space.boson.n_max} too small: <n>(t_end) ~ {n0 + hp.gamma * t_end:.3g} "
            f"needs n_max >= {need}",
            need,
        )
    eq = MasterEquation(space, hp, include_drive)
    n_steps = int(round(t_end / dt))
    a_op, jz_op = space.a, space.jz

    rows = []

    def record(t, w):
        d = DensityOp(w)
        rows.append(
            (
                t,
                float(np.real(np.trace(n_op @ w))),
                complex(np.trace(a_op @ w)),
                float(np.real(np.trace(jz_op @ w))),
                float(np.real(d.trace)),
                d.purity,
                d.min_eigenvalue if track_min_eig else math.nan,
            )
        )

    record(0.0, w)
    f = eq.rhs
    for k in range(1, n_steps + 1):
        k1 = f(w)
        k2 = f(w + 0.5 * dt * k1)
        k3 = f(w + 0.5 * dt * k2)
        k4 = f(w + dt * k3)
        w = w + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        if k % sample_every == 0 or k == n_steps:
            record(k * dt, w)

    cols = list(zip(*rows))
    run = MasterRun(
        t=np.array(cols[0]),
        n_mean=np.array(cols[1]),
        a_mean=np.array(cols[2]),
        jz_mean=np.array(cols[3]),
        trace=np.array(cols[4]),
        purity=np.array(cols[5]),
        min_eig=np.array(cols[6]),
        final=DensityOp(w),
    )
    # written as `not <=` so a blown-up (NaN) run also fails
    if not run.trace_drift <= trace_tol:
        raise AccuracyError(f"trace drift {run.trace_drift:.2e} exceeds {trace_tol:.0e}; reduce dt")
    return run
