"""Squeezed-rotated product state annihilated by the driven Hamiltonian.

Below threshold (x = 2E/(N Omega) < 1) the zero-energy state is

    S(r) R(theta) |j, -j> (x) |0>,   sin(2 theta) = x,   cos(2 theta) = exp(-2r).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock_space import BosonOperators, SqueezeParams, squeezed_vacuum
from .model import ModelParams, Regime, classify
from .spin_algebra import SpinOperators, rotation_operator


class AboveThresholdError(ValueError):
    """No normalizable product state exists for x > 1."""


@dataclass(frozen=True)
class AnsatzSolution:
    theta: float
    squeeze: SqueezeParams | None  # None at the critical point (r diverges)
    regime: Regime
    x: float

    @property
    def r(self) -> float:
        return math.inf if self.squeeze is None else self.squeeze.r


def solve_ansatz(params: ModelParams) -> AnsatzSolution:
    x = params.x
    regime = classify(x)
    if regime is Regime.ABOVE:
        raise AboveThresholdError(
            f"x = {x:.6g} > 1: the zero-energy state is infinitely squeezed and not normalizable"
        )
    if regime is Regime.CRITICAL:
        return AnsatzSolution(theta=math.pi / 4, squeeze=None, regime=regime, x=x)
    theta = 0.5 * math.asin(x)
    # cos(2 theta) = sqrt(1 - x^2) = exp(-2r)
    r = -0.25 * math.log1p(-x * x)
    return AnsatzSolution(theta=theta, squeeze=SqueezeParams(r), regime=regime, x=x)


def build_ansatz_state(sol: AnsatzSolution, spin: SpinOperators, boson: BosonOperators) -> np.ndarray:
    """(R(theta)|j,-j>) (x) (S(r)|0>) in the spin-major product basis."""
    if sol.regime is not Regime.BELOW:
        raise AboveThresholdError(f"no normalizable ansatz state in the {sol.regime.value} regime")
    spin_part = rotation_operator(sol.theta, spin) @ spin.lowest_state()
    boson_part = squeezed_vacuum(sol.squeeze.r, boson)
    return np.kron(spin_part, boson_part)


def residual(h: np.ndarray, psi: np.ndarray) -> float:
    """||H psi||_2; zero for an exact zero-energy eigenvector."""
    if h.shape[1] != psi.shape[0]:
        raise ValueError(f"dimension mismatch: H is {h.shape}, psi has {psi.shape[0]}")
    return float(np.linalg.norm(h @ psi))


def below_threshold_moments(x: float) -> tuple[float, float, float]:
    return 0.0, -math.sqrt(1 - x * x), -x


def above_threshold_moments(x: float) -> tuple[float, float, float]:
    return -math.sqrt(1 - 1 / (x * x)), 0.0, -1 / x


def analytic_scaled_moments(x: float) -> tuple[float, float, float]:
    """Mean-field (<Jy>, <Jz>, <Jx>) / (N/2) as functions of the scaled drive.

    Below threshold: (0, -sqrt(1 - x^2), -x).
    Above threshold: (-sqrt(1 - 1/x^2), 0, -1/x).  The Jx branch follows from
    the rotated zero-energy curve with cos(theta) = 1/x.
    """
    if x < 0:
        raise ValueError(f"x must be >= 0, got {x}")
    return below_threshold_moments(x) if x <= 1 else above_threshold_moments(x)
