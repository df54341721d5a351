"""Truncated Fock space for the centre-of-mass vibrational mode.

Conventions: hbar = 1, X = (a + a^dag)/sqrt(2), Y = -i(a - a^dag)/sqrt(2), so the
vacuum has <X^2> = <Y^2> = 1/2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np


class TruncationWarning(UserWarning):
    """The Fock cutoff is too small for the requested state."""


@dataclass(frozen=True)
class BosonOperators:
    n_max: int
    a: np.ndarray
    adag: np.ndarray
    x: np.ndarray
    y: np.ndarray
    n: np.ndarray

    @property
    def dim(self) -> int:
        return self.n_max + 1

    @property
    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex)

    def vacuum(self) -> np.ndarray:
        psi = np.zeros(self.dim, dtype=complex)
        psi[0] = 1.0
        return psi


@dataclass(frozen=True)
class SqueezeParams:
    r: float

    def __post_init__(self):
        if not self.r >= 0:
            raise ValueError(f"squeeze magnitude must be >= 0, got {self.r}")

    @property
    def mu(self) -> float:
        return math.cosh(self.r)

    @property
    def nu(self) -> float:
        return math.sinh(self.r)


def build_boson_operators(n_max: int) -> BosonOperators:
    """Ladder, quadrature and number matrices on Fock states 0..n_max.

    The commutator [a, a^dag] is the identity except in the last diagonal
    entry, which is -n_max (truncation artifact).
    """
    if int(n_max) != n_max or n_max < 1:
        raise ValueError(f"n_max must be an integer >= 1, got {n_max!r}")
    n_max = int(n_max)
    a = np.diag(np.sqrt(np.arange(1, n_max + 1)), k=1).astype(complex)
    adag = a.conj().T.copy()
    x = (a + adag) / np.sqrt(2)
    y = -1j * (a - adag) / np.sqrt(2)
    n = np.diag(np.arange(n_max + 1)).astype(complex)
    for mat in (a, adag, x, y, n):
        mat.setflags(write=False)
    return BosonOperators(n_max=n_max, a=a, adag=adag, x=x, y=y, n=n)


def _check_truncation(r: float, ops: BosonOperators, stacklevel: int = 3) -> None:
    if math.sinh(r) ** 2 > ops.n_max / 10:
        warnings.warn(
            f"sinh^2(r) = {math.sinh(r) ** 2:.3g} exceeds n_max/10 = {ops.n_max / 10:.3g}; "
            "squeezed state is poorly truncated",
            TruncationWarning,
            stacklevel=stacklevel,
        )


def _padded_exponential(r: float, dim: int) -> np.ndarray:
    """Top-left dim x dim block of exp((r/2)(a^dag^2 - a^2)) built on 2*dim levels.

    Exponentiating the truncated generator directly lets the cutoff reflect back
    into low Fock rows; doubling the space pushes that artifact out of the block.
    """
    big = build_boson_operators(2 * dim - 1)
    # (a^dag^2 - a^2) is anti-Hermitian; diagonalize K = i(a^dag^2 - a^2) instead.
    k = 1j * (big.adag @ big.adag - big.a @ big.a)
    evals, evecs = np.linalg.eigh(k)
    return (evecs[:dim] * np.exp(-0.5j * r * evals)) @ evecs[:dim].conj().T


def squeeze_operator(r: float, ops: BosonOperators) -> np.ndarray:
    """Return S(r) = exp((r/2)(a^dag^2 - a^2)) on the truncated space.

    With this sign S^dag a S = cosh(r) a + sinh(r) a^dag, away from the cutoff.
    The block of the padded exponential is completed to an exact unitary by a
    QR step, which leaves the well-resolved low columns untouched to rounding.
    """
    if r < 0:
        raise ValueError(f"squeeze magnitude must be >= 0, got {r}")
    _check_truncation(r, ops)
    if r == 0:
        return ops.identity
    q, upper = np.linalg.qr(_padded_exponential(r, ops.dim))
    d = np.diag(upper)
    return q * (d / np.abs(d))


def squeezed_vacuum(r: float, ops: BosonOperators) -> np.ndarray:
    """S(r)|0>, renormalized to unit norm.

    X is anti-squeezed (variance e^{2r}/2) and Y squeezed (variance e^{-2r}/2).
    """
    if r == 0:
        return ops.vacuum()
    if r < 0:
        raise ValueError(f"squeeze magnitude must be >= 0, got {r}")
    _check_truncation(r, ops)
    big = build_boson_operators(2 * ops.dim - 1)
    k = 1j * (big.adag @ big.adag - big.a @ big.a)
    evals, evecs = np.linalg.eigh(k)
    psi = evecs[: ops.dim] @ (np.exp(-0.5j * r * evals) * evecs[0].conj())
    # S|0> has no odd-Fock amplitude; zero the rounding noise there.
    psi[1::2] = 0.0
    return psi / np.linalg.norm(psi)
