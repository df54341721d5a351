"""Collective spin operators on the symmetric (Dicke) subspace of N two-level ions.

Basis ordering is |j, m> with m ascending, so index 0 is |j, -j> (all ions in the
ground state) and index N is |j, +j>.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SpinOperators:
    n_ions: int
    j: float
    dim: int
    jp: np.ndarray
    jm: np.ndarray
    jx: np.ndarray
    jy: np.ndarray
    jz: np.ndarray

    @property
    def m(self) -> np.ndarray:
        return np.arange(-self.j, self.j + 1)

    @property
    def identity(self) -> np.ndarray:
        return np.eye(self.dim, dtype=complex)

    def lowest_state(self) -> np.ndarray:
        """Return |j, -j> as a column of the identity."""
        psi = np.zeros(self.dim, dtype=complex)
        psi[0] = 1.0
        return psi


def build_spin_operators(n_ions: int) -> SpinOperators:
    """Build J+, J-, Jx, Jy, Jz for spin j = n_ions/2.

    <j, m+1| J+ |j, m> = sqrt(j(j+1) - m(m+1)).
    """
    if int(n_ions) != n_ions or n_ions < 1:
        raise ValueError(f"n_ions must be a positive integer, got {n_ions!r}")
    n_ions = int(n_ions)
    j = n_ions / 2
    m = np.arange(-j, j + 1)
    ladder = np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1))
    jp = np.diag(ladder, k=-1).astype(complex)
    jm = jp.conj().T.copy()
    jx = 0.5 * (jp + jm)
    jy = -0.5j * (jp - jm)
    jz = np.diag(m).astype(complex)
    for mat in (jp, jm, jx, jy, jz):
        mat.setflags(write=False)
    return SpinOperators(n_ions=n_ions, j=j, dim=n_ions + 1, jp=jp, jm=jm, jx=jx, jy=jy, jz=jz)


def rotation_operator(theta: float, ops: SpinOperators) -> np.ndarray:
    """Return R(theta) = exp(-theta (J+ - J-)) = exp(-2i theta Jy).

    This is a rotation by 2*theta about the y axis.  With this sign,
    R Jz R^dag = cos(2 theta) Jz + sin(2 theta) Jx, equivalently
    R^dag Jz R = cos(2 theta) Jz - sin(2 theta) Jx, so the rotated lowest
    state R|j,-j> has <Jx> = -j sin(2 theta).
    """
    if theta == 0:
        return ops.identity
    # J+ - J- = 2i Jy; exponentiate through the Hermitian Jy.
    evals, evecs = np.linalg.eigh(ops.jy)
    phases = np.exp(-2j * theta * evals)
    return (evecs * phases) @ evecs.conj().T
