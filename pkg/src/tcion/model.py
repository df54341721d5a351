"""Driven Tavis-Cummings Hamiltonian on the spin (x) boson product space.

Physical form (hbar = 1):   H = Omega (a J+ + a^dag J-) + E (a + a^dag)
Scaled form (H / sqrt(2) Omega):   H = X Jx - Y Jy + chi X,   chi = E / Omega
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg

from .fock_space import BosonOperators, TruncationWarning, build_boson_operators
from .spin_algebra import SpinOperators, build_spin_operators


class Regime(enum.Enum):
    BELOW = "below"
    CRITICAL = "critical"
    ABOVE = "above"


def classify(x: float) -> Regime:
    if math.isclose(x, 1.0, rel_tol=0.0, abs_tol=1e-12):
        return Regime.CRITICAL
    return Regime.BELOW if x < 1.0 else Regime.ABOVE


@dataclass(frozen=True)
class ModelParams:
    n_ions: int
    coupling: float
    drive: float = 0.0

    def __post_init__(self):
        if int(self.n_ions) != self.n_ions or self.n_ions < 1:
            raise ValueError(f"n_ions must be a positive integer, got {self.n_ions!r}")
        if not self.coupling > 0:
            raise ValueError(f"coupling must be > 0, got {self.coupling}")
        if not self.drive >= 0:
            raise ValueError(f"drive must be >= 0, got {self.drive}")

    @classmethod
    def from_scaled(cls, n_ions: int, x: float, coupling: float = 1.0) -> "ModelParams":
        """Parameters with scaled drive x = 2E/(N Omega)."""
        return cls(n_ions=n_ions, coupling=coupling, drive=x * n_ions * coupling / 2)

    @property
    def chi(self) -> float:
        return self.drive / self.coupling

    @property
    def x(self) -> float:
        return 2 * self.chi / self.n_ions

    @property
    def regime(self) -> Regime:
        return classify(self.x)


@dataclass(frozen=True)
class ProductSpace:
    """Spin (x) boson space; composite index = spin_index * fock_dim + fock_index."""

    spin: SpinOperators
    boson: BosonOperators

    @classmethod
    def build(cls, n_ions: int, n_max: int) -> "ProductSpace":
        return cls(build_spin_operators(n_ions), build_boson_operators(n_max))

    @property
    def spin_dim(self) -> int:
        return self.spin.dim

    @property
    def fock_dim(self) -> int:
        return self.boson.dim

    @property
    def total_dim(self) -> int:
        return self.spin_dim * self.fock_dim

    def embed_spin(self, op: np.ndarray) -> np.ndarray:
        return np.kron(op, np.eye(self.fock_dim))

    def embed_boson(self, op: np.ndarray) -> np.ndarray:
        return np.kron(np.eye(self.spin_dim), op)

    def product_state(self, spin_state: np.ndarray, boson_state: np.ndarray) -> np.ndarray:
        return np.kron(spin_state, boson_state)

    def ground_state(self) -> np.ndarray:
        """|j, -j> (x) |0>."""
        psi = np.zeros(self.total_dim, dtype=complex)
        psi[0] = 1.0
        return psi

    # embedded operators, built on first use
    @cached_property
    def a(self) -> np.ndarray:
        return self.embed_boson(self.boson.a)

    @cached_property
    def adag(self) -> np.ndarray:
        return self.embed_boson(self.boson.adag)

    @cached_property
    def x_quad(self) -> np.ndarray:
        return self.embed_boson(self.boson.x)

    @cached_property
    def y_quad(self) -> np.ndarray:
        return self.embed_boson(self.boson.y)

    @cached_property
    def n(self) -> np.ndarray:
        return self.embed_boson(self.boson.n)

    @cached_property
    def jp(self) -> np.ndarray:
        return self.embed_spin(self.spin.jp)

    @cached_property
    def jm(self) -> np.ndarray:
        return self.embed_spin(self.spin.jm)

    @cached_property
    def jx(self) -> np.ndarray:
        return self.embed_spin(self.spin.jx)

    @cached_property
    def jy(self) -> np.ndarray:
        return self.embed_spin(self.spin.jy)

    @cached_property
    def jz(self) -> np.ndarray:
        return self.embed_spin(self.spin.jz)

    @cached_property
    def interaction(self) -> np.ndarray:
        """a J+ + a^dag J-."""
        return np.kron(self.spin.jp, self.boson.a) + np.kron(self.spin.jm, self.boson.adag)

    @cached_property
    def drive_term(self) -> np.ndarray:
        """a + a^dag."""
        return self.embed_boson(self.boson.a + self.boson.adag)

    @cached_property
    def fock_parity(self) -> np.ndarray:
        """Fock number mod 2 for each composite basis index."""
        return np.tile(np.arange(self.fock_dim) % 2, self.spin_dim)

    def fock_tail(self, psi: np.ndarray, n_levels: int | None = None) -> float:
        """Probability carried by the top Fock levels of a pure state."""
        if n_levels is None:
            n_levels = max(2, self.fock_dim // 10)
        amps = np.asarray(psi).reshape(self.spin_dim, self.fock_dim)
        return float(np.sum(np.abs(amps[:, -n_levels:]) ** 2))


def _space_for(params: ModelParams, n_max: int, space: ProductSpace | None) -> ProductSpace:
    if space is None:
        return ProductSpace.build(params.n_ions, n_max)
    if space.spin.n_ions != params.n_ions or space.boson.n_max != n_max:
        raise ValueError("ProductSpace does not match n_ions / n_max")
    return space


def build_hamiltonian(params: ModelParams, n_max: int, space: ProductSpace | None = None) -> np.ndarray:
    """H = Omega (a J+ + a^dag J-) + E (a + a^dag), hbar = 1."""
    space = _space_for(params, n_max, space)
    return params.coupling * space.interaction + params.drive * space.drive_term


def build_scaled_hamiltonian(
    params: ModelParams, n_max: int, space: ProductSpace | None = None
) -> np.ndarray:
    """H = X Jx - Y Jy + chi X, the physical Hamiltonian divided by sqrt(2) Omega."""
    space = _space_for(params, n_max, space)
    s, b = space.spin, space.boson
    h = np.kron(s.jx, b.x) - np.kron(s.jy, b.y) + params.chi * space.x_quad
    # X Jx - Y Jy is Hermitian analytically; drop the rounding in the upper triangle.
    return 0.5 * (h + h.conj().T)


def _single_ion_ops(n_ions: int, site: int) -> tuple[np.ndarray, np.ndarray]:
    # sigma+ = |e><g| with |g> as index 0, matching m = -1/2 first.
    sp = np.array([[0, 0], [1, 0]], dtype=complex)
    eye = np.eye(2, dtype=complex)
    factors = [sp if k == site else eye for k in range(n_ions)]
    out = factors[0]
    for f in factors[1:]:
        out = np.kron(out, f)
    return out, out.conj().T


def dicke_isometry(n_ions: int) -> np.ndarray:
    """Columns are the symmetric product states |j, m>, m ascending (2^N x (N+1))."""
    dim = 2**n_ions
    cols = np.zeros((dim, n_ions + 1))
    for idx in range(dim):
        # bit k set means ion k excited; excitation count = m + j
        cols[idx, bin(idx).count("1")] = 1.0
    return cols / np.linalg.norm(cols, axis=0)


def symmetric_subspace_oracle(params: ModelParams, n_max: int) -> float:
    """Max-abs residual between the per-ion Hamiltonian restricted to the
    symmetric subspace and the collective Hamiltonian.

    Brute-force check for N <= 3 only.
    """
    n_ions = params.n_ions
    if n_ions > 3:
        raise ValueError("symmetric_subspace_oracle is limited to n_ions <= 3")
    if n_max > 20:
        raise ValueError("symmetric_subspace_oracle is limited to n_max <= 20")
    boson = build_boson_operators(n_max)
    h_full = np.zeros((2**n_ions * boson.dim,) * 2, dtype=complex)
    for site in range(n_ions):
        sp, sm = _single_ion_ops(n_ions, site)
        h_full += params.coupling * (np.kron(sp, boson.a) + np.kron(sm, boson.adag))
    h_full += params.drive * np.kron(np.eye(2**n_ions), boson.a + boson.adag)
    # The bit ordering of dicke_isometry puts ion 0 in the most significant bit,
    # matching np.kron factor order above.
    v = np.kron(dicke_isometry(n_ions), np.eye(boson.dim))
    reduced = v.conj().T @ h_full @ v
    h_coll = build_hamiltonian(params, n_max)
    return float(np.max(np.abs(reduced - h_coll)))


class ContinuationError(RuntimeError):
    """Overlap continuation lost the tracked state.

    `partial` holds the points tracked successfully before the failure.
    """

    def __init__(self, x: float, overlap: float, partial: list | None = None):
        super().__init__(
            f"zero-state continuation failed at x = {x:.6g} (best overlap {overlap:.3g}); "
            "refine the x grid or raise n_max"
        )
        self.x = x
        self.overlap = overlap
        self.partial = partial or []


class TrackedPoint(NamedTuple):
    params: ModelParams
    state: np.ndarray
    eigenvalue: float
    overlap: float


def chiral_eigh(h: np.ndarray, parity: np.ndarray) -> tuple[np.ndarray, np.ndarray] | None:
    """Eigen-decomposition of a real H that anticommutes with diag((-1)^parity).

    Such an H only couples the two parity classes, H = [[0, C], [C^T, 0]], and
    the SVD C = P S Q^T gives eigenpairs +/-s with vectors (p, +/-q)/sqrt(2);
    unpaired singular vectors are exact zero modes.  Returns None when h does
    not have this structure.
    """
    if np.any(h.imag):
        return None
    hr = h.real
    even = np.flatnonzero(parity % 2 == 0)
    odd = np.flatnonzero(parity % 2 == 1)
    if np.any(hr[np.ix_(even, even)]) or np.any(hr[np.ix_(odd, odd)]):
        return None
    c = hr[np.ix_(even, odd)]
    p_mat, sing, qt = scipy.linalg.svd(c, lapack_driver="gesdd")
    q_mat = qt.T
    k = len(sing)
    dim = hr.shape[0]
    vecs = np.zeros((dim, dim))
    evals = np.zeros(dim)
    root = 1 / np.sqrt(2)
    vecs[np.ix_(even, np.arange(k))] = root * p_mat[:, :k]
    vecs[np.ix_(odd, np.arange(k))] = root * q_mat[:, :k]
    vecs[np.ix_(even, np.arange(k, 2 * k))] = root * p_mat[:, :k]
    vecs[np.ix_(odd, np.arange(k, 2 * k))] = -root * q_mat[:, :k]
    evals[:k] = sing
    evals[k : 2 * k] = -sing
    col = 2 * k
    for idx, basis in ((even, p_mat[:, k:]), (odd, q_mat[:, k:])):
        n_extra = basis.shape[1]
        vecs[np.ix_(idx, np.arange(col, col + n_extra))] = basis
        col += n_extra
    order = np.argsort(evals, kind="stable")
    return evals[order], vecs[:, order]


def _eigh(h: np.ndarray, parity: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    if parity is not None:
        out = chiral_eigh(h, parity)
        if out is not None:
            return out
    if not np.any(h.imag):
        return scipy.linalg.eigh(h.real, driver="evr")
    return scipy.linalg.eigh(h, driver="evr")


def continue_state(
    h: np.ndarray,
    previous: np.ndarray,
    degeneracy_tol: float = 1e-8,
    parity: np.ndarray | None = None,
) -> tuple[np.ndarray, float, float]:
    """One continuation step: the eigenvector of h closest to `previous`.

    When the best eigenvalue is degenerate (within degeneracy_tol times the
    spectral radius), the eigenvector is not unique and the normalized
    projection of `previous` onto that eigenspace is used. Returns
    (state, eigenvalue, overlap).  `parity` enables the chiral solver.
    """
    evals, evecs = _eigh(h, parity)
    overlaps = np.abs(evecs.conj().T @ previous)
    best = int(np.argmax(overlaps))
    scale = max(float(np.max(np.abs(evals))), 1.0)
    cluster = np.abs(evals - evals[best]) <= degeneracy_tol * scale
    basis = evecs[:, cluster]
    proj = basis @ (basis.conj().T @ previous)
    overlap = float(np.linalg.norm(proj))
    return (proj / overlap).astype(complex), float(evals[best]), overlap


class ZeroStateTracker:
    """Incremental overlap continuation of the zero-energy state in x.

    Starts from |j,-j> (x) |0> at E = 0; `advance_to` inserts intermediate
    points so that no x step exceeds `max_step`.
    """

    def __init__(
        self,
        n_ions: int,
        coupling: float,
        n_max: int,
        max_step: float = 0.02,
        min_overlap: float = 0.5,
        degeneracy_tol: float = 1e-8,
        space: ProductSpace | None = None,
        use_chiral: bool = True,
    ):
        self.space = space or ProductSpace.build(n_ions, n_max)
        self.n_max = n_max
        self.coupling = coupling
        self.max_step = max_step
        self.min_overlap = min_overlap
        self.degeneracy_tol = degeneracy_tol
        self.parity = self.space.fock_parity if use_chiral else None
        first = ModelParams(n_ions, coupling, 0.0)
        self.current = TrackedPoint(first, self.space.ground_state(), 0.0, 1.0)

    @property
    def x(self) -> float:
        return self.current.params.x

    def step(self, params: ModelParams) -> TrackedPoint:
        if abs(params.x - self.x) > self.max_step + 1e-12:
            raise ValueError(f"x step {abs(params.x - self.x):.3g} exceeds max_step {self.max_step}")
        h = build_hamiltonian(params, self.n_max, self.space)
        state, eigenvalue, overlap = continue_state(
            h, self.current.state, self.degeneracy_tol, self.parity
        )
        if overlap < self.min_overlap:
            raise ContinuationError(params.x, overlap)
        self.current = TrackedPoint(params, state, eigenvalue, overlap)
        return self.current

    def advance_to(self, x: float) -> TrackedPoint:
        """Track up to scaled drive x; the returned overlap is the product over sub-steps."""
        gap = x - self.x
        if abs(gap) <= 1e-15:
            return self.current
        n_sub = max(1, math.ceil(abs(gap) / self.max_step - 1e-9))
        x0 = self.x
        total = 1.0
        n_ions = self.space.spin.n_ions
        for k in range(1, n_sub + 1):
            xk = x if k == n_sub else x0 + gap * k / n_sub
            total *= self.step(ModelParams.from_scaled(n_ions, xk, self.coupling)).overlap
        self.current = self.current._replace(overlap=total)
        return self.current


def track_zero_state(
    params_sweep: Sequence[ModelParams],
    n_max: int,
    max_step: float = 0.05,
    min_overlap: float = 0.5,
    degeneracy_tol: float = 1e-8,
    leak_tol: float = 1e-6,
) -> list[TrackedPoint]:
    """Follow the zero-energy state from E = 0 along a drive sweep.

    Selection is by overlap with the previous step, not by eigenvalue order:
    above threshold the followed state is not the ground state.
    """
    if not params_sweep:
        return []
    first = params_sweep[0]
    if first.drive != 0:
        raise ValueError("sweep must start at E = 0")
    for prev, cur in zip(params_sweep, params_sweep[1:]):
        if cur.n_ions != first.n_ions or cur.coupling != first.coupling:
            raise ValueError("sweep must keep n_ions and coupling fixed")
        if abs(cur.x - prev.x) > max_step + 1e-12:
            raise ValueError(f"x step {abs(cur.x - prev.x):.3g} exceeds max_step {max_step}")

    tracker = ZeroStateTracker(
        first.n_ions, first.coupling, n_max, max_step, min_overlap, degeneracy_tol
    )
    out = [tracker.current]
    warned = False
    for p in params_sweep[1:]:
        try:
            point = tracker.step(p)
        except ContinuationError as err:
            err.partial = out
            raise
        tail = tracker.space.fock_tail(point.state)
        if tail > leak_tol and not warned:
            warnings.warn(
                f"tracked state has {tail:.2e} probability in the top Fock levels at x = {p.x:.4g}",
                TruncationWarning,
                stacklevel=2,
            )
            warned = True
        out.append(point)
    return out


def sweep_params(n_ions: int, coupling: float, x_values: Sequence[float]) -> list[ModelParams]:
    return [ModelParams.from_scaled(n_ions, float(x), coupling) for x in x_values]


def refine_grid(x_grid: Sequence[float], max_step: float) -> tuple[np.ndarray, list[int]]:
    """Insert points so that no step exceeds max_step.

    Returns the refined grid (starting at 0) and the index of each original
    grid point inside it.
    """
    pts = [0.0]
    where = []
    for x in x_grid:
        x = float(x)
        start = pts[-1]
        if x < start - 1e-12:
            raise ValueError("x grid must be ascending and non-negative")
        gap = x - start
        if gap > 1e-12:
            n_sub = max(1, math.ceil(gap / max_step - 1e-9))
            pts.extend(start + gap * k / n_sub for k in range(1, n_sub))
            pts.append(x)
        where.append(len(pts) - 1)
    return np.array(pts), where
