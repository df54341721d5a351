import warnings

import numpy as np
import pytest

from tcion.fock_space import build_boson_operators
from tcion.lindblad import (
    AccuracyError,
    DensityOp,
    HeatingParams,
    TruncationError,
    dissipator,
    evolve_master,
    master_rhs,
    required_n_max,
)
from tcion.model import ModelParams, ProductSpace, build_hamiltonian


def _random_density(rng, dim):
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = m @ m.conj().T
    return rho / np.trace(rho)


def test_heating_params_validation():
    with pytest.raises(ValueError):
        HeatingParams(gamma=-0.1, coupling=1.0)
    assert HeatingParams(gamma=0.1, coupling=0.0).default_dt == pytest.approx(1e-2)
    assert HeatingParams(gamma=0.1, coupling=2.0, drive=0.5).default_dt == pytest.approx(5e-4)


def test_dissipator_identity():
    rng = np.random.default_rng(0)
    rho = _random_density(rng, 5)
    np.testing.assert_allclose(dissipator(np.eye(5), rho), 0, atol=1e-15)


def test_dissipator_single_phonon():
    b = build_boson_operators(3)
    rho = np.zeros((4, 4), dtype=complex)
    rho[1, 1] = 1
    expected = np.zeros((4, 4))
    expected[0, 0], expected[1, 1] = 2, -2
    np.testing.assert_allclose(dissipator(b.a, rho), expected, atol=1e-15)


def test_dissipator_traceless():
    rng = np.random.default_rng(1)
    b = build_boson_operators(12)
    for _ in range(5):
        m = rng.normal(size=(13, 13)) + 1j * rng.normal(size=(13, 13))
        rho = m + m.conj().T
        assert abs(np.trace(dissipator(b.a, rho))) <= 1e-12
        assert abs(np.trace(dissipator(b.adag, rho))) <= 1e-12


def test_rhs_vanishes_on_eigenprojector():
    space = ProductSpace.build(2, 8)
    hp = HeatingParams(gamma=0.0, coupling=1.0)
    h = build_hamiltonian(ModelParams(2, 1.0), 8, space)
    _, vecs = np.linalg.eigh(h)
    v = vecs[:, 7]
    out = master_rhs(np.outer(v, v.conj()), hp, space)
    assert np.max(np.abs(out)) <= 1e-12


def test_rhs_heating_rate():
    space = ProductSpace.build(1, 10)
    hp = HeatingParams(gamma=0.1, coupling=0.0)
    w = np.outer(space.ground_state(), space.ground_state().conj())
    rate = np.real(np.trace(space.n @ master_rhs(w, hp, space)))
    assert rate == pytest.approx(0.1, abs=1e-14)


def test_rhs_hermitian_and_traceless():
    rng = np.random.default_rng(2)
    space = ProductSpace.build(2, 6)
    hp = HeatingParams(gamma=0.3, coupling=0.8)
    w = _random_density(rng, space.total_dim)
    out = master_rhs(DensityOp(w), hp, space)
    assert np.max(np.abs(out - out.conj().T)) <= 1e-12
    assert abs(np.trace(out)) <= 1e-12


def _rate_matrix(gamma, n_max):
    m = np.zeros((n_max + 1, n_max + 1))
    for n in range(n_max + 1):
        up = gamma * (n + 1) if n < n_max else 0.0  # a^dag annihilates the top level
        down = gamma * n
        m[n, n] -= up + down
        if n < n_max:
            m[n + 1, n] += up
        if n > 0:
            m[n - 1, n] += down
    return m


def test_three_level_rate_bookkeeping():
    gamma = 0.1
    b = build_boson_operators(2)
    m = _rate_matrix(gamma, 2)
    for p in ([1, 0, 0], [0, 1, 0], [0.2, 0.5, 0.3]):
        rho = np.diag(p).astype(complex)
        out = 0.5 * gamma * (dissipator(b.a, rho) + dissipator(b.adag, rho))
        np.testing.assert_allclose(np.diag(out).real, m @ np.array(p), atol=1e-15)
        np.testing.assert_allclose(out - np.diag(np.diag(out)), 0, atol=1e-15)
    # the same rates through the full product-space right-hand side
    space = ProductSpace.build(1, 2)
    hp = HeatingParams(gamma=gamma, coupling=0.0)
    w = np.kron(np.diag([1.0, 0.0]), np.diag([0.2, 0.5, 0.3])).astype(complex)
    np.testing.assert_allclose(np.diag(master_rhs(w, hp, space)).real[:3], m @ [0.2, 0.5, 0.3], atol=1e-15)


def test_heating_law():
    space = ProductSpace.build(1, 20)
    hp = HeatingParams(gamma=0.1, coupling=0.0)
    run = evolve_master(DensityOp.from_state(space.ground_state()), hp, space, t_end=1.0)
    assert run.n_mean[-1] == pytest.approx(0.1, abs=1e-6)
    assert np.max(np.abs(run.a_mean)) <= 1e-10
    assert run.trace_drift <= 1e-9
    assert run.min_eig_excursion >= -1e-8


def test_heating_linear_fit():
    space = ProductSpace.build(1, 20)
    hp = HeatingParams(gamma=0.1, coupling=0.0)
    run = evolve_master(DensityOp.from_state(space.ground_state()), hp, space, t_end=5.0)
    slope, intercept = np.polyfit(run.t, run.n_mean, 1)
    assert slope == pytest.approx(0.1, rel=0.01)
    assert abs(intercept) <= 1e-4


def test_unitary_limit_keeps_purity():
    rng = np.random.default_rng(4)
    space = ProductSpace.build(2, 20)
    hp = HeatingParams(gamma=0.0, coupling=1.0)
    # a mixed start inside the low-excitation block
    w0 = np.zeros((space.total_dim,) * 2, dtype=complex)
    low = [i * space.fock_dim + k for i in range(space.spin_dim) for k in range(3)]
    w0[np.ix_(low, low)] = _random_density(rng, len(low))
    run = evolve_master(DensityOp(w0), hp, space, t_end=1.0, track_min_eig=False)
    assert np.max(np.abs(run.purity - run.purity[0])) <= 1e-8
    assert run.purity[0] < 1
    assert DensityOp(run.final.matrix).hermiticity_error <= 1e-10


def test_truncation_refused():
    space = ProductSpace.build(1, 20)
    hp = HeatingParams(gamma=0.1, coupling=0.0)
    with pytest.raises(TruncationError) as info:
        evolve_master(DensityOp.from_state(space.ground_state()), hp, space, t_end=100.0)
    assert info.value.required_n_max == required_n_max(0.0, 0.1, 100.0) == 40


def test_unstable_step_reported():
    space = ProductSpace.build(2, 20)
    hp = HeatingParams(gamma=0.0, coupling=1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        with pytest.raises(AccuracyError):
            # |j,+j> x |0> is not stationary, unlike the zero mode |j,-j> x |0>
            start = space.product_state(np.eye(space.spin_dim)[-1], space.boson.vacuum())
            evolve_master(DensityOp.from_state(start), hp, space, t_end=400.0, dt=2.0, track_min_eig=False)


def test_density_op_helpers():
    space = ProductSpace.build(1, 3)
    d = DensityOp.from_state(space.ground_state())
    assert d.trace == pytest.approx(1.0)
    assert d.purity == pytest.approx(1.0)
    assert d.min_eigenvalue == pytest.approx(0.0, abs=1e-15)
    assert d.hermiticity_error == 0
