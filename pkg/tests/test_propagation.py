import numpy as np
import pytest
import scipy.integrate
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from qsl_lab.errors import InvalidStepCount, NumericError
from qsl_lab.linalg import KET_0, KET_PLUS, PAULI_X, PAULI_Z, op_norm, random_state
from qsl_lab.propagation import (build_generators, naive_overlap, orthogonalization_time, propagate_closed,
                                 propagate_open)
from qsl_lab.schedules import (constant, dephasing_liouvillian, driven_qubit, landau_zener, ramp_z,
                               random_fourier, unitary_liouvillian)
from qsl_lab.settings import hbar_scope


def ode_reference(h, psi0, tau, hbar=1.0):
    """Independent solution of the Schrodinger equation with an adaptive RK solver."""
    def f(t, y):
        return (-1j / hbar) * (h(t) @ y)
    sol = scipy.integrate.solve_ivp(f, (0, tau), np.asarray(psi0, complex), method="DOP853",
                                    rtol=1e-12, atol=1e-13)
    return sol.y[:, -1]


def test_sz_plus_becomes_orthogonal_at_quarter_period():
    traj = propagate_closed(constant(PAULI_Z, np.pi / 2), KET_PLUS, 64)
    assert abs(np.vdot(KET_PLUS, traj.states[-1])) < 1e-12
    np.testing.assert_allclose(traj.states[-1], [-1j / np.sqrt(2), 1j / np.sqrt(2)], atol=1e-14)


def test_zero_hamiltonian_is_identity(rng):
    psi = random_state(4, rng)
    traj = propagate_closed(constant(np.zeros((4, 4)), 2.0), psi, 17)
    np.testing.assert_allclose(traj.states, np.broadcast_to(psi, traj.states.shape), atol=0)
    np.testing.assert_allclose(traj.rho_dots, 0, atol=0)


def test_closed_trajectory_shapes_and_unitarity():
    traj = propagate_closed(driven_qubit(1, 2, 3, 2.0), KET_0, 100)
    assert traj.states.shape == (101, 2) and traj.propagators.shape == (101, 2, 2)
    assert traj.closed and traj.steps == 100 and traj.tau == 2.0 and traj.dim == 2
    np.testing.assert_allclose(np.linalg.norm(traj.states, axis=1), 1, atol=1e-13)
    for u in traj.propagators[::10]:
        assert op_norm(u.conj().T @ u - np.eye(2)) < 1e-12


def test_closed_matches_ode_solver():
    h = driven_qubit(1.0, 2.0, 3.0, 2.0)
    traj = propagate_closed(h, KET_0, 8192)
    assert np.linalg.norm(traj.states[-1] - ode_reference(h, KET_0, 2.0)) < 1e-6


def test_midpoint_is_second_order():
    h = driven_qubit(1.0, 2.0, 3.0, 2.0)
    ref = propagate_closed(h, KET_0, 2**14).states[-1]
    errs = [np.linalg.norm(propagate_closed(h, KET_0, n).states[-1] - ref) for n in (16, 32, 64, 128)]
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all((ratios > 3.5) & (ratios < 4.5)), ratios


def test_rk4_is_fourth_order():
    lv = unitary_liouvillian(driven_qubit(1.0, 2.0, 3.0, 2.0))
    rho0 = np.outer(KET_0, KET_0.conj())
    ref = propagate_open(lv, rho0, 4096).states[-1]
    errs = [op_norm(propagate_open(lv, rho0, n).states[-1] - ref) for n in (32, 64, 128)]
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all((ratios > 13) & (ratios < 19)), ratios


def test_open_and_closed_agree_for_unitary_dynamics():
    h = driven_qubit(1.0, 2.0, 3.0, 2.0)
    closed = propagate_closed(h, KET_0, 8192)
    opened = propagate_open(unitary_liouvillian(h), np.outer(KET_0, KET_0.conj()), 8192)
    diff = op_norm(closed.density_matrices()[-1] - opened.states[-1])
    assert diff <= 1e-7


def test_open_fidelity_for_sz_plus():
    lv = unitary_liouvillian(constant(PAULI_Z, np.pi / 4))
    rho0 = np.outer(KET_PLUS, KET_PLUS.conj())
    traj = propagate_open(lv, rho0, 1000)
    assert np.real(np.trace(rho0 @ traj.states[-1])) == pytest.approx(0.5, abs=1e-10)


def test_maximally_mixed_state_is_stationary():
    lv = dephasing_liouvillian(driven_qubit(1.0, 2.0, 3.0, 1.0), 0.3)
    traj = propagate_open(lv, np.eye(2) / 2, 200)
    np.testing.assert_allclose(traj.states, np.broadcast_to(np.eye(2) / 2, traj.states.shape), atol=1e-15)


def test_open_trajectory_keeps_trace_and_hermiticity():
    lv = dephasing_liouvillian(driven_qubit(1.0, 2.0, 3.0, 2.0), lambda t: 0.4 * np.cos(2 * t))
    traj = propagate_open(lv, np.outer(KET_PLUS, KET_PLUS.conj()), 500)
    np.testing.assert_allclose(np.trace(traj.states, axis1=1, axis2=2), 1, atol=1e-12)
    np.testing.assert_allclose(traj.states, np.swapaxes(traj.states, 1, 2).conj(), atol=0)


def test_step_count_validation():
    h = constant(PAULI_Z, 1.0)
    for bad in (0, -3, 2.5):
        with pytest.raises(InvalidStepCount):
            propagate_closed(h, KET_0, bad)
    with pytest.raises(NumericError):
        propagate_closed(h, np.array([1.0, 1.0]), 10)
    with pytest.raises(NumericError):
        propagate_closed(h, np.array([1.0, 0, 0]), 10)


def test_hbar_rescaling_is_equivalent():
    h1 = driven_qubit(1.0, 2.0, 3.0, 1.5)
    h2 = driven_qubit(2.0, 4.0, 3.0, 1.5)
    a = propagate_closed(h1, KET_0, 256)
    with hbar_scope(2.0):
        b = propagate_closed(h2, KET_0, 256)
    np.testing.assert_allclose(a.states, b.states, atol=1e-13)
    np.testing.assert_allclose(a.rho_dots, b.rho_dots, atol=1e-13)


def test_rho_dot_matches_liouvillian():
    h = random_fourier(5, 2, 1.0, dim=3)
    traj = propagate_closed(h, random_state(3, np.random.default_rng(1)), 50)
    lv = unitary_liouvillian(h)
    rhos = traj.density_matrices()
    for k in (0, 17, 50):
        np.testing.assert_allclose(traj.rho_dots[k], lv(traj.times[k], rhos[k]), atol=1e-13)


def test_singular_values_match_svd():
    traj = propagate_closed(random_fourier(9, 3, 1.3, dim=5), random_state(5, np.random.default_rng(2)), 40)
    np.testing.assert_allclose(traj.singular_values, np.linalg.svd(traj.rho_dots, compute_uv=False), atol=1e-12)


def test_generators_for_constant_hamiltonian():
    h0 = np.array([[0.3, 0.1], [0.1, -0.2]])
    h = constant(h0, 1.0)
    traj = propagate_closed(h, KET_0, 64)
    gen = build_generators(h, traj.propagators[-1])
    np.testing.assert_allclose(gen.j_naive, h0, atol=1e-14)
    np.testing.assert_allclose(gen.omega1, gen.j_naive)
    np.testing.assert_allclose(gen.omega2, 0, atol=1e-15)
    np.testing.assert_allclose(gen.omega_exact, h0, atol=1e-12)


@pytest.mark.parametrize("make", [lambda: ramp_z(1.0, 0.5, 1.2), lambda: constant(0.7 * PAULI_X, 0.9)])
def test_generators_for_commuting_families(make):
    h = make()
    traj = propagate_closed(h, KET_PLUS, 2048)
    gen = build_generators(h, traj.propagators[-1])
    np.testing.assert_allclose(gen.omega2, 0, atol=1e-14)
    assert op_norm(gen.omega_exact - gen.omega1) < 1e-9


def test_ramp_generator_integral():
    gen = build_generators(ramp_z(1.0, 0.5, 2.0), np.eye(2))
    np.testing.assert_allclose(gen.j_naive, 3.0 * PAULI_Z, atol=1e-13)
    np.testing.assert_allclose(gen.naive_phases, [-3.0, 3.0], atol=1e-13)


def test_second_magnus_term_against_nested_quadrature():
    h = landau_zener(2.0, 1.0, 1.0)
    gen = build_generators(h, np.eye(2))
    # [H(t1), H(t2)] = v g (t1 - t2) [sz, sx] = 2i v g (t1 - t2) sy; the double integral of t1 - t2 is tau^3/6
    sy = np.array([[0, -1j], [1j, 0]])
    expected = -0.5j * 2j * 2.0 * 1.0 * (1 / 6) * sy
    np.testing.assert_allclose(gen.omega2, expected, atol=3e-5)


def test_exact_generator_reproduces_propagator():
    h = driven_qubit(1.0, 2.0, 3.0, 2.0)
    u = propagate_closed(h, KET_0, 512).propagators[-1]
    for branch in ("principal", "nonnegative"):
        gen = build_generators(h, u, branch)
        assert op_norm(scipy.linalg.expm(-1j * gen.omega_exact) - u) < 1e-10
    nn = build_generators(h, u, "nonnegative")
    assert np.all(nn.exact_phases >= 0) and np.all(nn.exact_phases < 2 * np.pi)


def test_magnus_truncation_error_decreases_with_tau():
    # documents the observed orders: about 2^3 with one term and about 2^5 with two
    errs1, errs2 = [], []
    for tau in (0.4, 0.2, 0.1):
        h = landau_zener(2.0, 1.0, tau)
        gen = build_generators(h, propagate_closed(h, KET_0, 8192).propagators[-1])
        errs1.append(op_norm(gen.omega_exact - gen.omega1))
        errs2.append(op_norm(gen.omega_exact - gen.omega1 - gen.omega2))
    r1 = np.array(errs1[:-1]) / np.array(errs1[1:])
    r2 = np.array(errs2[:-1]) / np.array(errs2[1:])
    assert np.all((r1 > 6) & (r1 < 10)), r1
    assert np.all((r2 > 24) & (r2 < 44)), r2


def test_naive_overlap_landau_zener_frozen_values():
    res = naive_overlap(landau_zener(2.0, 1.0, 1.0), KET_0, 4096)
    h = landau_zener(2.0, 1.0, 1.0)
    lhs_oracle = abs(np.vdot(KET_0, ode_reference(h, KET_0, 1.0)))
    rhs_oracle = abs(np.vdot(KET_0, scipy.linalg.expm(-1j * (PAULI_Z + PAULI_X)) @ KET_0))
    assert res.lhs == pytest.approx(lhs_oracle, abs=1e-7)
    assert res.rhs == pytest.approx(rhs_oracle, abs=1e-12)
    assert res.rhs == pytest.approx(abs(np.cos(np.sqrt(2)) - 1j * np.sin(np.sqrt(2)) / np.sqrt(2)), abs=1e-12)
    assert res.gap == pytest.approx(0.0035048, abs=2e-6)
    assert res.gap > 1e-3


def test_naive_overlap_driven_qubit_gap():
    assert naive_overlap(driven_qubit(1.0, 2.0, 3.0, 2.0), KET_0, 4096).gap > 0.1


@pytest.mark.parametrize("make,psi", [(lambda: constant(PAULI_Z, 1.3), KET_PLUS),
                                      (lambda: ramp_z(1.0, 0.5, 1.7), KET_PLUS)])
def test_naive_overlap_exact_for_commuting(make, psi):
    assert naive_overlap(make(), psi, 4096).gap < 1e-9


def test_orthogonalization_time_sz_plus():
    t = orthogonalization_time(constant(PAULI_Z, 3.0), KET_PLUS, 300)
    assert t == pytest.approx(np.pi / 2, abs=1e-9)


def test_orthogonalization_time_none_for_eigenstate():
    assert np.isnan(orthogonalization_time(constant(PAULI_Z, 3.0), KET_0, 100))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1), st.floats(0.1, 2.0), st.integers(1, 64))
def test_closed_propagation_preserves_norm(d, seed, tau, steps):
    rng = np.random.default_rng(seed)
    h = random_fourier(int(rng.integers(2**31)), 2, tau, dim=d)
    traj = propagate_closed(h, random_state(d, rng), steps)
    np.testing.assert_allclose(np.linalg.norm(traj.states, axis=1), 1, atol=1e-12)
    np.testing.assert_allclose(np.trace(traj.rho_dots, axis1=1, axis2=2), 0, atol=1e-11 * max(1, d))
