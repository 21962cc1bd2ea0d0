import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsl_lab.errors import DimensionMismatch, NonHermitianInput, NonUnitaryInput
from qsl_lab.linalg import (PAULI_X, PAULI_Y, PAULI_Z, KET_PLUS, commutator, expm_skew_hermitian,
                            hermitian_eig, op_norm, random_hermitian, schatten_norms, svd_values, unitary_log)
from qsl_lab.settings import hbar_scope


def charpoly_faddeev_leverrier(a):
    """Characteristic polynomial coefficients, highest degree first, without eigen-solvers."""
    n = a.shape[0]
    coeffs = [1.0 + 0j]
    m = np.zeros_like(a)
    for k in range(1, n + 1):
        m = a @ m + coeffs[-1] * np.eye(n)
        coeffs.append(-np.trace(a @ m) / k)
    return np.array(coeffs)


def test_eig_identity_and_pauli_z():
    np.testing.assert_allclose(hermitian_eig(np.eye(2)).eigenvalues, [1, 1])
    np.testing.assert_allclose(hermitian_eig(PAULI_Z).eigenvalues, [-1, 1])


def test_eig_matches_characteristic_polynomial_roots(rng):
    a = random_hermitian(4, rng)
    roots = np.sort(np.roots(charpoly_faddeev_leverrier(a)).real)
    np.testing.assert_allclose(hermitian_eig(a).eigenvalues, roots, atol=1e-9)


def test_eig_reconstruction_and_orthonormality(rng):
    for d in range(1, 7):
        a = random_hermitian(d, rng, scale=3.0)
        dec = hermitian_eig(a)
        assert op_norm(dec.reconstruct() - a) <= 1e-10 * max(1, op_norm(a))
        v = dec.eigenvectors
        np.testing.assert_allclose(v.conj().T @ v, np.eye(d), atol=1e-12)
        assert np.all(np.diff(dec.eigenvalues) >= 0)


def test_eig_rejects_non_hermitian():
    with pytest.raises(NonHermitianInput):
        hermitian_eig(np.array([[0, 1], [0, 0]]))


def test_eig_symmetrizes_roundoff():
    a = PAULI_X + 1e-15j * np.array([[0, 1], [0, 0]])
    np.testing.assert_allclose(hermitian_eig(a).eigenvalues, [-1, 1], atol=1e-14)


def test_svd_simple_cases():
    np.testing.assert_array_equal(svd_values(np.zeros((3, 3))), [0, 0, 0])
    np.testing.assert_allclose(svd_values(PAULI_X), [1, 1])


def test_svd_of_pure_state_commutator():
    # -i [sz, |+><+|] expanded by hand is [[0, -i], [i, 0]]
    a = -1j * commutator(PAULI_Z, np.outer(KET_PLUS, KET_PLUS.conj()))
    np.testing.assert_allclose(a, [[0, -1j], [1j, 0]], atol=1e-15)
    # brute force: singular values are square roots of the eigenvalues of a^dag a
    gram = a.conj().T @ a
    tr, det = np.trace(gram).real, np.linalg.det(gram).real
    disc = np.sqrt(max(tr**2 / 4 - det, 0))
    oracle = np.sqrt([tr / 2 + disc, tr / 2 - disc])
    np.testing.assert_allclose(svd_values(a), oracle, atol=1e-12)
    np.testing.assert_allclose(svd_values(a), [1, 1], atol=1e-12)


def test_svd_keeps_zeros_for_rank_deficient():
    s = svd_values(np.outer([1, 2, 3], [1, 0, 1]))
    assert s.shape == (3,)
    assert s[1] == pytest.approx(0, abs=1e-14) and s[2] == pytest.approx(0, abs=1e-14)


def test_schatten_norm_ordering_1000_random(rng):
    for _ in range(1000):
        d = int(rng.integers(1, 7))
        a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        op, tr, hs = schatten_norms(a)
        assert op <= hs * (1 + 1e-12) and hs <= tr * (1 + 1e-12)


def taylor_exp(m, terms=20):
    out = np.eye(m.shape[0], dtype=complex)
    term = np.eye(m.shape[0], dtype=complex)
    for k in range(1, terms):
        term = term @ m / k
        out = out + term
    return out


def test_expm_diagonal_and_zero():
    np.testing.assert_allclose(expm_skew_hermitian(PAULI_Z, np.pi), np.diag([np.exp(-1j * np.pi), np.exp(1j * np.pi)]),
                               atol=1e-15)
    np.testing.assert_allclose(expm_skew_hermitian(PAULI_Z, 0.0), np.eye(2), atol=0)


def test_expm_matches_taylor(rng):
    h = random_hermitian(3, rng)
    np.testing.assert_allclose(expm_skew_hermitian(h, 0.1), taylor_exp(-0.1j * h), atol=1e-12)


def test_expm_rejects_non_hermitian():
    with pytest.raises(NonHermitianInput):
        expm_skew_hermitian(np.array([[1, 2], [0, 1]]), 1.0)


def test_unitary_log_identity_both_branches():
    for branch in ("principal", "nonnegative"):
        res = unitary_log(np.eye(3), branch)
        np.testing.assert_array_equal(res.omega, np.zeros((3, 3)))
    assert unitary_log(np.eye(3), "nonnegative").near_branch_cut
    assert not unitary_log(np.eye(3), "principal").near_branch_cut


def test_unitary_log_diagonal():
    u = np.diag(np.exp(-1j * np.array([0.3, 1.1])))
    np.testing.assert_allclose(unitary_log(u, "principal").omega, np.diag([0.3, 1.1]), atol=1e-14)


def test_unitary_log_branches_differ_for_negative_phase():
    u = np.diag(np.exp(-1j * np.array([-0.5, 1.0])))
    np.testing.assert_allclose(np.diag(unitary_log(u, "principal").omega).real, [-0.5, 1.0], atol=1e-14)
    np.testing.assert_allclose(np.diag(unitary_log(u, "nonnegative").omega).real, [2 * np.pi - 0.5, 1.0],
                               atol=1e-14)


def test_unitary_log_flags_branch_cut():
    assert unitary_log(-np.eye(2), "principal").near_branch_cut
    assert not unitary_log(-np.eye(2), "nonnegative").near_branch_cut


def test_unitary_log_scales_with_hbar():
    u = np.diag(np.exp(-1j * np.array([0.3, 1.1])))
    with hbar_scope(2.5):
        np.testing.assert_allclose(np.diag(unitary_log(u).omega).real, [0.75, 2.75], atol=1e-14)


def test_unitary_log_round_trip_driven_qubit():
    from qsl_lab.propagation import propagate_closed
    from qsl_lab.schedules import driven_qubit

    u = propagate_closed(driven_qubit(0.7, 1.3, 2.1, 1.7), np.array([1, 0], complex), 512).propagators[-1]
    for branch in ("principal", "nonnegative"):
        omega = unitary_log(u, branch).omega
        assert op_norm(expm_skew_hermitian(omega, 1.0) - u) <= 1e-10


def test_unitary_log_rejects_non_unitary():
    with pytest.raises(NonUnitaryInput):
        unitary_log(np.diag([1.0, 1.1]))


def test_commutator_pauli_algebra():
    np.testing.assert_array_equal(commutator(PAULI_Z, PAULI_Z), np.zeros((2, 2)))
    np.testing.assert_allclose(commutator(PAULI_X, PAULI_Y), 2j * PAULI_Z)


def test_commutator_elementwise(rng):
    a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    b = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    oracle = np.zeros((4, 4), complex)
    for i in range(4):
        for j in range(4):
            oracle[i, j] = sum(a[i, k] * b[k, j] - b[i, k] * a[k, j] for k in range(4))
    np.testing.assert_allclose(commutator(a, b), oracle, atol=1e-13)


def test_commutator_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        commutator(np.eye(2), np.eye(3))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_expm_group_property(d, seed, s, t):
    h = random_hermitian(d, np.random.default_rng(seed))
    lhs = expm_skew_hermitian(h, s) @ expm_skew_hermitian(h, t)
    assert op_norm(lhs - expm_skew_hermitian(h, s + t)) <= 1e-10


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**32 - 1), st.floats(0.01, 0.9))
def test_log_exp_round_trip_away_from_cut(d, seed, scale):
    h = random_hermitian(d, np.random.default_rng(seed))
    # keep every phase strictly inside (-pi, pi)
    h = h / max(op_norm(h), 1e-12) * scale * np.pi
    res = unitary_log(expm_skew_hermitian(h, 1.0), "principal")
    assert not res.near_branch_cut
    assert op_norm(res.omega - h) <= 1e-10
