"""Dense complex linear algebra on small square matrices.

Operators are plain ``numpy`` arrays of shape ``(d, d)``. Hermiticity and
unitarity are checked at the boundary of each routine instead of being carried
as flags on a wrapper type.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NonHermitianInput, NonUnitaryInput, NumericError
from .settings import resolve_hbar

HERMITIAN_RTOL = 1e-12
UNITARY_ATOL = 1e-10
BRANCH_CUT_ATOL = 1e-9

Branch = Literal["principal", "nonnegative"]


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


@dataclass(frozen=True)
class UnitaryLog:
    """Hermitian generator ``omega`` with ``U = exp(-i omega / hbar)``.

    ``phases`` are the dimensionless eigenphases (eigenvalues of omega over
    hbar) on the requested branch. ``near_branch_cut`` is set when any phase
    sits within ``BRANCH_CUT_ATOL`` of the cut, where the branch choice is
    numerically ambiguous.
    """

    omega: np.ndarray
    phases: np.ndarray
    eigenvectors: np.ndarray
    branch: Branch
    near_branch_cut: bool


def as_square(a, name: str = "A") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be a square matrix, got shape {a.shape}")
    return a


def op_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a, 2)) if a.size else 0.0


def hermiticity_defect(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0


def is_hermitian(a: np.ndarray, rtol: float = HERMITIAN_RTOL) -> bool:
    a = as_square(a)
    return hermiticity_defect(a) <= rtol * max(op_norm(a), 1.0)


def hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.swapaxes(a, -1, -2).conj())


def require_hermitian(a, name: str = "A") -> np.ndarray:
    """Validate and symmetrize a Hermitian input."""
    a = as_square(a, name)
    defect = hermiticity_defect(a)
    if defect > HERMITIAN_RTOL * max(op_norm(a), 1.0):
        raise NonHermitianInput(f"{name} is not Hermitian (max |A - A^dag| = {defect:.3e})")
    return hermitize(a)


def unitarity_defect(u: np.ndarray) -> float:
    return op_norm(u.conj().T @ u - np.eye(u.shape[0]))


def require_unitary(u, name: str = "U") -> np.ndarray:
    u = as_square(u, name)
    defect = unitarity_defect(u)
    if defect > UNITARY_ATOL:
        raise NonUnitaryInput(f"{name} is not unitary (||U^dag U - I|| = {defect:.3e})")
    return u


def hermitian_eig(a) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    a = require_hermitian(a)
    w, v = np.linalg.eigh(a)
    return SpectralDecomposition(w, v)


def svd_values(a) -> np.ndarray:
    """All singular values, descending. Zeros are kept, never truncated."""
    a = as_square(a)
    return np.linalg.svd(a, compute_uv=False)


def schatten_norms(a) -> tuple[float, float, float]:
    """Return ``(operator, trace, Hilbert-Schmidt)`` norms from the singular values."""
    s = svd_values(a)
    return float(s[0]) if s.size else 0.0, float(s.sum()), float(np.sqrt(np.sum(s**2)))


def batch_schatten_norms(stack: np.ndarray) -> np.ndarray:
    """Schatten norms of a stack of matrices, shape ``(n, 3)`` as op/tr/hs."""
    s = np.linalg.svd(stack, compute_uv=False)
    return np.stack([s[:, 0], s.sum(axis=1), np.sqrt(np.sum(s**2, axis=1))], axis=1)


def expm_skew_hermitian(h, scale: float) -> np.ndarray:
    """``exp(-i * scale * H)`` for Hermitian ``H`` via its eigendecomposition."""
    dec = hermitian_eig(h)
    v = dec.eigenvectors
    return (v * np.exp(-1j * scale * dec.eigenvalues)) @ v.conj().T


def batch_expm_skew_hermitian(stack: np.ndarray, scale: float) -> np.ndarray:
    """Unchecked batched form of :func:`expm_skew_hermitian` for hot loops."""
    w, v = np.linalg.eigh(hermitize(stack))
    return (v * np.exp(-1j * scale * w)[:, None, :]) @ np.swapaxes(v, -1, -2).conj()


def unitary_log(u, branch: Branch = "principal", hbar: float | None = None) -> UnitaryLog:
    """Hermitian ``omega`` with ``u = exp(-(i/hbar) omega)``.

    Eigenphases are placed in ``[-pi, pi)`` for ``principal`` and in
    ``[0, 2 pi)`` for ``nonnegative``. The complex Schur form of a normal
    matrix is diagonal, which keeps eigenvectors orthonormal even when
    eigenphases are degenerate.
    """
    if branch not in ("principal", "nonnegative"):
        raise ValueError(f"unknown branch {branch!r}")
    hbar = resolve_hbar(hbar)
    u = require_unitary(u)
    t, z = scipy.linalg.schur(u, output="complex")
    lam = np.diag(t)
    phases = -np.angle(lam)
    if branch == "principal":
        # angle() is in (-pi, pi], so -angle() is already in [-pi, pi)
        near = np.abs(np.abs(phases) - np.pi) < BRANCH_CUT_ATOL
    else:
        phases = np.mod(phases, 2 * np.pi)
        phases[phases >= 2 * np.pi] = 0.0
        near = (phases < BRANCH_CUT_ATOL) | (2 * np.pi - phases < BRANCH_CUT_ATOL)
    omega = hermitize((z * (hbar * phases)) @ z.conj().T)
    return UnitaryLog(omega, phases, z, branch, bool(np.any(near)))


def commutator(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"shapes {a.shape} and {b.shape} are incompatible")
    c = a @ b - b @ a
    if is_hermitian(a) and is_hermitian(b):
        # [A, B] of Hermitian operators is anti-Hermitian
        defect = float(np.max(np.abs(c + c.conj().T))) if c.size else 0.0
        scale = max(op_norm(a) * op_norm(b), 1.0)
        if defect > 1e-10 * scale:
            raise NumericError(f"commutator lost anti-Hermiticity ({defect:.3e})")
    return c


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Hermitian matrix with real and imaginary parts uniform in ``[-scale, scale]``."""
    a = rng.uniform(-scale, scale, (dim, dim)) + 1j * rng.uniform(-scale, scale, (dim, dim))
    return hermitize(a)


def random_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Unitarily invariant random pure state from normalized complex Gaussians."""
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
KET_0 = np.array([1, 0], dtype=complex)
KET_1 = np.array([0, 1], dtype=complex)
KET_PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
