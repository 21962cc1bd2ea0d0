"""Time-ordered propagation, Magnus generators, and the naive generator."""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Literal

import numpy as np
import scipy.integrate
import scipy.optimize

from .errors import InvalidStepCount, NumericError
from .linalg import (Branch, batch_expm_skew_hermitian, hermitian_eig, hermitize,
                     require_unitary, unitary_log)
from .schedules import HamiltonianSchedule, LiouvillianSchedule
from .settings import resolve_hbar

Scheme = Literal["midpoint_exponential", "rk4"]

QUADRATURE_NODES = 129


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States on a uniform grid ``0 = t_0 < ... < t_N = tau``.

    Closed trajectories carry pure ``states`` of shape ``(N+1, d)``, the
    accumulated ``propagators`` and the Hamiltonian at each grid point.
    Open trajectories carry density matrices of shape ``(N+1, d, d)``.
    Both record ``rho_dots``, the generator output at each grid point.
    """

    times: np.ndarray
    states: np.ndarray
    rho_dots: np.ndarray
    scheme: Scheme
    hbar: float
    propagators: np.ndarray | None = None
    hamiltonians: np.ndarray | None = None
    label: str = ""

    @property
    def closed(self) -> bool:
        return self.propagators is not None

    @property
    def tau(self) -> float:
        return float(self.times[-1])

    @property
    def steps(self) -> int:
        return len(self.times) - 1

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def density_matrices(self) -> np.ndarray:
        if self.closed:
            return self.states[:, :, None] * self.states.conj()[:, None, :]
        return self.states

    @functools.cached_property
    def singular_values(self) -> np.ndarray:
        """Singular values of rho_dot at each grid point, descending.

        rho_dot is Hermitian for every generator built here, in which case
        its singular values are the absolute eigenvalues.
        """
        r = self.rho_dots
        scale = max(float(np.max(np.abs(r))), 1.0) if r.size else 1.0
        if np.max(np.abs(r - np.swapaxes(r, 1, 2).conj()), initial=0.0) <= 1e-12 * scale:
            return -np.sort(-np.abs(np.linalg.eigvalsh(hermitize(r))), axis=1)
        return np.linalg.svd(r, compute_uv=False)

    def schatten_norms(self) -> np.ndarray:
        """Operator, trace and Hilbert-Schmidt norms of rho_dot per grid point."""
        s = self.singular_values
        return np.stack([s[:, 0], s.sum(axis=1), np.sqrt(np.sum(s**2, axis=1))], axis=1)


@dataclass(frozen=True, eq=False)
class GeneratorBundle:
    """Integrated generators of a schedule over ``[0, tau]``.

    ``j_naive`` is the plain time integral of H (energy x time).
    ``naive_phases`` are its eigenvalues divided by hbar, the dimensionless
    phases of the un-time-ordered exponential. ``omega1`` equals ``j_naive``
    by construction; ``omega2`` is the second Magnus term; ``omega_exact`` is
    the exact generator ``i hbar log U_tau`` on ``branch``.
    """

    j_naive: np.ndarray
    naive_phases: np.ndarray
    naive_eigenvectors: np.ndarray
    omega1: np.ndarray
    omega2: np.ndarray
    omega_exact: np.ndarray
    exact_phases: np.ndarray
    branch: Branch
    near_branch_cut: bool
    hbar: float


def _check_steps(steps) -> int:
    if int(steps) != steps or steps < 1:
        raise InvalidStepCount(f"step count must be a positive integer, got {steps!r}")
    return int(steps)


def _prefix_products(steps_u: np.ndarray) -> np.ndarray:
    """Cumulative left products ``S_k ... S_1`` for every k (Hillis-Steele scan)."""
    p = steps_u.copy()
    shift = 1
    while shift < len(p):
        p[shift:] = p[shift:] @ p[:-shift]
        shift *= 2
    return p


def propagate_closed(h: HamiltonianSchedule, psi0, steps: int, hbar: float | None = None) -> Trajectory:
    """Propagate a pure state with midpoint exponentials.

    Each step applies ``exp(-(i/hbar) H(t_k + dt/2) dt)``; the global error is
    second order in dt. The propagator is recorded at every grid point.
    """
    n = _check_steps(steps)
    hb = resolve_hbar(hbar)
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (h.dim,):
        raise NumericError(f"initial state has shape {psi0.shape}, schedule dim is {h.dim}")
    norm = np.linalg.norm(psi0)
    if not abs(norm - 1) <= 1e-9:
        raise NumericError(f"initial state is not normalized (norm {norm!r})")
    times = np.linspace(0.0, h.tau, n + 1)
    dt = h.tau / n
    mids = (times[:-1] + times[1:]) / 2
    step_u = batch_expm_skew_hermitian(h(mids), dt / hb)
    props = np.empty((n + 1, h.dim, h.dim), dtype=complex)
    props[0] = np.eye(h.dim)
    props[1:] = _prefix_products(step_u)
    states = props @ psi0
    hams = hermitize(h(times))
    hpsi = (hams @ states[:, :, None])[:, :, 0]
    outer = hpsi[:, :, None] * states.conj()[:, None, :]
    rho_dots = (-1j / hb) * (outer - np.swapaxes(outer, 1, 2).conj())
    return Trajectory(times, states, rho_dots, "midpoint_exponential", hb, props, hams, h.label)


def propagate_open(lv: LiouvillianSchedule, rho0, steps: int, hbar: float | None = None) -> Trajectory:
    """Classical RK4 on ``rho_dot = L(t, rho)``.

    The state is re-Hermitized each step and its trace renormalized when it
    drifts by more than 1e-12.
    """
    n = _check_steps(steps)
    hb = resolve_hbar(hbar)
    rho = np.array(rho0, dtype=complex)
    if rho.shape != (lv.dim, lv.dim):
        raise NumericError(f"rho0 has shape {rho.shape}, schedule dim is {lv.dim}")
    times = np.linspace(0.0, lv.tau, n + 1)
    dt = lv.tau / n
    states = np.empty((n + 1, lv.dim, lv.dim), dtype=complex)
    rho_dots = np.empty_like(states)
    states[0] = rho
    for k in range(n):
        t = times[k]
        k1 = lv(t, rho)
        k2 = lv(t + dt / 2, rho + (dt / 2) * k1)
        k3 = lv(t + dt / 2, rho + (dt / 2) * k2)
        k4 = lv(t + dt, rho + dt * k3)
        rho_dots[k] = k1
        rho = hermitize(rho + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4))
        tr = np.trace(rho).real
        if abs(tr - 1) > 1e-12:
            rho = rho / tr
        states[k + 1] = rho
    rho_dots[n] = lv(times[n], rho)
    return Trajectory(times, states, rho_dots, "rk4", hb, label=lv.label)


def _simpson_nodes(n_min: int) -> int:
    return n_min if n_min % 2 else n_min + 1


def build_generators(h: HamiltonianSchedule, u_tau, branch: Branch = "principal",
                     hbar: float | None = None, nodes: int = QUADRATURE_NODES) -> GeneratorBundle:
    """Naive integral, first two Magnus terms, and the exact generator.

    The first term uses composite Simpson on ``nodes`` points. The second,
    ``-(i/2hbar) int_0^tau dt1 int_0^t1 dt2 [H(t1), H(t2)]``, uses the
    trapezoid rule on the same uniform grid, with the inner integral
    accumulated up to each outer node.
    """
    hb = resolve_hbar(hbar)
    m = _simpson_nodes(max(int(nodes), QUADRATURE_NODES))
    ts = np.linspace(0.0, h.tau, m)
    hs = hermitize(h(ts))
    j = hermitize(scipy.integrate.simpson(hs, x=ts, axis=0))
    inner = scipy.integrate.cumulative_trapezoid(hs, x=ts, axis=0, initial=0)
    comm = hs @ inner - inner @ hs
    omega2 = hermitize((-0.5j / hb) * scipy.integrate.trapezoid(comm, x=ts, axis=0))
    dec = hermitian_eig(j)
    log = unitary_log(require_unitary(u_tau), branch, hb)
    return GeneratorBundle(j, dec.eigenvalues / hb, dec.eigenvectors, j, omega2, log.omega, log.phases,
                           branch, log.near_branch_cut, hb)


@dataclass(frozen=True)
class OverlapComparison:
    """Return-amplitude magnitude from the true propagator (``lhs``) and from
    the naive exponential of the integrated Hamiltonian (``rhs``)."""

    lhs: float
    rhs: float

    @property
    def gap(self) -> float:
        return abs(self.lhs - self.rhs)


def naive_overlap(h: HamiltonianSchedule, psi0, steps: int, hbar: float | None = None) -> OverlapComparison:
    """Compare ``|<psi0|U_tau|psi0>|`` with ``|sum_n |<psi0|n>|^2 exp(-i J_n)|``.

    ``(J_n, |n>)`` are eigenpairs of the integrated Hamiltonian divided by
    hbar. The two agree whenever the schedule commutes with itself at all
    times and generally disagree otherwise.
    """
    traj = propagate_closed(h, psi0, steps, hbar)
    psi0 = traj.states[0]
    lhs = abs(np.vdot(psi0, traj.propagators[-1] @ psi0))
    gen = build_generators(h, traj.propagators[-1], "principal", traj.hbar)
    weights = np.abs(gen.naive_eigenvectors.conj().T @ psi0) ** 2
    rhs = abs(np.sum(weights * np.exp(-1j * gen.naive_phases)))
    return OverlapComparison(float(min(lhs, 1.0)), float(min(rhs, 1.0)))


def orthogonalization_time(h: HamiltonianSchedule, psi0, steps: int, hbar: float | None = None) -> float:
    """First time in ``(0, tau]`` at which the return amplitude vanishes.

    The grid minimum of ``|a(t)|^2 = |<psi0|psi_t>|^2`` is refined by a root
    of its derivative ``2 Re(conj(a) a')`` with ``a' = -(i/hbar) <psi0|H psi_t>``,
    stepping from the neighbouring grid state with one midpoint exponential
    of the partial length. Returns ``nan`` when the state never becomes
    orthogonal within the horizon.
    """
    traj = propagate_closed(h, psi0, steps, hbar)
    psi0 = traj.states[0]
    p = np.abs(traj.states.conj() @ psi0) ** 2
    dt = traj.tau / traj.steps
    candidates = [k for k in range(1, traj.steps + 1)
                  if p[k] <= p[k - 1] and (k == traj.steps or p[k] <= p[k + 1]) and p[k] < 1e-3]
    if not candidates:
        return float("nan")
    k = candidates[0]
    lo, hi = traj.times[k - 1], traj.times[min(k + 1, traj.steps)]

    def state(t):
        i = min(max(int(t // dt), 0), traj.steps - 1)
        sub = t - traj.times[i]
        u = batch_expm_skew_hermitian(h(np.array([traj.times[i] + sub / 2])), sub / traj.hbar)[0]
        return u @ traj.states[i]

    def slope(t):
        psi = state(t)
        a = np.vdot(psi0, psi)
        da = (-1j / traj.hbar) * np.vdot(psi0, h(t) @ psi)
        return float(np.real(np.conj(a) * da))

    if slope(lo) < 0 < slope(hi):
        return float(scipy.optimize.brentq(slope, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))
    res = scipy.optimize.minimize_scalar(lambda t: abs(np.vdot(psi0, state(t))) ** 2, bounds=(lo, hi),
                                         method="bounded", options={"xatol": 1e-12})
    return float(res.x)
