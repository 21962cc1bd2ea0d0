"""Speed-limit bounds as pure calculators over trajectories.

Every bound is a lower limit on the evolution time, in time units. Each
entry carries a status describing whether its derivation holds:

* ``valid`` - a sound inequality with a clear physical reading;
* ``invalid_derivation`` - obtained through an identity that does not hold;
  still evaluated so its numerical truth can be probed;
* ``valid_but_unphysical`` - a sound inequality whose energy scale is not
  fixed by the spectrum of the Hamiltonian.

A denominator that vanishes, up to ``ZERO_RTOL`` times the energy (or norm)
scale of the trajectory, yields ``+inf`` (or ``0`` when the numerator also
vanishes) and sets ``zero_denominator`` rather than raising.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import scipy.integrate

from .errors import ZeroDenominator
from .linalg import hermitian_eig, svd_values
from .propagation import GeneratorBundle, Trajectory
from .settings import resolve_hbar

Status = Literal["valid", "invalid_derivation", "valid_but_unphysical"]

SATISFY_ATOL = 1e-9
SATISFY_RTOL = 1e-7
# denominators below this fraction of the trajectory scale count as zero
ZERO_RTOL = 1e-12

# bound id -> derivation status
STATUS: dict[str, Status] = {
    "ml_initial_energy": "invalid_derivation",
    "ml_magnus": "valid",
    "ml_transition_energy": "valid_but_unphysical",
    "ml_mean_energy": "invalid_derivation",
    "ml_rms_energy": "valid_but_unphysical",
    "mt_variance": "valid",
    "norm_op": "valid_but_unphysical",
    "norm_tr": "valid_but_unphysical",
    "norm_hs": "valid",
    "norm_sharpest": "valid_but_unphysical",
}


@dataclass(frozen=True)
class GeometryResult:
    overlap: float
    angle: float
    kind: Literal["pure_overlap", "mixed_trace"]


@dataclass(frozen=True)
class EnergyStats:
    """Time averages over the trajectory grid (composite trapezoid).

    ``initial`` averages ``|<psi0|H|psi0>|``, ``transition`` averages
    ``|<psi0|H|psi_t>|``, ``mean`` averages ``|<psi_t|H|psi_t>|``,
    ``rms`` averages ``sqrt(<psi_t|H^2|psi_t>)`` and ``spread`` averages the
    standard deviation ``Delta E_t``. ``omega_expect`` is
    ``|<psi0|Omega|psi0>| / tau`` when a generator bundle is supplied.
    """

    initial: float
    transition: float
    mean: float
    rms: float
    spread: float
    omega_expect: float | None = None


@dataclass(frozen=True)
class NormAverages:
    """Time-averaged operator, trace and Hilbert-Schmidt norms of rho_dot."""

    op: float
    tr: float
    hs: float


@dataclass(frozen=True)
class BoundEntry:
    bound_id: str
    value: float
    status: Status
    satisfied: bool
    zero_denominator: bool = False
    inputs: dict = field(default_factory=dict)

    def margin(self, tau: float) -> float:
        """``tau - value``; negative means the bound is violated."""
        return tau - self.value


@dataclass(frozen=True)
class BoundReport:
    tau: float
    entries: tuple[BoundEntry, ...]

    def __getitem__(self, bound_id: str) -> BoundEntry:
        for e in self.entries:
            if e.bound_id == bound_id:
                return e
        raise KeyError(bound_id)

    def __contains__(self, bound_id: str) -> bool:
        return any(e.bound_id == bound_id for e in self.entries)

    def values(self) -> dict[str, float]:
        return {e.bound_id: e.value for e in self.entries}


def satisfied_by(value: float, tau: float) -> bool:
    return value <= tau + SATISFY_ATOL + SATISFY_RTOL * tau


def _ratio(num: float, den: float, scale: float = 0.0) -> tuple[float, bool]:
    if abs(den) <= ZERO_RTOL * scale or den == 0:
        return (0.0 if num == 0 else math.inf), True
    return num / den, False


def _entry(bound_id: str, num: float, den: float, tau: float, scale: float = 0.0, **inputs) -> BoundEntry:
    value, zero = _ratio(num, den, scale)
    return BoundEntry(bound_id, value, STATUS[bound_id], satisfied_by(value, tau), zero, inputs)


def time_average(values: np.ndarray, times: np.ndarray) -> float:
    return float(scipy.integrate.trapezoid(values, x=times) / (times[-1] - times[0]))


# --- geometry ---------------------------------------------------------------

def geometry_pure(psi0, psi_tau) -> GeometryResult:
    """Angle ``arccos |<psi0|psi_tau>|`` between normalized pure states.

    Evaluated as ``atan2(|psi_tau - c psi0|, |c|)``, which keeps full
    precision for nearly identical states where ``arccos`` loses half the
    digits.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    psi_tau = np.asarray(psi_tau, dtype=complex)
    c = np.vdot(psi0, psi_tau)
    # projecting with the computed norm makes psi_tau == psi0 give exactly zero
    perp = np.linalg.norm(psi_tau - (c / np.vdot(psi0, psi0).real) * psi0)
    overlap = float(min(abs(c), 1.0))
    return GeometryResult(overlap, float(math.atan2(perp, abs(c))), "pure_overlap")


def geometry_mixed(rho0, rho_tau) -> GeometryResult:
    """Angle ``arccos sqrt(tr(rho0 rho_tau))``.

    For identical mixed states this is not zero: ``rho0 = rho_tau = I/2``
    gives ``pi/4``.
    """
    f = float(np.clip(np.real(np.trace(np.asarray(rho0) @ np.asarray(rho_tau))), 0.0, 1.0))
    overlap = math.sqrt(f)
    return GeometryResult(overlap, float(math.acos(overlap)), "mixed_trace")


def geometry(traj: Trajectory) -> GeometryResult:
    if traj.closed:
        return geometry_pure(traj.states[0], traj.states[-1])
    return geometry_mixed(traj.states[0], traj.states[-1])


# --- energies -----------------------------------------------------------------

def energy_profiles(traj: Trajectory) -> dict[str, np.ndarray]:
    """Per-grid-point energy quantities of a closed trajectory."""
    psi = traj.states
    psi0 = psi[0]
    hpsi = (traj.hamiltonians @ psi[:, :, None])[:, :, 0]
    h_psi0 = traj.hamiltonians @ psi0
    mean = np.real(np.sum(psi.conj() * hpsi, axis=1))
    # ||(H - <H>) psi|| equals sqrt(<H^2> - <H>^2) without the cancellation
    spread = np.linalg.norm(hpsi - mean[:, None] * psi, axis=1)
    return {
        "initial": np.real(h_psi0 @ psi0.conj()),
        "transition": hpsi @ psi0.conj(),
        "mean": mean,
        "rms": np.linalg.norm(hpsi, axis=1),
        "spread": spread,
    }


def energy_stats(traj: Trajectory, bundle: GeneratorBundle | None = None) -> EnergyStats:
    prof = energy_profiles(traj)
    t = traj.times
    omega = None
    if bundle is not None:
        psi0 = traj.states[0]
        omega = abs(float(np.real(np.vdot(psi0, bundle.omega_exact @ psi0)))) / traj.tau
    return EnergyStats(
        initial=time_average(np.abs(prof["initial"]), t),
        transition=time_average(np.abs(prof["transition"]), t),
        mean=time_average(np.abs(prof["mean"]), t),
        rms=time_average(prof["rms"], t),
        spread=time_average(prof["spread"], t),
        omega_expect=omega,
    )


# --- bounds -------------------------------------------------------------------

def bound_static(spread: float, gap_above_ground: float, hbar: float | None = None) -> tuple[float, float]:
    """Orthogonalization-time bounds for a time-independent Hamiltonian.

    Returns ``(pi hbar / (2 Delta E), pi hbar / (2 (E - E0)))``.
    """
    hb = resolve_hbar(hbar)
    if spread <= 0 or gap_above_ground <= 0:
        raise ZeroDenominator(f"need Delta E > 0 and E - E0 > 0, got {spread}, {gap_above_ground}")
    return math.pi * hb / (2 * spread), math.pi * hb / (2 * gap_above_ground)


def static_energies(h0, psi) -> tuple[float, float]:
    """``(Delta E, E - E0)`` of ``psi`` under a fixed Hamiltonian."""
    dec = hermitian_eig(h0)
    psi = np.asarray(psi, dtype=complex)
    hpsi = dec.reconstruct() @ psi
    mean = float(np.real(np.vdot(psi, hpsi)))
    spread = float(np.linalg.norm(hpsi - mean * psi))
    return spread, mean - float(dec.eigenvalues[0])


def bound_ml_initial_energy(stats: EnergyStats, geom: GeometryResult, tau: float,
                            hbar: float | None = None) -> BoundEntry:
    """``hbar L / E_tau`` with ``E_tau`` the average of ``|<psi0|H_t|psi0>|``.

    Derived from treating ``exp(-(i/hbar) int H dt)`` as the propagator,
    which ignores time ordering.
    """
    hb = resolve_hbar(hbar)
    return _entry("ml_initial_energy", hb * geom.angle, stats.initial, tau, stats.rms,
                  angle=geom.angle, energy=stats.initial)


def bound_ml_magnus(stats: EnergyStats, geom: GeometryResult, tau: float,
                    hbar: float | None = None) -> BoundEntry:
    """``hbar L tau / |<psi0|Omega|psi0>|`` with the exact generator on the
    nonnegative branch."""
    if stats.omega_expect is None:
        raise ValueError("energy stats carry no generator expectation; pass a bundle to energy_stats")
    hb = resolve_hbar(hbar)
    return _entry("ml_magnus", hb * geom.angle, stats.omega_expect, tau, stats.rms,
                  angle=geom.angle, omega_expect=stats.omega_expect)


def bound_ml_transition_energy(stats: EnergyStats, geom: GeometryResult, tau: float,
                               hbar: float | None = None) -> BoundEntry:
    hb = resolve_hbar(hbar)
    return _entry("ml_transition_energy", 4 * hb * geom.angle**2, math.pi**2 * stats.transition, tau, stats.rms,
                  angle=geom.angle, energy=stats.transition)


def bound_ml_mean_energy(stats: EnergyStats, geom: GeometryResult, tau: float,
                         hbar: float | None = None) -> BoundEntry:
    """``hbar sin^2 L / (2 E')``, resting on the false identity
    ``|| H rho ||_tr = <H>``."""
    hb = resolve_hbar(hbar)
    return _entry("ml_mean_energy", hb * math.sin(geom.angle) ** 2, 2 * stats.mean, tau, stats.rms,
                  angle=geom.angle, energy=stats.mean)


def bound_ml_rms_energy(stats: EnergyStats, geom: GeometryResult, tau: float,
                        hbar: float | None = None) -> BoundEntry:
    hb = resolve_hbar(hbar)
    return _entry("ml_rms_energy", hb * math.sin(geom.angle) ** 2, 2 * stats.rms, tau, stats.rms,
                  angle=geom.angle, energy=stats.rms)


def bound_mt_variance(stats: EnergyStats, geom: GeometryResult, tau: float,
                      hbar: float | None = None) -> BoundEntry:
    hb = resolve_hbar(hbar)
    return _entry("mt_variance", hb * math.sin(geom.angle) ** 2, math.sqrt(2) * stats.spread, tau, stats.rms,
                  angle=geom.angle, energy=stats.spread)


def trace_norm_h_rho(h, psi) -> tuple[float, float, float]:
    """``(||H rho||_tr, <psi|H|psi>, sqrt(<psi|H^2|psi>))`` for ``rho = |psi><psi|``.

    ``H rho`` has rank one, so its trace norm is ``||H psi||``; it matches the
    mean energy only when the variance vanishes.
    """
    h = np.asarray(h, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    trace_norm = float(np.sum(svd_values(h @ np.outer(psi, psi.conj()))))
    hpsi = h @ psi
    mean = float(np.real(np.vdot(psi, hpsi)))
    second = float(np.sqrt(max(np.real(np.vdot(hpsi, hpsi)), 0.0)))
    return trace_norm, mean, second


def norm_averages(traj: Trajectory) -> NormAverages:
    norms = traj.schatten_norms()
    t = traj.times
    return NormAverages(*(time_average(norms[:, i], t) for i in range(3)))


def bounds_from_norms(norms: NormAverages, geom: GeometryResult, tau: float) -> tuple[BoundEntry, ...]:
    s2 = math.sin(geom.angle) ** 2
    return tuple(_entry(f"norm_{k}", s2, getattr(norms, k), tau, norms.tr, angle=geom.angle, norm=getattr(norms, k))
                 for k in ("op", "tr", "hs"))


def bound_sharpest_norm(norms: NormAverages, geom: GeometryResult, tau: float) -> BoundEntry:
    """The operator-norm entry, largest of the three since ``op <= hs <= tr``."""
    s2 = math.sin(geom.angle) ** 2
    return _entry("norm_sharpest", s2, norms.op, tau, norms.tr, angle=geom.angle, norm=norms.op)


def closed_report(traj: Trajectory, bundle: GeneratorBundle | None = None) -> BoundReport:
    """All time-dependent bounds for a pure-state trajectory.

    ``bundle`` should use the nonnegative branch; without it the Magnus entry
    is omitted. The static pair bounds the orthogonalization time rather than
    ``tau`` and is left to :func:`bound_static`.
    """
    tau, hb = traj.tau, traj.hbar
    geom = geometry(traj)
    stats = energy_stats(traj, bundle)
    entries = []
    entries.append(bound_ml_initial_energy(stats, geom, tau, hb))
    if bundle is not None:
        entries.append(bound_ml_magnus(stats, geom, tau, hb))
    entries.append(bound_ml_transition_energy(stats, geom, tau, hb))
    entries.append(bound_ml_mean_energy(stats, geom, tau, hb))
    entries.append(bound_ml_rms_energy(stats, geom, tau, hb))
    entries.append(bound_mt_variance(stats, geom, tau, hb))
    norms = norm_averages(traj)
    entries.extend(bounds_from_norms(norms, geom, tau))
    entries.append(bound_sharpest_norm(norms, geom, tau))
    return BoundReport(tau, tuple(entries))


def open_report(traj: Trajectory) -> BoundReport:
    """Norm-based bounds, the only ones defined for density-matrix dynamics."""
    geom = geometry(traj)
    norms = norm_averages(traj)
    return BoundReport(traj.tau, bounds_from_norms(norms, geom, traj.tau)
                       + (bound_sharpest_norm(norms, geom, traj.tau),))
