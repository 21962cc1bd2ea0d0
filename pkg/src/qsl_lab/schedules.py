"""Time-dependent generators: Hamiltonian and Liouvillian schedules."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import DimensionMismatch, InvalidParams, NonHermitianInput, UnknownPreset, UnsupportedDimension
from .linalg import PAULI_X, PAULI_Z, hermitize, require_hermitian
from .settings import resolve_hbar

FAMILIES = ("constant", "driven_qubit", "landau_zener", "random_fourier", "ramp_z")


@dataclass(frozen=True, eq=False)
class HamiltonianSchedule:
    """H(t) on ``[0, tau]``.

    ``stack`` maps a 1-d array of times to an ``(n, dim, dim)`` array of
    Hermitian matrices; calling the schedule accepts a scalar or an array.
    ``commuting`` marks families with ``[H(t1), H(t2)] = 0`` for all times.
    """

    dim: int
    tau: float
    stack: Callable[[np.ndarray], np.ndarray]
    label: str
    commuting: bool = False
    constant: bool = False
    params: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if not self.tau > 0:
            raise InvalidParams(f"horizon must be positive, got tau={self.tau}")
        probe = self.stack(np.linspace(0.0, self.tau, 5))
        if probe.shape != (5, self.dim, self.dim):
            raise DimensionMismatch(f"evaluator returned shape {probe.shape}, expected dim {self.dim}")
        defect = np.max(np.abs(probe - np.swapaxes(probe, 1, 2).conj()))
        if defect > 1e-12 * max(1.0, float(np.max(np.abs(probe)))):
            raise NonHermitianInput(f"schedule {self.label!r} is not Hermitian (defect {defect:.3e})")

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        out = self.stack(np.atleast_1d(t_arr))
        return out[0] if t_arr.ndim == 0 else out

    def with_tau(self, tau: float) -> "HamiltonianSchedule":
        return HamiltonianSchedule(self.dim, tau, self.stack, self.label, self.commuting, self.constant, self.params)


@dataclass(frozen=True, eq=False)
class LiouvillianSchedule:
    """rho_dot = evaluator(t, rho) on ``[0, tau]``."""

    dim: int
    tau: float
    evaluator: Callable[[float, np.ndarray], np.ndarray]
    label: str
    hamiltonian: HamiltonianSchedule | None = None

    def __call__(self, t: float, rho: np.ndarray) -> np.ndarray:
        return self.evaluator(t, rho)


def _const_stack(h: np.ndarray):
    def stack(ts):
        return np.broadcast_to(h, (len(ts),) + h.shape).copy()

    return stack


def constant(h0, tau: float) -> HamiltonianSchedule:
    h0 = require_hermitian(h0, "H0")
    return HamiltonianSchedule(h0.shape[0], float(tau), _const_stack(h0), "constant",
                               commuting=True, constant=True, params={"H0": h0})


def driven_qubit(delta: float, epsilon: float, omega: float, tau: float) -> HamiltonianSchedule:
    """``delta * sz + epsilon * cos(omega t) * sx``."""

    def stack(ts):
        return delta * PAULI_Z + (epsilon * np.cos(omega * ts))[:, None, None] * PAULI_X

    return HamiltonianSchedule(2, float(tau), stack, "driven_qubit", commuting=(epsilon == 0 or delta == 0),
                               params={"delta": delta, "epsilon": epsilon, "omega": omega})


def landau_zener(v: float, g: float, tau: float) -> HamiltonianSchedule:
    """``v t sz + g sx``."""

    def stack(ts):
        return (v * ts)[:, None, None] * PAULI_Z + g * PAULI_X

    return HamiltonianSchedule(2, float(tau), stack, "landau_zener", commuting=(v == 0 or g == 0),
                               params={"v": v, "g": g})


def ramp_z(a: float, b: float, tau: float) -> HamiltonianSchedule:
    """``(a + b t) sz``: a commuting family with nontrivial time dependence."""

    def stack(ts):
        return (a + b * ts)[:, None, None] * PAULI_Z

    return HamiltonianSchedule(2, float(tau), stack, "ramp_z", commuting=True, params={"a": a, "b": b})


def fourier(coeffs: np.ndarray, tau: float, label: str = "random_fourier", params=None) -> HamiltonianSchedule:
    """``C0 + sum_k C_k cos(2 pi k t / tau) + S_k sin(2 pi k t / tau)``.

    ``coeffs`` has shape ``(2K + 1, d, d)`` ordered ``C0, C1..CK, S1..SK``;
    each slice must be Hermitian.
    """
    coeffs = hermitize(np.asarray(coeffs, dtype=complex))
    k_modes = (coeffs.shape[0] - 1) // 2
    ks = np.arange(1, k_modes + 1)
    tau = float(tau)

    def stack(ts):
        arg = 2 * np.pi * np.outer(ts, ks) / tau
        basis = np.concatenate([np.ones((len(ts), 1)), np.cos(arg), np.sin(arg)], axis=1)
        return np.einsum("nm,mij->nij", basis, coeffs)

    return HamiltonianSchedule(coeffs.shape[1], tau, stack, label, commuting=(k_modes == 0),
                               params=dict(params or {}, modes=int(k_modes)))


def random_fourier(seed: int, modes: int, tau: float, dim: int = 2) -> HamiltonianSchedule:
    """Fourier schedule with coefficients uniform in ``[-1, 1]`` then Hermitized."""
    if modes < 0 or dim < 1:
        raise InvalidParams(f"need modes >= 0 and dim >= 1, got modes={modes}, dim={dim}")
    rng = np.random.default_rng(seed)
    n = 2 * modes + 1
    raw = rng.uniform(-1, 1, (n, dim, dim)) + 1j * rng.uniform(-1, 1, (n, dim, dim))
    return fourier(raw, tau, params={"seed": seed, "dim": dim})


def preset(name: str, tau: float, **params) -> HamiltonianSchedule:
    """Build a named schedule family.

    >>> preset("landau_zener", tau=1.0, v=2.0, g=1.0)(0.5).real
    array([[ 1.,  1.],
           [ 1., -1.]])
    """
    builders = {
        "constant": lambda: constant(params["H0"], tau),
        "driven_qubit": lambda: driven_qubit(float(params["delta"]), float(params["epsilon"]),
                                             float(params["omega"]), tau),
        "landau_zener": lambda: landau_zener(float(params["v"]), float(params["g"]), tau),
        "random_fourier": lambda: random_fourier(int(params["seed"]), int(params.get("modes", 3)), tau,
                                                 int(params.get("dim", 2))),
        "ramp_z": lambda: ramp_z(float(params["a"]), float(params["b"]), tau),
    }
    if name not in builders:
        raise UnknownPreset(name)
    if not tau > 0:
        raise InvalidParams(f"horizon must be positive, got tau={tau}")
    try:
        return builders[name]()
    except KeyError as exc:
        raise InvalidParams(f"preset {name!r} missing parameter {exc.args[0]!r}") from None


@dataclass(frozen=True)
class ScheduleSample:
    """Seeded draw of a schedule family and its parameters."""

    seed: int
    family: str
    params: Mapping[str, float]
    tau: float

    def build(self) -> HamiltonianSchedule:
        return preset(self.family, self.tau, **self.params)


def sample_schedule(seed: int, family: str = "random_fourier", dim: int = 2,
                    tau_range: tuple[float, float] = (0.25, 3.0), modes: int = 3) -> ScheduleSample:
    """Draw schedule parameters deterministically from ``seed``."""
    rng = np.random.default_rng([seed, FAMILIES.index(family)])
    tau = float(rng.uniform(*tau_range))
    if family == "random_fourier":
        params = {"seed": int(rng.integers(2**31)), "modes": modes, "dim": dim}
    elif family == "driven_qubit":
        params = {"delta": float(rng.uniform(-2, 2)), "epsilon": float(rng.uniform(-2, 2)),
                  "omega": float(rng.uniform(0.5, 5))}
    elif family == "landau_zener":
        params = {"v": float(rng.uniform(-3, 3)), "g": float(rng.uniform(-2, 2))}
    elif family == "ramp_z":
        params = {"a": float(rng.uniform(-2, 2)), "b": float(rng.uniform(-2, 2))}
    elif family == "constant":
        a = rng.uniform(-1, 1, (dim, dim)) + 1j * rng.uniform(-1, 1, (dim, dim))
        params = {"H0": hermitize(a)}
    else:
        raise UnknownPreset(family)
    return ScheduleSample(seed, family, params, tau)


def unitary_liouvillian(h: HamiltonianSchedule, hbar: float | None = None) -> LiouvillianSchedule:
    """rho_dot = -(i/hbar) [H(t), rho].

    A bare ``(1/hbar)[H, rho]`` would not preserve Hermiticity, so the usual
    ``-i`` factor is always applied.
    """
    hb = resolve_hbar(hbar)

    def evaluator(t, rho):
        rho = np.asarray(rho)
        if rho.shape != (h.dim, h.dim):
            raise DimensionMismatch(f"rho has shape {rho.shape}, schedule dim is {h.dim}")
        ht = h(t)
        return (-1j / hb) * (ht @ rho - rho @ ht)

    return LiouvillianSchedule(h.dim, h.tau, evaluator, f"unitary[{h.label}]", h)


def dephasing_liouvillian(h: HamiltonianSchedule, rate, hbar: float | None = None) -> LiouvillianSchedule:
    """Unitary part plus ``rate(t) (sz rho sz - rho)`` on a qubit.

    ``rate`` may be a number or a callable of time. Negative values are
    allowed and model information backflow; complete positivity is not
    enforced.
    """
    if h.dim != 2:
        raise UnsupportedDimension(f"dephasing preset is defined for qubits only, got dim {h.dim}")
    rate_fn = rate if callable(rate) else (lambda t, r=float(rate): r)
    unitary = unitary_liouvillian(h, hbar)

    def evaluator(t, rho):
        return unitary(t, rho) + rate_fn(t) * (PAULI_Z @ rho @ PAULI_Z - rho)

    return LiouvillianSchedule(2, h.tau, evaluator, f"dephasing[{h.label}]", h)
