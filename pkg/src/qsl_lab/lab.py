"""Reproducible experiments that check each claim and sweep random instances.

Every experiment is a pure function of its :class:`ExperimentSpec` and hbar.
Sweeps draw sample ``i`` from ``default_rng([seed, i])``, so results do not
depend on evaluation order or on how samples are split across workers.
"""

from __future__ import annotations

import concurrent.futures
import dataclasses
import functools
import logging
import math
import os
import time
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from . import bounds
from .errors import InvalidParams, NumericError
from .linalg import KET_0, KET_PLUS, PAULI_Z, random_hermitian, random_state
from .propagation import build_generators, naive_overlap, propagate_closed
from .schedules import preset, sample_schedule
from .settings import resolve_hbar

log = logging.getLogger(__name__)

Outcome = Literal["confirmed", "refuted", "inconclusive"]

RIGOROUS_BOUNDS = ("ml_transition_energy", "mt_variance", "norm_op", "norm_tr", "norm_hs")

KINDS = ("naive_overlap", "trace_norm_identity", "looseness_ordering", "mt_reduction", "bound_validity",
         "initial_energy_empirical")

DEFAULT_TOLERANCE = {
    "naive_overlap": 1e-9,
    "trace_norm_identity": 1e-10,
    "looseness_ordering": 1e-12,
    "mt_reduction": 1e-8,
    "bound_validity": 1e-7,
    "initial_energy_empirical": 1e-7,
}
DEFAULT_THRESHOLD = {"naive_overlap": 1e-3, "trace_norm_identity": 0.1}

# beyond this a tight identity counts as broken rather than merely imprecise
REFUTE_LEVEL = 1e-6


@dataclass(frozen=True)
class ExperimentSpec:
    id: str
    kind: str
    seed: int = 0
    steps: int = 4096
    samples: int = 1000
    dims: tuple[int, int] = (2, 6)
    tau_range: tuple[float, float] = (0.25, 3.0)
    modes: int = 3
    tau: float | None = None
    schedule: dict | None = None
    tolerance: float | None = None
    threshold: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParams(f"unknown experiment kind {self.kind!r}")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "tau_range", tuple(float(t) for t in self.tau_range))
        if self.dims[0] < 2 or self.dims[1] < self.dims[0]:
            raise InvalidParams(f"invalid dimension range {self.dims}")
        if not 0 < self.tau_range[0] <= self.tau_range[1]:
            raise InvalidParams(f"invalid tau range {self.tau_range}")
        if self.steps < 1 or self.samples < 0:
            raise InvalidParams("steps must be >= 1 and samples >= 0")

    @property
    def tol(self) -> float:
        return DEFAULT_TOLERANCE[self.kind] if self.tolerance is None else float(self.tolerance)

    @property
    def thresh(self) -> float:
        return DEFAULT_THRESHOLD.get(self.kind, 0.0) if self.threshold is None else float(self.threshold)

    @property
    def expected(self) -> Outcome | None:
        return None if self.kind == "initial_energy_empirical" else "confirmed"

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class Verdict:
    id: str
    kind: str
    claim: str
    outcome: Outcome
    witness: dict
    expected: Outcome | None
    runtime: float = field(default=0.0, compare=False)

    @property
    def passed(self) -> bool:
        return self.expected is None or self.outcome == self.expected

    def to_dict(self) -> dict:
        # runtime is left out so serialized verdicts replay byte for byte
        return {"id": self.id, "kind": self.kind, "claim": self.claim, "outcome": self.outcome,
                "expected": self.expected, "witness": self.witness}


def default_suite(seed: int = 0) -> list[ExperimentSpec]:
    return [ExperimentSpec(kind, kind, seed=seed) for kind in KINDS[:5]]


# --- sweep machinery --------------------------------------------------------

@dataclass(frozen=True)
class SampleRecord:
    """Everything a sweep needs from one random closed trajectory."""

    index: int
    schedule_seed: int
    dim: int
    tau: float
    angle: float
    values: dict
    zero_denominator: dict
    norms: tuple[float, float, float]
    spread_avg: float
    singular_residual: float
    magnus: dict


@dataclass(frozen=True)
class SweepParams:
    seed: int
    samples: int
    dims: tuple[int, int]
    tau_range: tuple[float, float]
    steps: int
    modes: int
    hbar: float

    @classmethod
    def from_spec(cls, spec: ExperimentSpec, hbar: float) -> "SweepParams":
        return cls(spec.seed, spec.samples, spec.dims, spec.tau_range, spec.steps, spec.modes, hbar)


def evaluate_sample(p: SweepParams, index: int) -> SampleRecord:
    rng = np.random.default_rng([p.seed, index])
    dim = int(rng.integers(p.dims[0], p.dims[1] + 1))
    sample = sample_schedule(int(rng.integers(2**31)), "random_fourier", dim, p.tau_range, p.modes)
    psi0 = random_state(dim, rng)
    h = sample.build()
    traj = propagate_closed(h, psi0, p.steps, p.hbar)
    bundle = build_generators(h, traj.propagators[-1], "nonnegative", p.hbar)
    report = bounds.closed_report(traj, bundle)
    norms = bounds.norm_averages(traj)
    spread = bounds.energy_profiles(traj)["spread"] / p.hbar
    sv = traj.singular_values
    expected_sv = np.zeros_like(sv)
    expected_sv[:, :2] = spread[:, None]
    principal = build_generators(h, traj.propagators[-1], "principal", p.hbar)
    omega_principal = abs(float(np.real(np.vdot(psi0, principal.omega_exact @ psi0))))
    return SampleRecord(
        index=index,
        schedule_seed=int(sample.params["seed"]),
        dim=dim,
        tau=h.tau,
        angle=bounds.geometry(traj).angle,
        values=report.values(),
        zero_denominator={e.bound_id: e.zero_denominator for e in report.entries},
        norms=(norms.op, norms.tr, norms.hs),
        spread_avg=bounds.energy_stats(traj).spread,
        singular_residual=float(np.max(np.abs(sv - expected_sv))),
        magnus={
            "phases": [float(x) for x in np.sort(bundle.exact_phases)],
            "near_branch_cut": bundle.near_branch_cut,
            "omega_expect": report["ml_magnus"].inputs["omega_expect"],
            "principal_value": (p.hbar * report["ml_magnus"].inputs["angle"] * h.tau / omega_principal
                                if omega_principal > 0 else math.inf),
        },
    )


def _worker_count() -> int:
    try:
        cap = int(os.environ.get("QSL_THREADS", "1"))
    except ValueError:
        cap = 1
    return max(1, min(cap, os.cpu_count() or 1))


def _evaluate_chunk(p: SweepParams, indices: list[int]) -> list[SampleRecord]:
    return [evaluate_sample(p, i) for i in indices]


@functools.lru_cache(maxsize=8)
def run_sweep(p: SweepParams) -> tuple[SampleRecord, ...]:
    """Evaluate all samples, in parallel when ``QSL_THREADS`` > 1."""
    workers = _worker_count()
    indices = list(range(p.samples))
    if workers == 1 or p.samples < 2 * workers:
        return tuple(_evaluate_chunk(p, indices))
    chunks = [indices[i::workers] for i in range(workers)]
    with concurrent.futures.ProcessPoolExecutor(workers) as pool:
        parts = list(pool.map(_evaluate_chunk, [p] * workers, chunks))
    return tuple(sorted((r for part in parts for r in part), key=lambda r: r.index))


def sweep_rows(records: tuple[SampleRecord, ...], tol_rel: float = bounds.SATISFY_RTOL) -> list[dict]:
    """Flat per-sample rows: bound values and whether the actual tau meets them."""
    rows = []
    for r in records:
        row = {"index": r.index, "schedule_seed": r.schedule_seed, "dim": r.dim, "tau": r.tau, "L": r.angle}
        for bid, v in r.values.items():
            row[bid] = v
        for bid, v in r.values.items():
            row[f"{bid}_satisfied"] = _satisfied(v, r.tau, tol_rel)
        rows.append(row)
    return rows


def _satisfied(value: float, tau: float, tol_rel: float) -> bool:
    return value <= tau + bounds.SATISFY_ATOL + tol_rel * tau


# --- experiments ------------------------------------------------------------

def _schedule_from(spec: ExperimentSpec, default: dict, tau_default: float):
    ref = dict(spec.schedule or default)
    family = ref.pop("family")
    params = dict(ref.pop("params", {}))
    state = ref.pop("psi0", {"kind": "basis", "index": 0})
    if ref:
        raise InvalidParams(f"unknown schedule keys {sorted(ref)}")
    if "H0" in params:
        h0 = params["H0"]
        params["H0"] = (np.asarray(h0["re"], dtype=float) + 1j * np.asarray(h0.get("im", 0.0), dtype=float)
                        if isinstance(h0, dict) else np.asarray(h0, dtype=complex))
    h = preset(family, spec.tau or tau_default, **params)
    return h, state_from(state, h.dim)


def state_from(ref: dict, dim: int) -> np.ndarray:
    """Initial pure state from a config reference (basis, plus, random or vector)."""
    kind = ref.get("kind", "basis")
    if kind == "basis":
        psi = np.zeros(dim, dtype=complex)
        psi[int(ref.get("index", 0))] = 1
        return psi
    if kind == "plus":
        return np.ones(dim, dtype=complex) / math.sqrt(dim)
    if kind == "random":
        return random_state(dim, np.random.default_rng(int(ref.get("seed", 0))))
    if kind == "vector":
        psi = np.asarray(ref["re"], dtype=float) + 1j * np.asarray(ref.get("im", [0.0] * len(ref["re"])))
        if psi.shape != (dim,):
            raise InvalidParams(f"state vector has length {psi.size}, schedule dim is {dim}")
        norm = np.linalg.norm(psi)
        if not norm > 0:
            raise InvalidParams("state vector is zero")
        return psi / norm
    raise InvalidParams(f"unknown state kind {kind!r}")


def exp_naive_overlap(spec: ExperimentSpec, hbar: float | None = None) -> Verdict:
    hb = resolve_hbar(hbar)
    witness_h, psi0 = _schedule_from(spec, {"family": "landau_zener", "params": {"v": 2.0, "g": 1.0}}, 1.0)
    if witness_h.commuting:
        raise InvalidParams("the witness schedule must be non-commuting")
    main = naive_overlap(witness_h, psi0, spec.steps, hb)
    second = naive_overlap(preset("driven_qubit", 2.0, delta=1.0, epsilon=2.0, omega=3.0), KET_0, spec.steps, hb)
    controls = {
        "constant_z": naive_overlap(preset("constant", witness_h.tau, H0=PAULI_Z), KET_PLUS, spec.steps, hb),
        "ramp_z": naive_overlap(preset("ramp_z", witness_h.tau, a=1.0, b=0.5), KET_PLUS, spec.steps, hb),
    }
    control_gap = max(c.gap for c in controls.values())
    if main.gap > spec.thresh and control_gap <= spec.tol:
        outcome = "confirmed"
    elif main.gap <= spec.thresh and control_gap <= spec.tol:
        outcome = "refuted"
    else:
        outcome = "inconclusive"
    return Verdict(spec.id, spec.kind,
                   "ignoring time ordering breaks the return-amplitude identity for non-commuting drives "
                   "while it holds for commuting ones",
                   outcome,
                   {"witness": {"schedule": witness_h.label, "tau": witness_h.tau, "lhs": main.lhs,
                                "rhs": main.rhs, "gap": main.gap},
                    "second_witness": {"schedule": "driven_qubit", "tau": 2.0, "lhs": second.lhs,
                                       "rhs": second.rhs, "gap": second.gap},
                    "controls": {k: {"lhs": c.lhs, "rhs": c.rhs, "gap": c.gap} for k, c in controls.items()},
                    "threshold": spec.thresh, "tolerance": spec.tol},
                   spec.expected)


def exp_trace_norm_identity(spec: ExperimentSpec, hbar: float | None = None) -> Verdict:
    tn, mean, second = bounds.trace_norm_h_rho(PAULI_Z, KET_PLUS)
    ctn, cmean, csecond = bounds.trace_norm_h_rho(PAULI_Z, KET_0)
    rng = np.random.default_rng([spec.seed, 10])
    max_residual = 0.0
    min_excess = math.inf
    for _ in range(spec.samples):
        d = int(rng.integers(spec.dims[0], spec.dims[1] + 1))
        s_tn, s_mean, s_second = bounds.trace_norm_h_rho(random_hermitian(d, rng), random_state(d, rng))
        max_residual = max(max_residual, abs(s_tn - s_second))
        min_excess = min(min_excess, s_tn - abs(s_mean))
    residual = max(abs(tn - second), max_residual)
    gap = abs(tn - mean)
    if gap > spec.thresh and residual <= spec.tol:
        outcome = "confirmed"
    elif gap <= spec.thresh or residual > REFUTE_LEVEL:
        outcome = "refuted"
    else:
        outcome = "inconclusive"
    return Verdict(spec.id, spec.kind,
                   "the trace norm of H rho equals sqrt(<H^2>), not the mean energy",
                   outcome,
                   {"witness": {"trace_norm": tn, "mean": mean, "sqrt_second_moment": second, "gap": gap},
                    "control": {"trace_norm": ctn, "mean": cmean, "sqrt_second_moment": csecond,
                                "gap": abs(ctn - cmean)},
                    "samples": spec.samples, "max_identity_residual": max_residual,
                    "min_trace_norm_minus_abs_mean": min_excess if spec.samples else None,
                    "threshold": spec.thresh, "tolerance": spec.tol},
                   spec.expected)


def _tight_outcome(worst: float, tol: float) -> Outcome:
    if worst <= tol:
        return "confirmed"
    return "refuted" if worst > REFUTE_LEVEL else "inconclusive"


def exp_looseness_ordering(spec: ExperimentSpec, hbar: float | None = None) -> Verdict:
    records = run_sweep(SweepParams.from_spec(spec, resolve_hbar(hbar)))
    worst, worst_index, skipped = -math.inf, None, 0
    for r in records:
        rms, mt = r.values["ml_rms_energy"], r.values["mt_variance"]
        if not (math.isfinite(rms) and math.isfinite(mt)):
            skipped += 1
            continue
        excess = rms - mt
        if excess > worst:
            worst, worst_index = excess, r.index
    outcome = _tight_outcome(worst, spec.tol) if worst_index is not None else "inconclusive"
    return Verdict(spec.id, spec.kind,
                   "the bound from sqrt(<H^2>) never exceeds the variance-based bound",
                   outcome,
                   {"samples": len(records), "skipped": skipped,
                    "max_rms_minus_variance_bound": worst if worst_index is not None else None,
                    "worst_index": worst_index, "tolerance": spec.tol},
                   spec.expected)


def exp_mt_reduction(spec: ExperimentSpec, hbar: float | None = None) -> Verdict:
    hb = resolve_hbar(hbar)
    records = run_sweep(SweepParams.from_spec(spec, hb))
    hs_gap = bound_gap = sv_res = 0.0
    worst_index, skipped = None, 0
    for r in records:
        op, tr, hs = r.norms
        if hs == 0:
            skipped += 1
            continue
        g = abs(hs - math.sqrt(2) * r.spread_avg / hb) / hs
        b = abs(r.values["norm_hs"] - r.values["mt_variance"]) / max(r.values["mt_variance"], 1e-300)
        if r.values["mt_variance"] == 0 and r.values["norm_hs"] == 0:
            b = 0.0
        if max(g, b, r.singular_residual) > max(hs_gap, bound_gap, sv_res):
            worst_index = r.index
        hs_gap, bound_gap, sv_res = max(hs_gap, g), max(bound_gap, b), max(sv_res, r.singular_residual)
    worst = max(hs_gap, bound_gap, sv_res)
    outcome = _tight_outcome(worst, spec.tol) if len(records) > skipped else "inconclusive"
    return Verdict(spec.id, spec.kind,
                   "for unitary dynamics the Hilbert-Schmidt norm of rho_dot is sqrt(2) Delta E / hbar, "
                   "so its bound is the Mandelstam-Tamm bound",
                   outcome,
                   {"samples": len(records), "skipped": skipped,
                    "max_relative_norm_gap": hs_gap, "max_relative_bound_gap": bound_gap,
                    "max_singular_value_residual": sv_res, "worst_index": worst_index,
                    "tolerance": spec.tol},
                   spec.expected)


def exp_bound_validity(spec: ExperimentSpec, hbar: float | None = None) -> Verdict:
    """Rigorous bounds must hold on every sample.

    Violations of the Magnus-generator bound are logged with their branch
    diagnostics and reported separately; they do not decide the outcome.
    """
    records = run_sweep(SweepParams.from_spec(spec, resolve_hbar(hbar)))
    violations = {b: 0 for b in RIGOROUS_BOUNDS}
    min_margin = {b: math.inf for b in RIGOROUS_BOUNDS}
    first_violation = None
    magnus_violations = []
    ordering_failures = 0
    for r in records:
        for b in RIGOROUS_BOUNDS:
            v = r.values[b]
            if r.zero_denominator[b] and v == 0:
                continue
            min_margin[b] = min(min_margin[b], (r.tau - v) / r.tau)
            if not _satisfied(v, r.tau, spec.tol):
                violations[b] += 1
                first_violation = first_violation or {"index": r.index, "bound": b, "value": v, "tau": r.tau}
        op, tr, hs = r.norms
        if not op <= hs * (1 + 1e-12) or not hs <= tr * (1 + 1e-12):
            ordering_failures += 1
        mv = r.values["ml_magnus"]
        if not _satisfied(mv, r.tau, spec.tol):
            diag = {"index": r.index, "schedule_seed": r.schedule_seed, "dim": r.dim, "tau": r.tau,
                    "value": mv, "angle": r.angle, **r.magnus}
            log.warning("Magnus-generator bound violated: sample %d (dim %d, tau %.6g): bound %.6g, "
                        "nonnegative phases %s, near branch cut %s, principal-branch bound %.6g",
                        r.index, r.dim, r.tau, mv, np.round(r.magnus["phases"], 6).tolist(),
                        r.magnus["near_branch_cut"], r.magnus["principal_value"])
            magnus_violations.append(diag)
    total = sum(violations.values()) + ordering_failures
    outcome: Outcome = "confirmed" if total == 0 and records else ("refuted" if total else "inconclusive")
    return Verdict(spec.id, spec.kind,
                   "the variance, transition-energy and rho_dot-norm bounds hold on every sampled trajectory",
                   outcome,
                   {"samples": len(records), "violations": violations,
                    "min_relative_margin": {b: (m if math.isfinite(m) else None) for b, m in min_margin.items()},
                    "norm_ordering_failures": ordering_failures,
                    "first_violation": first_violation,
                    "magnus_violation_count": len(magnus_violations),
                    "magnus_violations": magnus_violations,
                    "tolerance": spec.tol},
                   spec.expected)


def exp_initial_energy_empirical(spec: ExperimentSpec, hbar: float | None = None) -> Verdict:
    """Probe the bound built on ``|<psi0|H_t|psi0>|`` for numerical counterexamples.

    Its derivation is known to be invalid; whether the inequality itself is
    false is what this experiment measures. A single violation refutes
    universal validity; otherwise the outcome stays inconclusive.
    """
    records = run_sweep(SweepParams.from_spec(spec, resolve_hbar(hbar)))
    count, worst = 0, None
    for r in records:
        v = r.values["ml_initial_energy"]
        if not _satisfied(v, r.tau, spec.tol):
            count += 1
            ratio = v / r.tau
            if worst is None or ratio > worst["value_over_tau"]:
                worst = {"index": r.index, "schedule_seed": r.schedule_seed, "dim": r.dim, "tau": r.tau,
                         "value": v, "value_over_tau": ratio}
    mean_energy_violations = sum(1 for r in records if not _satisfied(r.values["ml_mean_energy"], r.tau, spec.tol))
    return Verdict(spec.id, spec.kind,
                   "the bound with the time-averaged initial-state energy holds universally",
                   "refuted" if count else "inconclusive",
                   {"samples": len(records), "violation_count": count, "worst_violation": worst,
                    "mean_energy_bound_violation_count": mean_energy_violations,
                    "tolerance": spec.tol},
                   spec.expected)


EXPERIMENTS: dict[str, Callable[[ExperimentSpec, float | None], Verdict]] = {
    "naive_overlap": exp_naive_overlap,
    "trace_norm_identity": exp_trace_norm_identity,
    "looseness_ordering": exp_looseness_ordering,
    "mt_reduction": exp_mt_reduction,
    "bound_validity": exp_bound_validity,
    "initial_energy_empirical": exp_initial_energy_empirical,
}


def run_experiment(spec: ExperimentSpec, hbar: float | None = None) -> Verdict:
    """Run one experiment; numeric failures yield an inconclusive verdict."""
    start = time.perf_counter()
    try:
        verdict = EXPERIMENTS[spec.kind](spec, hbar)
    except NumericError as exc:
        log.warning("%s: numeric failure: %s", spec.id, exc)
        verdict = Verdict(spec.id, spec.kind, "numeric failure before the claim could be checked", "inconclusive",
                          {"error": f"{type(exc).__name__}: {exc}"}, spec.expected)
    return dataclasses.replace(verdict, runtime=time.perf_counter() - start)


SWEEP_KINDS = ("looseness_ordering", "mt_reduction", "bound_validity", "initial_energy_empirical")
