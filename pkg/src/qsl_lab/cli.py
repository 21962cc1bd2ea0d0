"""Command-line entry point: ``qsl simulate | verify | sweep``.

Exit codes: 0 success, 1 a claim expected to be confirmed was not,
2 configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import bounds, lab, serialize
from .errors import ConfigError, InvalidParams, NumericError, UnknownPreset
from .propagation import build_generators, propagate_closed, propagate_open
from .schedules import FAMILIES, dephasing_liouvillian, preset
from .settings import hbar_scope

log = logging.getLogger("qsl")

EXIT_OK, EXIT_CLAIM, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

_MATRIX = {"oneOf": [
    {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
    {"type": "object", "additionalProperties": False, "required": ["re"],
     "properties": {"re": {"type": "array"}, "im": {"type": "array"}}},
]}

_STATE = {
    "type": "object", "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["basis", "plus", "random", "vector"]},
        "index": {"type": "integer", "minimum": 0},
        "seed": {"type": "integer"},
        "re": {"type": "array", "items": {"type": "number"}},
        "im": {"type": "array", "items": {"type": "number"}},
    },
}

_SCHEDULE = {
    "type": "object", "additionalProperties": False, "required": ["family"],
    "properties": {
        "family": {"enum": list(FAMILIES)},
        "params": {"type": "object", "additionalProperties": False,
                   "properties": {"H0": _MATRIX, "delta": {"type": "number"}, "epsilon": {"type": "number"},
                                  "omega": {"type": "number"}, "v": {"type": "number"}, "g": {"type": "number"},
                                  "a": {"type": "number"}, "b": {"type": "number"},
                                  "seed": {"type": "integer"}, "modes": {"type": "integer", "minimum": 0},
                                  "dim": {"type": "integer", "minimum": 1}}},
        "tau": {"type": "number", "exclusiveMinimum": 0},
        "psi0": _STATE,
        "dephasing": {"type": "object", "additionalProperties": False, "required": ["rate"],
                      "properties": {"rate": {"type": "number"}, "modulation": {"type": "number"},
                                     "frequency": {"type": "number"}}},
    },
}

_RANGE = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

_EXPERIMENT = {
    "type": "object", "additionalProperties": False, "required": ["id", "kind"],
    "properties": {
        "id": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "kind": {"enum": list(lab.KINDS)},
        "seed": {"type": "integer"},
        "steps": {"type": "integer", "minimum": 1},
        "samples": {"type": "integer", "minimum": 0},
        "dims": _RANGE,
        "tau_range": _RANGE,
        "modes": {"type": "integer", "minimum": 0},
        "tau": {"type": "number", "exclusiveMinimum": 0},
        "schedule": {"type": "object", "additionalProperties": False, "required": ["family"],
                     "properties": {"family": {"enum": list(FAMILIES)}, "params": _SCHEDULE["properties"]["params"],
                                    "psi0": _STATE}},
        "tolerance": {"type": "number", "minimum": 0},
        "threshold": {"type": "number", "minimum": 0},
    },
}

CONFIG_SCHEMA = {
    "type": "object", "additionalProperties": False,
    "properties": {
        "hbar": {"type": "number", "exclusiveMinimum": 0},
        "seed": {"type": "integer"},
        "output": {"type": "object", "additionalProperties": False,
                   "properties": {"directory": {"type": "string"},
                                  "formats": {"type": "array", "uniqueItems": True,
                                              "items": {"enum": ["json", "csv"]}}}},
        "schedules": {"type": "object", "additionalProperties": _SCHEDULE},
        "experiments": {"type": "array", "items": _EXPERIMENT},
        "sweep": {"type": "object", "additionalProperties": False,
                  "properties": {k: _EXPERIMENT["properties"][k]
                                 for k in ("id", "seed", "steps", "samples", "dims", "tau_range", "modes",
                                           "tolerance")}},
    },
}


@dataclass(frozen=True)
class RunConfig:
    hbar: float = 1.0
    seed: int = 0
    directory: Path = Path("qsl-output")
    formats: tuple[str, ...] = ("json", "csv")
    schedules: dict = field(default_factory=dict)
    experiments: tuple[lab.ExperimentSpec, ...] | None = None
    sweep: dict = field(default_factory=dict)


def load_config(path: str | Path) -> RunConfig:
    """Read and validate a JSON run configuration.

    Relative output directories resolve against the config file location.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config {path}: {where}: {exc.message}") from None
    out = raw.get("output", {})
    directory = Path(out.get("directory", "qsl-output"))
    if not directory.is_absolute():
        directory = path.parent / directory
    seed = int(raw.get("seed", 0))
    experiments = None
    if "experiments" in raw:
        ids = [e["id"] for e in raw["experiments"]]
        if len(set(ids)) != len(ids):
            raise ConfigError("experiment ids must be unique")
        try:
            experiments = tuple(lab.ExperimentSpec(**{"seed": seed, **e}) for e in raw["experiments"])
        except InvalidParams as exc:
            raise ConfigError(str(exc)) from None
    return RunConfig(float(raw.get("hbar", 1.0)), seed, directory, tuple(out.get("formats", ["json", "csv"])),
                     raw.get("schedules", {}), experiments, raw.get("sweep", {}))


def _matrix(value) -> np.ndarray:
    if isinstance(value, dict):
        return np.asarray(value["re"], dtype=float) + 1j * np.asarray(value.get("im", 0.0), dtype=float)
    return np.asarray(value, dtype=complex)


def build_schedule(definition: dict, tau: float | None = None):
    params = dict(definition.get("params", {}))
    if "H0" in params:
        params["H0"] = _matrix(params["H0"])
    tau = tau if tau is not None else definition.get("tau")
    if tau is None:
        raise ConfigError("no horizon: give --tau or a schedule 'tau'")
    try:
        h = preset(definition["family"], float(tau), **params)
        psi0 = lab.state_from(definition.get("psi0", {"kind": "basis", "index": 0}), h.dim)
    except NumericError:
        raise
    except (InvalidParams, UnknownPreset, IndexError, ValueError) as exc:
        raise ConfigError(f"invalid schedule definition: {exc}") from None
    return h, psi0


# --- simulate -----------------------------------------------------------------

TRAJECTORY_COLUMNS = ["t", "overlap", "L", "mean_energy", "spread", "rms_energy",
                      "rho_dot_op", "rho_dot_tr", "rho_dot_hs"]


def _entry_dict(e: bounds.BoundEntry) -> dict:
    return {"bound_id": e.bound_id, "value": e.value, "status": e.status, "satisfied": e.satisfied,
            "zero_denominator": e.zero_denominator, "infinite": math.isinf(e.value), "inputs": e.inputs}



def simulate(cfg: RunConfig, name: str, tau: float | None, steps: int) -> dict:
    """Propagate one configured schedule and write its grid table and summary."""
    if name not in cfg.schedules:
        raise ConfigError(f"schedule {name!r} not defined in config")
    definition = cfg.schedules[name]
    h, psi0 = build_schedule(definition, tau)
    hb = cfg.hbar
    summary = {"schema_version": serialize.SCHEMA_VERSION, "schedule": name, "family": definition["family"],
               "tau": h.tau, "steps": steps, "hbar": hb}
    if "dephasing" in definition:
        d = definition["dephasing"]
        g0, g1, nu = d["rate"], d.get("modulation", 0.0), d.get("frequency", 0.0)
        try:
            lv = dephasing_liouvillian(h, lambda t: g0 + g1 * math.cos(nu * t), hb)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        rho0 = np.outer(psi0, psi0.conj())
        traj = propagate_open(lv, rho0, steps, hb)
        rhos = traj.states
        hams = h(traj.times)
        overlap = np.sqrt(np.clip(np.real(np.einsum("ij,nji->n", rho0, rhos)), 0, 1))
        mean = np.real(np.einsum("nij,nji->n", hams, rhos))
        second = np.real(np.einsum("nij,njk,nki->n", hams, hams, rhos))
        spread = np.sqrt(np.clip(second - mean**2, 0, None))
        rms = np.sqrt(np.clip(second, 0, None))
        angles = np.arccos(overlap)
        report = bounds.open_report(traj)
        summary["kind"] = "open"
        summary["dephasing"] = {"rate": g0, "modulation": g1, "frequency": nu}
    else:
        traj = propagate_closed(h, psi0, steps, hb)
        prof = bounds.energy_profiles(traj)
        geoms = [bounds.geometry_pure(psi0, s) for s in traj.states]
        overlap = np.array([g.overlap for g in geoms])
        angles = np.array([g.angle for g in geoms])
        mean, spread, rms = prof["mean"], prof["spread"], prof["rms"]
        bundle = build_generators(h, traj.propagators[-1], "nonnegative", hb)
        report = bounds.closed_report(traj, bundle)
        summary["kind"] = "closed"
        summary["generators"] = {
            "branch": bundle.branch, "near_branch_cut": bundle.near_branch_cut,
            "naive_phases": bundle.naive_phases, "exact_phases": np.sort(bundle.exact_phases),
            "magnus2_remainder_op": float(np.linalg.norm(bundle.omega_exact - bundle.omega1 - bundle.omega2, 2)),
        }
        if h.constant:
            spread0, gap0 = bounds.static_energies(h(0.0), psi0)
            static = {"spread": spread0, "gap_above_ground": gap0}
            static["mt"] = math.pi * hb / (2 * spread0) if spread0 > 0 else math.inf
            static["ml"] = math.pi * hb / (2 * gap0) if gap0 > 0 else math.inf
            summary["static"] = static
    norms = traj.schatten_norms()
    geom = bounds.geometry(traj)
    summary["geometry"] = {"overlap": geom.overlap, "L": geom.angle, "kind": geom.kind}
    summary["bounds"] = [_entry_dict(e) for e in report.entries]
    rows = [dict(zip(TRAJECTORY_COLUMNS, vals)) for vals in
            zip(traj.times, overlap, angles, mean, spread, rms, norms[:, 0], norms[:, 1], norms[:, 2])]
    cfg.directory.mkdir(parents=True, exist_ok=True)
    if "csv" in cfg.formats:
        serialize.write_csv(cfg.directory / f"{name}.csv", TRAJECTORY_COLUMNS, rows)
    if "json" in cfg.formats:
        serialize.write_json(cfg.directory / f"{name}.json", summary)
    return summary


# --- verify / sweep -------------------------------------------------------------

def _sweep_header(rows: list[dict]) -> list[str]:
    return list(rows[0]) if rows else ["seed", "index", "schedule_seed", "dim", "tau", "L"]


def verify(cfg: RunConfig) -> tuple[int, list[lab.Verdict]]:
    specs = lab.default_suite(cfg.seed) if cfg.experiments is None else list(cfg.experiments)
    if not specs:
        log.warning("experiment list is empty; nothing to verify")
    cfg.directory.mkdir(parents=True, exist_ok=True)
    verdicts = []
    for spec in specs:
        verdict = lab.run_experiment(spec, cfg.hbar)
        log.info("%s: %s (%.2f s)", spec.id, verdict.outcome, verdict.runtime)
        verdicts.append(verdict)
        if "json" in cfg.formats:
            serialize.write_json(cfg.directory / f"{spec.id}.json",
                                 {"schema_version": serialize.SCHEMA_VERSION, "spec": spec.to_dict(),
                                  "verdict": verdict.to_dict()})
        if "csv" in cfg.formats and spec.kind in lab.SWEEP_KINDS:
            rows = [{"seed": spec.seed, **r} for r in
                    lab.sweep_rows(lab.run_sweep(lab.SweepParams.from_spec(spec, cfg.hbar)))]
            serialize.write_csv(cfg.directory / f"{spec.id}.csv", _sweep_header(rows), rows)
    summary = {"schema_version": serialize.SCHEMA_VERSION,
               "verdicts": [{"id": v.id, "outcome": v.outcome, "expected": v.expected, "passed": v.passed}
                            for v in verdicts]}
    if "json" in cfg.formats:
        serialize.write_json(cfg.directory / "verify_summary.json", summary)
    code = EXIT_OK if all(v.passed for v in verdicts) else EXIT_CLAIM
    return code, verdicts


def sweep(cfg: RunConfig) -> tuple[lab.ExperimentSpec, list[dict]]:
    s = {"id": "sweep", "seed": cfg.seed, **cfg.sweep}
    spec = lab.ExperimentSpec(s.pop("id"), "bound_validity", **s)
    records = lab.run_sweep(lab.SweepParams.from_spec(spec, cfg.hbar))
    rows = [{"seed": spec.seed, **r} for r in lab.sweep_rows(records, spec.tol)]
    cfg.directory.mkdir(parents=True, exist_ok=True)
    header = _sweep_header(rows)
    if "csv" in cfg.formats or not cfg.formats:
        serialize.write_csv(cfg.directory / f"{spec.id}.csv", header, rows)
    if "json" in cfg.formats:
        bound_ids = [k for k in header if k.endswith("_satisfied")]
        serialize.write_json(cfg.directory / f"{spec.id}.json", {
            "schema_version": serialize.SCHEMA_VERSION, "spec": spec.to_dict(), "samples": len(rows),
            "violations": {k[: -len("_satisfied")]: sum(1 for r in rows if not r[k]) for k in bound_ids},
        })
    return spec, rows


# --- entry point ----------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qsl", description="Quantum speed-limit laboratory")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)
    sim = sub.add_parser("simulate", help="propagate one schedule and evaluate all bounds")
    sim.add_argument("--config", required=True)
    sim.add_argument("--schedule", required=True)
    sim.add_argument("--tau", type=float)
    sim.add_argument("--steps", type=int, default=4096)
    ver = sub.add_parser("verify", help="run claim-checking experiments")
    ver.add_argument("--config", required=True)
    sw = sub.add_parser("sweep", help="tabulate bounds over random trajectories")
    sw.add_argument("--config", required=True)
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s", force=True)
    try:
        cfg = load_config(args.config)
        with hbar_scope(cfg.hbar):
            if args.command == "simulate":
                if args.steps < 1:
                    raise ConfigError("--steps must be positive")
                if args.tau is not None and not args.tau > 0:
                    raise ConfigError("--tau must be positive")
                simulate(cfg, args.schedule, args.tau, args.steps)
                return EXIT_OK
            if args.command == "verify":
                code, verdicts = verify(cfg)
                for v in verdicts:
                    print(f"{v.id}: {v.outcome}" + ("" if v.passed else f" (expected {v.expected})"))
                return code
            spec, rows = sweep(cfg)
            print(f"{spec.id}: {len(rows)} samples written to {cfg.directory}")
            return EXIT_OK
    except ConfigError as exc:
        print(f"qsl: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"qsl: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def run() -> None:
    sys.exit(main())
