"""Numerical laboratory for quantum speed limits in driven and open systems."""

from .bounds import (BoundEntry, BoundReport, EnergyStats, GeometryResult, NormAverages, bound_ml_initial_energy,
                     bound_ml_magnus, bound_ml_mean_energy, bound_ml_rms_energy, bound_ml_transition_energy,
                     bound_mt_variance, bound_sharpest_norm, bound_static, bounds_from_norms, closed_report,
                     energy_stats, geometry_mixed, geometry_pure, norm_averages, open_report, trace_norm_h_rho)
from .lab import ExperimentSpec, Verdict, default_suite, run_experiment
from .linalg import commutator, expm_skew_hermitian, hermitian_eig, svd_values, unitary_log
from .propagation import (GeneratorBundle, Trajectory, build_generators, naive_overlap, orthogonalization_time,
                          propagate_closed, propagate_open)
from .schedules import (HamiltonianSchedule, LiouvillianSchedule, ScheduleSample, dephasing_liouvillian, preset,
                        sample_schedule, unitary_liouvillian)
from .settings import hbar, hbar_scope, set_hbar

__version__ = "0.1.0"
