"""Minimum-power joint transmit beamforming and receive power splitting for MISO SWIPT downlinks."""

from .channel import ChannelConfig, LinkParams, generate_instance
from .feasibility import FeasibilityResult, effective_rank, is_feasible
from .model import (
    ConstraintReport, JbpsSolution, Method, NumericalFailure, ProblemInfeasible, SolverError, SystemInstance,
    Targets, achieved_sinr, check_solution, db_to_linear, dbm_to_watts, harvested_power, linear_to_db,
    watts_to_dbm,
)
from .sdr_solver import (
    KktCertificate, KktReport, RankOneViolation, SdrRelaxationSolution, SdrSolveOptions, SdrStatus,
    extract_rank_one, solve_jbps_optimal, solve_relaxation, verify_kkt,
)
from .sinr_solver import scaling_roots, solve_sinr_only, solve_sinr_opt
from .zf_solver import ZfInapplicable, null_space_basis, solve_zf, zf_ps_ratio

__all__ = [
    "ChannelConfig", "LinkParams", "generate_instance",
    "FeasibilityResult", "effective_rank", "is_feasible",
    "ConstraintReport", "JbpsSolution", "Method", "NumericalFailure", "ProblemInfeasible", "SolverError",
    "SystemInstance", "Targets", "achieved_sinr", "check_solution", "db_to_linear", "dbm_to_watts",
    "harvested_power", "linear_to_db", "watts_to_dbm",
    "KktCertificate", "KktReport", "RankOneViolation", "SdrRelaxationSolution", "SdrSolveOptions", "SdrStatus",
    "extract_rank_one", "solve_jbps_optimal", "solve_relaxation", "verify_kkt",
    "scaling_roots", "solve_sinr_only", "solve_sinr_opt",
    "ZfInapplicable", "null_space_basis", "solve_zf", "zf_ps_ratio",
]
