"""Closed-form feasibility test for the joint beamforming / power splitting problem.

Feasibility depends on the SINR targets and the rank of the channel matrix
only: the problem is feasible iff ``sum_k gamma_k / (1 + gamma_k) <= rank(H)``.
Harvest targets never enter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_RANK_TOL = 1e-10


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    margin: float
    rank: int
    load: float


def effective_rank(H: np.ndarray, rel_tol: float = DEFAULT_RANK_TOL) -> int:
    """Number of singular values above ``rel_tol`` times the largest one."""
    s = np.linalg.svd(np.asarray(H), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rel_tol * s[0]))


def sinr_load(sinr) -> float:
    sinr = np.asarray(sinr, dtype=float)
    return float(np.sum(sinr / (1.0 + sinr)))


def is_feasible(sinr, H: np.ndarray, rel_tol: float = DEFAULT_RANK_TOL) -> FeasibilityResult:
    sinr = np.asarray(sinr, dtype=float)
    if np.any(~(sinr > 0)):
        raise ValueError("SINR targets must be strictly positive")
    rank = effective_rank(H, rel_tol)
    load = sinr_load(sinr)
    margin = rank - load
    # Non-strict condition: margin == 0 counts as feasible.
    return FeasibilityResult(feasible=margin >= 0, margin=margin, rank=rank, load=load)
