"""Domain types and metric evaluation for the MISO SWIPT downlink.

All quantities are linear (watts, linear ratios). dB/dBm only appear at the
I/O boundary through :func:`dbm_to_watts` and friends.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

# Guard band that makes the open interval 0 < rho < 1 testable for solver
# outputs; the metric evaluators themselves accept any rho in (0, 1).
RHO_GUARD = 1e-9


class SolverError(RuntimeError):
    """Base class for solver failures that the harness records per draw."""


class ProblemInfeasible(SolverError):
    pass


class NumericalFailure(SolverError):
    pass


class Method(str, enum.Enum):
    SDR_OPTIMAL = "optimal"
    ZERO_FORCING = "zf"
    SINR_OPTIMAL = "sinr-opt"


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def dbm_to_watts(x):
    return _scalar_or_array(10.0 ** ((np.asarray(x, dtype=float) - 30.0) / 10.0))


def watts_to_dbm(x):
    return _scalar_or_array(10.0 * np.log10(np.asarray(x, dtype=float)) + 30.0)


def db_to_linear(x):
    return _scalar_or_array(10.0 ** (np.asarray(x, dtype=float) / 10.0))


def linear_to_db(x):
    return _scalar_or_array(10.0 * np.log10(np.asarray(x, dtype=float)))


def _per_user(value, num_users: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(num_users, float(arr))
    if arr.shape != (num_users,):
        raise ValueError(f"{name} must have one entry per user ({num_users}), got shape {arr.shape}")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SystemInstance:
    """Physical problem data.

    ``channels`` is the ``N_t x K`` matrix whose column ``k`` is the
    conjugated downlink channel ``h_k``; the received signal amplitude for
    beamformer ``v`` is ``h_k^H v``.
    """

    channels: np.ndarray
    antenna_noise: np.ndarray
    id_noise: np.ndarray
    eh_efficiency: np.ndarray

    def __post_init__(self):
        H = np.array(self.channels, dtype=complex)
        if H.ndim != 2 or H.shape[0] < 1 or H.shape[1] < 1:
            raise ValueError(f"channels must be a nonempty N_t x K matrix, got shape {H.shape}")
        if np.any(np.linalg.norm(H, axis=0) == 0):
            raise ValueError("channel matrix has an all-zero column")
        if not np.all(np.isfinite(H)):
            raise ValueError("channel matrix has non-finite entries")
        H.setflags(write=False)
        K = H.shape[1]
        sigma2 = _per_user(self.antenna_noise, K, "antenna_noise")
        delta2 = _per_user(self.id_noise, K, "id_noise")
        zeta = _per_user(self.eh_efficiency, K, "eh_efficiency")
        if np.any(~(sigma2 > 0)) or np.any(~(delta2 > 0)):
            raise ValueError("noise powers must be strictly positive")
        if np.any(~(zeta > 0)) or np.any(zeta > 1):
            raise ValueError("energy harvesting efficiencies must lie in (0, 1]")
        object.__setattr__(self, "channels", H)
        object.__setattr__(self, "antenna_noise", sigma2)
        object.__setattr__(self, "id_noise", delta2)
        object.__setattr__(self, "eh_efficiency", zeta)

    @property
    def num_antennas(self) -> int:
        return self.channels.shape[0]

    @property
    def num_users(self) -> int:
        return self.channels.shape[1]

    def gains(self, V: np.ndarray) -> np.ndarray:
        """``G[k, j] = |h_k^H v_j|^2``."""
        return np.abs(self.channels.conj().T @ V) ** 2

    def __eq__(self, other):
        if not isinstance(other, SystemInstance):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("channels", "antenna_noise", "id_noise", "eh_efficiency")
        )

    __hash__ = None


@dataclass(frozen=True)
class Targets:
    """Per-user SINR targets (linear) and harvested-power targets (watts)."""

    sinr: np.ndarray
    harvest: np.ndarray

    def __post_init__(self):
        sinr = np.atleast_1d(np.asarray(self.sinr, dtype=float)).copy()
        harvest = np.atleast_1d(np.asarray(self.harvest, dtype=float)).copy()
        if sinr.ndim != 1 or sinr.shape != harvest.shape:
            raise ValueError("sinr and harvest targets must be 1-D arrays of equal length")
        if np.any(~(sinr > 0)) or np.any(~(harvest > 0)):
            raise ValueError("SINR and harvest targets must be strictly positive")
        if not (np.all(np.isfinite(sinr)) and np.all(np.isfinite(harvest))):
            raise ValueError("targets must be finite")
        sinr.setflags(write=False)
        harvest.setflags(write=False)
        object.__setattr__(self, "sinr", sinr)
        object.__setattr__(self, "harvest", harvest)

    @classmethod
    def uniform(cls, num_users: int, sinr_db: float, harvest_dbm: float) -> "Targets":
        return cls(
            sinr=np.full(num_users, db_to_linear(sinr_db)),
            harvest=np.full(num_users, dbm_to_watts(harvest_dbm)),
        )

    @property
    def num_users(self) -> int:
        return self.sinr.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Targets):
            return NotImplemented
        return np.array_equal(self.sinr, other.sinr) and np.array_equal(self.harvest, other.harvest)

    __hash__ = None


@dataclass(frozen=True)
class JbpsSolution:
    beamformers: np.ndarray
    ps_ratios: np.ndarray
    total_power: float
    method: Method
    per_user_sinr: np.ndarray
    per_user_harvest: np.ndarray
    info: dict = field(default_factory=dict, compare=False)

    @property
    def per_user_power(self) -> np.ndarray:
        return np.sum(np.abs(self.beamformers) ** 2, axis=0)


@dataclass(frozen=True)
class ConstraintReport:
    sinr_slack: np.ndarray
    harvest_slack: np.ndarray
    feasible: bool
    tolerance: float

    @property
    def max_violation(self) -> float:
        worst = min(self.sinr_slack.min(), self.harvest_slack.min())
        return max(0.0, -float(worst))


def _check_user(instance: SystemInstance, V: np.ndarray, rho: np.ndarray, k: int) -> None:
    K = instance.num_users
    if not 0 <= k < K:
        raise IndexError(f"user index {k} out of range for K={K}")
    if V.shape != instance.channels.shape:
        raise ValueError(f"beamformer matrix shape {V.shape} does not match channels {instance.channels.shape}")
    if not 0.0 < rho[k] < 1.0:
        raise ValueError(f"power splitting ratio rho[{k}]={rho[k]!r} outside (0, 1)")


def achieved_sinr(instance: SystemInstance, V: np.ndarray, rho, k: int) -> float:
    V = np.asarray(V, dtype=complex)
    rho = np.asarray(rho, dtype=float)
    _check_user(instance, V, rho, k)
    g = np.abs(instance.channels[:, k].conj() @ V) ** 2
    interference = np.delete(g, k).sum()
    return float(rho[k] * g[k] / (rho[k] * (interference + instance.antenna_noise[k]) + instance.id_noise[k]))


def harvested_power(instance: SystemInstance, V: np.ndarray, rho, k: int) -> float:
    V = np.asarray(V, dtype=complex)
    rho = np.asarray(rho, dtype=float)
    _check_user(instance, V, rho, k)
    g = np.abs(instance.channels[:, k].conj() @ V) ** 2
    return float(instance.eh_efficiency[k] * (1.0 - rho[k]) * (g.sum() + instance.antenna_noise[k]))


def evaluate_metrics(instance: SystemInstance, V: np.ndarray, rho) -> tuple[np.ndarray, np.ndarray]:
    """Per-user SINR and harvested power through the single-user evaluators."""
    K = instance.num_users
    sinr = np.array([achieved_sinr(instance, V, rho, k) for k in range(K)])
    harvest = np.array([harvested_power(instance, V, rho, k) for k in range(K)])
    return sinr, harvest


def make_solution(instance: SystemInstance, V: np.ndarray, rho, method: Method, **info) -> JbpsSolution:
    V = np.array(V, dtype=complex)
    rho = np.array(rho, dtype=float)
    sinr, harvest = evaluate_metrics(instance, V, rho)
    for arr in (V, rho, sinr, harvest):
        arr.setflags(write=False)
    return JbpsSolution(
        beamformers=V,
        ps_ratios=rho,
        total_power=float(np.sum(np.abs(V) ** 2)),
        method=Method(method),
        per_user_sinr=sinr,
        per_user_harvest=harvest,
        info=info,
    )


def check_solution(instance: SystemInstance, targets: Targets, solution: JbpsSolution, tol: float = 1e-6) -> ConstraintReport:
    """Relative constraint slacks of ``solution``; feasible iff all slacks >= -tol and rho is inside the guard band."""
    K = instance.num_users
    if targets.num_users != K:
        raise ValueError(f"targets have {targets.num_users} users, instance has {K}")
    if solution.beamformers.shape != instance.channels.shape or solution.ps_ratios.shape != (K,):
        raise ValueError("solution dimensions do not match the instance")
    sinr, harvest = evaluate_metrics(instance, solution.beamformers, solution.ps_ratios)
    sinr_slack = sinr / targets.sinr - 1.0
    harvest_slack = harvest / targets.harvest - 1.0
    inside = np.all((solution.ps_ratios >= RHO_GUARD) & (solution.ps_ratios <= 1.0 - RHO_GUARD))
    feasible = bool(inside and np.all(sinr_slack >= -tol) and np.all(harvest_slack >= -tol))
    return ConstraintReport(sinr_slack, harvest_slack, feasible, tol)
