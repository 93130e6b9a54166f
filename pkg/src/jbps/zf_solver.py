"""Zero-forcing beamforming with per-user closed-form power splitting.

With interference nulled, the problem separates over users. Each user's SINR
and harvest constraints are both tight at the optimum, which fixes the PS
ratio as the root in (0, 1) of ``a/(1 - rho) - b/rho = 1`` with
``a = e/(zeta (gamma+1) sigma^2)`` and ``b = gamma delta^2/((gamma+1) sigma^2)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .feasibility import DEFAULT_RANK_TOL, effective_rank
from .model import JbpsSolution, Method, SolverError, SystemInstance, Targets, make_solution


class ZfInapplicable(SolverError):
    pass


class NoNullSpace(ValueError):
    pass


@dataclass(frozen=True)
class ZfIntermediates:
    alpha: np.ndarray
    beta: np.ndarray
    bases: tuple[np.ndarray, ...]
    effective_gain: np.ndarray


def null_space_basis(H_k: np.ndarray, rel_tol: float = DEFAULT_RANK_TOL, num_antennas: int | None = None) -> np.ndarray:
    """Orthonormal basis of ``null(H_k^H)`` via SVD.

    ``H_k`` is ``N_t x m`` with the other users' channels as columns; an
    empty ``H_k`` (single user) needs ``num_antennas`` and yields the identity.
    """
    H_k = np.asarray(H_k, dtype=complex)
    if H_k.ndim == 1:
        H_k = H_k[:, None]
    n = H_k.shape[0] if num_antennas is None else num_antennas
    if H_k.size == 0:
        return np.eye(n, dtype=complex)
    _, s, Vh = np.linalg.svd(H_k.conj().T)
    rank = int(np.sum(s > rel_tol * s[0])) if s.size and s[0] > 0 else 0
    if rank >= n:
        raise NoNullSpace(f"other users' channels span all {n} antenna dimensions")
    return Vh[rank:].conj().T


def zf_ps_split(alpha, beta) -> tuple[np.ndarray, np.ndarray]:
    """PS ratio ``rho`` and its complement ``1 - rho``, both without cancellation.

    ``rho`` solves ``rho^2 + (a+b-1) rho - b = 0``; ``u = 1 - rho`` solves
    ``u^2 - (a+b+1) u + a = 0``. Each uses the branch of the quadratic formula
    that avoids subtracting nearly equal numbers.
    """
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if np.any(~(alpha > 0)) or np.any(~(beta > 0)):
        raise ValueError("alpha and beta must be positive")
    a = alpha + beta - 1.0
    root = np.sqrt(a * a + 4.0 * beta)
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.where(a > 0, 2.0 * beta / (a + root), (root - a) / 2.0)
    b = alpha + beta + 1.0
    # b > 0 always; take the smaller root of u^2 - b u + alpha = 0.
    u = 2.0 * alpha / (b + np.sqrt(b * b - 4.0 * alpha))
    return rho, u


def zf_ps_ratio(alpha, beta):
    rho, _ = zf_ps_split(alpha, beta)
    return float(rho) if rho.ndim == 0 else rho


def zf_intermediates(instance: SystemInstance, targets: Targets, rel_tol: float = DEFAULT_RANK_TOL) -> ZfIntermediates:
    H = instance.channels
    n, K = H.shape
    if n < K:
        raise ZfInapplicable(f"ZF requires N_t \u2265 K (N_t={n}, K={K})")
    if effective_rank(H, rel_tol) < K:
        raise ZfInapplicable("ZF requires linearly independent user channels")
    gamma, e = targets.sinr, targets.harvest
    sigma2, delta2, zeta = instance.antenna_noise, instance.id_noise, instance.eh_efficiency
    alpha = e / (zeta * (gamma + 1.0) * sigma2)
    beta = gamma * delta2 / ((gamma + 1.0) * sigma2)
    bases = []
    gain = np.empty(K)
    for k in range(K):
        U = null_space_basis(np.delete(H, k, axis=1), rel_tol, num_antennas=n)
        bases.append(U)
        gain[k] = np.linalg.norm(U.conj().T @ H[:, k]) ** 2
    return ZfIntermediates(alpha=alpha, beta=beta, bases=tuple(bases), effective_gain=gain)


def solve_zf(instance: SystemInstance, targets: Targets, rel_tol: float = DEFAULT_RANK_TOL) -> JbpsSolution:
    inter = zf_intermediates(instance, targets, rel_tol)
    H = instance.channels
    rho = zf_ps_ratio(inter.alpha, inter.beta)
    tau = targets.sinr * (instance.antenna_noise + instance.id_noise / rho)
    V = np.empty_like(H)
    for k, U in enumerate(inter.bases):
        proj = U @ (U.conj().T @ H[:, k])
        V[:, k] = np.sqrt(tau[k]) * proj / inter.effective_gain[k]
    return make_solution(instance, V, rho, Method.ZERO_FORCING, intermediates=inter)
