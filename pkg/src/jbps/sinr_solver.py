"""SINR-optimal beamforming followed by a common rescaling and PS choice.

Step one solves the SINR-only power minimisation through uplink-downlink
duality. The virtual uplink has unit receiver noise and powers ``q``; the
optimal ``q`` is the fixed point of

    q_k = gamma_k / (h_k^H (I + sum_{j != k} q_j h_j h_j^H)^{-1} h_k)

and the downlink beams are the normalised MMSE receivers of that uplink.
Iterates start from ``q = 0`` with plain fixed-point (Jacobi) updates. Once
the MMSE receivers admit a positive power solution, the update switches to
the exact uplink powers for those receivers, which is Newton's method on the
concave fixed-point map and converges in a handful of steps.

Step two scales all beams by one factor ``sqrt(alpha)`` and picks the PS
ratios so every SINR constraint stays tight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import JbpsSolution, Method, NumericalFailure, ProblemInfeasible, SolverError, SystemInstance, Targets, make_solution


class NotConverged(NumericalFailure):
    pass


class DegenerateQuadratic(SolverError):
    pass


# Normalised uplink power above which the fixed point is declared divergent.
_DIVERGENCE = 1e14


@dataclass(frozen=True)
class SinrOnlyResult:
    beamformers: np.ndarray
    uplink_powers: np.ndarray
    iterations: int
    newton_steps: int

    @property
    def total_power(self) -> float:
        return float(np.sum(np.abs(self.beamformers) ** 2))


@dataclass(frozen=True)
class ScalingIntermediates:
    c: np.ndarray
    d: np.ndarray
    alpha_bar: np.ndarray
    alpha: float


def _mmse_directions(Hn: np.ndarray, q: np.ndarray) -> np.ndarray:
    n = Hn.shape[0]
    cov = np.eye(n) + (Hn * q) @ Hn.conj().T
    U = np.linalg.solve(cov, Hn)
    return U / np.linalg.norm(U, axis=0)


def _uplink_powers(Hn: np.ndarray, U: np.ndarray, gamma: np.ndarray) -> np.ndarray | None:
    """Minimal uplink powers meeting the targets with fixed unit-norm receivers, or None."""
    G = np.abs(U.conj().T @ Hn) ** 2  # G[k, j] = |u_k^H h_j|^2
    T = -G
    np.fill_diagonal(T, np.diag(G) / gamma)
    try:
        q = np.linalg.solve(T, np.ones(len(gamma)))
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(q)) or np.any(q <= 0):
        return None
    return q


def _jacobi_update(Hn: np.ndarray, q: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    n, K = Hn.shape
    new = np.empty(K)
    for k in range(K):
        others = np.delete(np.arange(K), k)
        cov = np.eye(n) + (Hn[:, others] * q[others]) @ Hn[:, others].conj().T
        h = Hn[:, k]
        new[k] = gamma[k] / np.real(h.conj() @ np.linalg.solve(cov, h))
    return new


def downlink_powers(H: np.ndarray, W: np.ndarray, gamma: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """Powers making every SINR constraint tight for fixed unit-norm beams ``W``."""
    G = np.abs(H.conj().T @ W) ** 2  # G[k, j] = |h_k^H w_j|^2
    D = -G
    np.fill_diagonal(D, np.diag(G) / gamma)
    return np.linalg.solve(D, noise)


def solve_sinr_only(instance: SystemInstance, sinr, tol: float = 1e-12, max_iterations: int = 500) -> SinrOnlyResult:
    """Minimum-power beams meeting only the SINR targets, with noise ``sigma^2 + delta^2``."""
    gamma = np.asarray(sinr, dtype=float)
    H = instance.channels
    K = H.shape[1]
    if gamma.shape != (K,):
        raise ValueError("one SINR target per user required")
    scale = np.max(np.linalg.norm(H, axis=0))
    Hn = H / scale
    q = np.zeros(K)
    newton_steps = 0
    converged = False
    for it in range(1, max_iterations + 1):
        U = _mmse_directions(Hn, q)
        q_new = _uplink_powers(Hn, U, gamma)
        if q_new is None:
            q_new = _jacobi_update(Hn, q, gamma)
        else:
            newton_steps += 1
        if not np.all(np.isfinite(q_new)) or q_new.max() > _DIVERGENCE:
            raise ProblemInfeasible(f"uplink fixed point diverged after {it} iterations")
        change = abs(q_new.sum() - q.sum())
        q = q_new
        if change <= tol * q.sum():
            converged = True
            break
    if not converged:
        raise NotConverged(f"duality iteration did not converge in {max_iterations} iterations")
    W = _mmse_directions(Hn, q)
    p = downlink_powers(H, W, gamma, instance.antenna_noise + instance.id_noise)
    if np.any(p <= 0):
        raise NotConverged("downlink power system has a non-positive solution")
    return SinrOnlyResult(beamformers=W * np.sqrt(p), uplink_powers=q / scale**2, iterations=it, newton_steps=newton_steps)


def _g(alpha, c, d, sigma2, delta2, e, zeta):
    return delta2 / (alpha * c - sigma2) + e / (zeta * (alpha * d + sigma2))


def _largest_root(c, d, sigma2, delta2, e, zeta) -> float:
    # zeta (a c - s)(a d + s) = delta2 zeta (a d + s) + e (a c - s), expanded in a.
    A = zeta * c * d
    B = zeta * sigma2 * (c - d) - delta2 * zeta * d - e * c
    C = -zeta * sigma2**2 - delta2 * zeta * sigma2 + e * sigma2
    disc = B * B - 4.0 * A * C
    if disc < 0:
        root = np.nan
    elif B <= 0:
        root = (-B + np.sqrt(disc)) / (2.0 * A)
    else:
        root = -2.0 * C / (B + np.sqrt(disc))
    args = (c, d, sigma2, delta2, e, zeta)
    if np.isfinite(root) and root > 1.0:
        # One Newton polish on g(alpha) = 1.
        dg = -delta2 * c / (root * c - sigma2) ** 2 - e * d / (zeta * (root * d + sigma2) ** 2)
        polished = root - (_g(root, *args) - 1.0) / dg
        if polished > 1.0:
            root = polished
    if np.isfinite(root) and root > 1.0 and abs(_g(root, *args) - 1.0) <= 1e-12:
        return float(root)
    return _bisect_root(*args)


def _bisect_root(c, d, sigma2, delta2, e, zeta) -> float:
    args = (c, d, sigma2, delta2, e, zeta)
    lo, hi = 1.0, 2.0
    while _g(hi, *args) > 1.0:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            raise DegenerateQuadratic("no root of g(alpha) = 1 above alpha = 1")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _g(mid, *args) > 1.0:
            lo = mid
        else:
            hi = mid
    return float(hi)


def scaling_roots(instance: SystemInstance, targets: Targets, V_hat: np.ndarray) -> ScalingIntermediates:
    G = instance.gains(V_hat)
    signal = np.diag(G)
    interference = G.sum(axis=1) - signal
    c = signal / targets.sinr - interference
    d = G.sum(axis=1)
    if np.any(c <= 0):
        raise DegenerateQuadratic("c_k <= 0: beams do not meet the SINR targets")
    sigma2, delta2, zeta = instance.antenna_noise, instance.id_noise, instance.eh_efficiency
    alpha_bar = np.array([
        _largest_root(c[k], d[k], sigma2[k], delta2[k], targets.harvest[k], zeta[k])
        for k in range(instance.num_users)
    ])
    return ScalingIntermediates(c=c, d=d, alpha_bar=alpha_bar, alpha=float(alpha_bar.max()))


def solve_sinr_opt(instance: SystemInstance, targets: Targets, tol: float = 1e-12, max_iterations: int = 500) -> JbpsSolution:
    base = solve_sinr_only(instance, targets.sinr, tol, max_iterations)
    inter = scaling_roots(instance, targets, base.beamformers)
    alpha = inter.alpha
    rho = instance.id_noise / (alpha * inter.c - instance.antenna_noise)
    V = np.sqrt(alpha) * base.beamformers
    return make_solution(
        instance, V, rho, Method.SINR_OPTIMAL,
        intermediates=inter, iterations=base.iterations, sinr_only_power=base.total_power,
    )
