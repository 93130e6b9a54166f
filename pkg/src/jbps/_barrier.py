"""Log-barrier path-following method for small dense complex SDP-like problems.

Problem form: Hermitian PD blocks ``X_1..X_K`` (``r x r``) and a real vector
``z``; minimise ``c_X * sum_j tr X_j + c_z . z`` subject to a convex barrier
``psi(u, z)`` on the linear forms ``u_i = sum_j a_ij tr(B_i X_j)``. The
nonlinear part lives in a :class:`RowBarrier`, e.g. ``-log(u_i + f_i(z))``
for plain inequality rows.

Complex Hermitian matrices are handled natively (no real embedding).

Numerical notes:

* The Newton step is formed in congruence-scaled coordinates ``X = L L^H``,
  ``dX = L D L^H``. One-sided products such as ``C X`` mix the large and the
  small eigendirections of a nearly rank-one ``X``.
* Row slacks are carried as state and advanced by exact increments. Near the
  optimum a slack is many orders smaller than the terms of its row, and
  recomputing it from ``X`` would lose most of its digits.
* The small multiplier system is solved after Ruiz equilibration; its rows
  span ~15 orders of magnitude near the optimum.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np


class RowBarrier:
    """Nonlinear part of the barrier, as a function of the linear forms ``u`` and ``z``.

    ``state`` is opaque to the engine; implementations keep accurate slacks
    in it and advance them from the exact increments ``du`` and ``dz``.
    """

    theta: float  # barrier parameter contributed by the rows and z

    def init(self, u: np.ndarray, z: np.ndarray) -> Any:
        raise NotImplementedError

    def advance(self, state: Any, z: np.ndarray, du: np.ndarray, dz: np.ndarray) -> Any:
        raise NotImplementedError

    def value(self, state: Any, z: np.ndarray) -> float:
        """Barrier value, or inf outside the domain."""
        raise NotImplementedError

    def derivatives(self, state: Any, z: np.ndarray):
        """``(g_u, g_z, H_uu, H_uz, H_zz)``."""
        raise NotImplementedError


class LinearRows(RowBarrier):
    """``-sum log(u_i + f_i(z))``.

    ``terms(z)`` returns ``f`` (m,), ``df`` (m, nz) and the diagonal second
    derivatives ``d2f`` (m, nz); ``change(z, dz)`` returns ``f(z + dz) - f(z)``
    without cancellation.
    """

    def __init__(self, m: int, nz: int, terms: Callable, change: Callable):
        self.m, self.nz, self.terms, self.change = m, nz, terms, change
        self.theta = float(m)

    def init(self, u, z):
        return u + self.terms(z)[0]

    def advance(self, state, z, du, dz):
        return state + du + self.change(z, dz)

    def value(self, state, z):
        if np.any(state <= 0):
            return np.inf
        return float(-np.sum(np.log(state)))

    def derivatives(self, state, z):
        _, df, d2f = self.terms(z)
        w = 1.0 / state
        H_uz = df * (w**2)[:, None]
        H_zz = df.T @ H_uz - np.diag(w @ d2f)
        return -w, -(w @ df), np.diag(w**2), H_uz, H_zz

    def multipliers(self, state, t: float) -> np.ndarray:
        return 1.0 / (t * state)


@dataclass
class BarrierProblem:
    mats: np.ndarray  # (m, r, r) Hermitian B_i
    coef: np.ndarray  # (m, K)
    trace_weight: float
    z_weight: np.ndarray  # (nz,)
    rows: RowBarrier

    @property
    def num_blocks(self) -> int:
        return self.coef.shape[1]

    @property
    def dim(self) -> int:
        return self.mats.shape[1]

    @property
    def barrier_parameter(self) -> float:
        return self.num_blocks * self.dim + self.rows.theta


@dataclass
class BarrierSettings:
    t0: float = 1.0
    t_factor: float = 10.0
    gap_tol: float = 1e-10
    centering_tol: float = 1e-10
    max_newton: int = 200
    armijo: float = 0.01
    backtrack: float = 0.5


@dataclass
class BarrierState:
    X: np.ndarray  # (K, r, r)
    z: np.ndarray
    t: float
    rows: Any
    newton_steps: int = 0
    converged: bool = False


class BarrierFailure(RuntimeError):
    """Raised when centering breaks down; ``last_center`` is the last well-centered state, if any."""

    def __init__(self, message: str, last_center: "BarrierState | None" = None):
        super().__init__(message)
        self.last_center = last_center


def row_values(problem: BarrierProblem, X: np.ndarray) -> np.ndarray:
    T = np.einsum("iab,jba->ij", problem.mats, X).real
    return np.sum(problem.coef * T, axis=1)


def objective(problem: BarrierProblem, X: np.ndarray, z: np.ndarray) -> float:
    tr = float(np.einsum("jaa->", X).real)
    return problem.trace_weight * tr + float(problem.z_weight @ z)


def _logdets(X: np.ndarray) -> float | None:
    try:
        L = np.linalg.cholesky(X)
    except np.linalg.LinAlgError:
        return None
    return 2.0 * float(np.sum(np.log(np.abs(np.diagonal(L, axis1=1, axis2=2)))))


def _potential(problem: BarrierProblem, X, z, rows, t) -> float:
    psi = problem.rows.value(rows, z)
    if not np.isfinite(psi):
        return np.inf
    logdet = _logdets(X)
    if logdet is None:
        return np.inf
    return float(t * objective(problem, X, z) - logdet + psi)


def _equilibrated_solve(M: np.ndarray, b: np.ndarray, sweeps: int = 4) -> np.ndarray:
    """Solve ``M x = b`` after Ruiz row/column scaling."""
    dr = np.ones(M.shape[0])
    dc = np.ones(M.shape[1])
    Ms = M.copy()
    for _ in range(sweeps):
        r = np.sqrt(np.max(np.abs(Ms), axis=1))
        c = np.sqrt(np.max(np.abs(Ms), axis=0))
        r[r == 0] = 1.0
        c[c == 0] = 1.0
        Ms = Ms / r[:, None] / c[None, :]
        dr, dc = dr / r, dc / c
    return dc * np.linalg.solve(Ms, dr * b)


def _newton_step(problem: BarrierProblem, X, z, rows, t):
    """Newton direction ``(dX, dz)``, the exact row increments and the squared decrement."""
    m, r = problem.coef.shape[0], problem.dim
    nz = len(z)
    g_u, g_z, H_uu, H_uz, H_zz = problem.rows.derivatives(rows, z)

    L = np.linalg.cholesky(X)
    Lh = L.conj().transpose(0, 2, 1)
    aB = problem.coef[:, :, None, None] * np.einsum("jab,ibc,jcd->ijad", Lh, problem.mats, L)
    G = t * problem.trace_weight * (Lh @ L) - np.eye(r) + np.einsum("i,ijab->jab", g_u, aB)
    gz = t * problem.z_weight + g_z
    S = np.einsum("ajxy,bjyx->ab", aB, aB).real
    AG = np.einsum("ijab,jba->i", aB, G).real

    # With y = H_uu du + H_uz dz and D = -(G + A^T y):
    #   (I + H_uu S) y - H_uz dz = -H_uu A G
    #   -H_zu S y + H_zz dz      = -gz + H_zu A G
    M = np.zeros((m + nz, m + nz))
    M[:m, :m] = np.eye(m) + H_uu @ S
    M[:m, m:] = -H_uz
    M[m:, :m] = -H_uz.T @ S
    M[m:, m:] = H_zz
    rhs = np.concatenate([-H_uu @ AG, -gz + H_uz.T @ AG])
    sol = _equilibrated_solve(M, rhs)
    y, dz = sol[:m], sol[m:]

    D = -(G + np.einsum("i,ijab->jab", y, aB))
    D = 0.5 * (D + D.conj().transpose(0, 2, 1))
    dX = L @ D @ Lh
    dX = 0.5 * (dX + dX.conj().transpose(0, 2, 1))
    du = np.einsum("ijab,jba->i", aB, D).real
    quad = float(du @ H_uu @ du + 2.0 * du @ H_uz @ dz + dz @ H_zz @ dz)
    decrement2 = float(np.sum(np.abs(D) ** 2)) + max(quad, 0.0)
    return dX, dz, du, decrement2


def center(problem: BarrierProblem, state: BarrierState, settings: BarrierSettings) -> None:
    t = state.t
    phi = _potential(problem, state.X, state.z, state.rows, t)
    if not np.isfinite(phi):
        raise BarrierFailure("centering started outside the domain")
    for _ in range(50):
        if state.newton_steps >= settings.max_newton:
            raise BarrierFailure(f"Newton step budget ({settings.max_newton}) exhausted")
        try:
            dX, dz, du, lam2 = _newton_step(problem, state.X, state.z, state.rows, t)
        except np.linalg.LinAlgError as exc:
            raise BarrierFailure(f"Newton system: {exc}") from exc
        state.newton_steps += 1
        if lam2 / 2.0 <= settings.centering_tol:
            break
        step = 1.0
        while True:
            X_new, z_new = state.X + step * dX, state.z + step * dz
            rows_new = problem.rows.advance(state.rows, state.z, step * du, step * dz)
            phi_new = _potential(problem, X_new, z_new, rows_new, t)
            if np.isfinite(phi_new) and (lam2 < 0.25 or phi_new <= phi - settings.armijo * step * lam2):
                break
            step *= settings.backtrack
            if step < 1e-14:
                raise BarrierFailure("line search stalled")
        state.X, state.z, state.rows, phi = X_new, z_new, rows_new, phi_new
        if lam2 < 0.25 and step == 1.0 and lam2 / 2.0 <= 1e3 * settings.centering_tol:
            # Quadratic convergence: one more full step is beyond working precision.
            break


def solve(
    problem: BarrierProblem,
    X0: np.ndarray,
    z0: np.ndarray,
    settings: BarrierSettings,
    stop: Callable[[BarrierState], bool] | None = None,
) -> BarrierState:
    """Path-following from a strictly feasible start until the duality gap is small.

    ``stop`` is called after each centering; returning True ends the run early
    (used by phase 1, which only needs a sign decision).
    """
    z0 = np.asarray(z0, dtype=float).copy()
    state = BarrierState(X=X0.copy(), z=z0, t=settings.t0, rows=problem.rows.init(row_values(problem, X0), z0))
    theta = problem.barrier_parameter
    last = None
    while True:
        try:
            center(problem, state, settings)
        except BarrierFailure as exc:
            raise BarrierFailure(str(exc), last) from exc
        last = copy.deepcopy(state)
        if stop is not None and stop(state):
            return state
        obj = objective(problem, state.X, state.z)
        if theta / state.t <= settings.gap_tol * max(abs(obj), np.finfo(float).tiny):
            state.converged = True
            return state
        state.t *= settings.t_factor
