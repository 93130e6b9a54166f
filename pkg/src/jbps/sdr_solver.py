"""Globally optimal joint beamforming and power splitting via the SDR.

The relaxation replaces ``v_k v_k^H`` with PSD ``X_k``:

    min  sum_k tr X_k
    s.t. (1/gamma_k) h_k^H X_k h_k - sum_{j != k} h_k^H X_j h_k >= sigma_k^2 + delta_k^2 / rho_k
         sum_j h_k^H X_j h_k >= e_k / (zeta_k (1 - rho_k)) - sigma_k^2
         0 < rho_k < 1

For fixed ``X`` the PS ratio only has to exist, so each user's pair of rows
collapses into one convex row in ``X`` (see ``_SplitRows``), solved by the
log-barrier method in ``_barrier`` in native complex arithmetic. Every
optimal ``X_k`` lies in the column space of ``H``, so the solve runs in an
orthonormal basis of that space; this also makes phase 1 decisive on
rank-deficient channels.

Optimality is certified by the dual matrices

    A_k = I + sum_j (lambda_j - mu_j) h_j h_j^H - (lambda_k/gamma_k + lambda_k) h_k h_k^H

built from the barrier multipliers: at the optimum ``A_k >= 0``,
``A_k X_k = 0``, ``rank A_k = N_t - 1`` and all multipliers are positive.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import _barrier
from .feasibility import DEFAULT_RANK_TOL, is_feasible
from .model import JbpsSolution, Method, NumericalFailure, ProblemInfeasible, SolverError, SystemInstance, Targets, make_solution
from .sinr_solver import solve_sinr_only, solve_sinr_opt


class RankOneViolation(NumericalFailure):
    def __init__(self, ratio: float, tol: float):
        super().__init__(f"eigenvalue ratio {ratio:.3e} exceeds rank-one tolerance {tol:.1e}")
        self.ratio = ratio


class SdrStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    NUMERICAL_FAILURE = "NumericalFailure"


@dataclass(frozen=True)
class SdrSolveOptions:
    kkt_tol: float = 1e-8
    rank_one_tol: float = 1e-6
    max_iterations: int = 200  # Newton steps, summed over all centerings
    gap_tol: float = 1e-5  # barrier gap relative to the objective, before polishing
    polish: bool = True
    t_factor: float = 10.0
    init_inflation: float = 1.5
    rank_tol: float = DEFAULT_RANK_TOL

    def __post_init__(self):
        for name in ("kkt_tol", "rank_one_tol", "gap_tol", "rank_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iterations < 1 or not self.t_factor > 1 or not self.init_inflation > 1:
            raise ValueError("max_iterations >= 1, t_factor > 1 and init_inflation > 1 required")


@dataclass(frozen=True)
class KktCertificate:
    lambdas: np.ndarray
    mus: np.ndarray
    dual_matrices: np.ndarray  # (K, N_t, N_t)
    residuals: dict


@dataclass(frozen=True)
class InfeasibilityCertificate:
    """Weights ``y >= 0`` with ``sum_{j != k} y_j h_j h_j^H - (y_k/gamma_k) h_k h_k^H > 0`` on range(H) for every k."""

    weights: np.ndarray
    min_eigenvalue: float


@dataclass(frozen=True)
class SdrRelaxationSolution:
    X: np.ndarray | None  # (K, N_t, N_t), watts
    rho: np.ndarray | None
    objective: float
    status: SdrStatus
    certificate: KktCertificate | None = None
    infeasibility: InfeasibilityCertificate | None = None
    info: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class KktReport:
    psd: bool
    complementarity: bool
    tightness: bool
    positivity: bool
    rank: bool
    values: dict

    @property
    def passed(self) -> bool:
        return self.psd and self.complementarity and self.tightness and self.positivity and self.rank


def dual_matrices(H: np.ndarray, sinr: np.ndarray, lambdas: np.ndarray, mus: np.ndarray) -> np.ndarray:
    n, K = H.shape
    common = np.eye(n) + (H * (lambdas - mus)) @ H.conj().T
    out = np.empty((K, n, n), dtype=complex)
    for k in range(K):
        h = H[:, k]
        out[k] = common - (lambdas[k] / sinr[k] + lambdas[k]) * np.outer(h, h.conj())
    return out


def _range_basis(H: np.ndarray, rel_tol: float) -> np.ndarray:
    U, s, _ = np.linalg.svd(H, full_matrices=False)
    r = int(np.sum(s > rel_tol * s[0]))
    return U[:, :r]


@dataclass
class _Scaled:
    """Problem data in the reduced, normalised coordinates used by the barrier engine."""

    Q: np.ndarray  # N_t x r orthonormal basis of range(H)
    Hr: np.ndarray  # r x K, Q^H h_k / eta
    eta: float
    power: float  # X = power * Q Y Q^H
    sinr: np.ndarray
    sigma2: np.ndarray
    delta2: np.ndarray
    harvest_req: np.ndarray  # e_k / zeta_k

    @property
    def sinr_scale(self) -> np.ndarray:
        return self.sigma2 + self.delta2

    def lift(self, Y: np.ndarray) -> np.ndarray:
        X = self.power * np.einsum("ab,jbc,dc->jad", self.Q, Y, self.Q.conj())
        return 0.5 * (X + X.conj().transpose(0, 2, 1))

    def reduce(self, X: np.ndarray) -> np.ndarray:
        return np.einsum("ba,jbc,cd->jad", self.Q.conj(), X, self.Q) / self.power


def _outer_mats(Hr: np.ndarray) -> np.ndarray:
    return np.einsum("ak,bk->kab", Hr, Hr.conj())


class _SplitRows(_barrier.RowBarrier):
    """One row per user with the PS ratio eliminated.

    For fixed ``X`` a ratio meeting both constraints of user k exists iff

        p_k + q_k <= 1,   p_k = dn / (a_k - sn),   q_k = 1 / b_k

    where ``a_k`` is the normalised SINR form, ``b_k`` the normalised received
    power plus antenna noise, and ``sn``, ``dn`` the normalised noise terms;
    ``p_k`` and ``1 - q_k`` bound the feasible ratios from below and above.
    Keeping one row per rank-one block keeps the Newton system well
    conditioned, unlike a formulation with two rows per user coupled through
    a ratio variable.

    State: ``(alpha, beta, s)`` with ``alpha = a - sn``, ``beta = b`` and the
    slack ``s = 1 - p - q``, all advanced by exact increments.
    """

    def __init__(self, sn: np.ndarray, dn: np.ndarray, bn: np.ndarray):
        self.sn, self.dn, self.bn = sn, dn, bn
        self.K = len(sn)
        self.theta = float(self.K)

    def init(self, u, z):
        alpha = u[: self.K] - self.sn
        beta = u[self.K:] + self.bn
        with np.errstate(divide="ignore"):
            s = 1.0 - self.dn / alpha - 1.0 / beta
        return alpha, beta, s

    def advance(self, state, z, du, dz):
        alpha, beta, s = state
        da, db = du[: self.K], du[self.K:]
        a_new, b_new = alpha + da, beta + db
        with np.errstate(divide="ignore", invalid="ignore"):
            ds = self.dn * da / (alpha * a_new) + db / (beta * b_new)
        return a_new, b_new, s + ds

    def value(self, state, z):
        alpha, beta, s = state
        if np.any(alpha <= 0) or np.any(beta <= 0) or np.any(s <= 0):
            return np.inf
        return float(-np.sum(np.log(s)))

    def _grad(self, state):
        alpha, beta, s = state
        return self.dn / alpha**2, 1.0 / beta**2

    def derivatives(self, state, z):
        alpha, beta, s = state
        K = self.K
        P, Q = self._grad(state)
        g_u = -np.concatenate([P / s, Q / s])
        H = np.zeros((2 * K, 2 * K))
        idx = np.arange(K)
        w2 = 1.0 / s**2
        H[idx, idx] = P * P * w2 + 2.0 * self.dn / (alpha**3 * s)
        H[K + idx, K + idx] = Q * Q * w2 + 2.0 / (beta**3 * s)
        H[idx, K + idx] = H[K + idx, idx] = P * Q * w2
        return g_u, np.zeros(0), H, np.zeros((2 * K, 0)), np.zeros((0, 0))

    def split(self, state) -> np.ndarray:
        """PS ratios scaling both constraint margins by the same factor."""
        alpha, beta, _ = state
        p, q = self.dn / alpha, 1.0 / beta
        return p / (p + q)

    def multipliers(self, state, t: float) -> tuple[np.ndarray, np.ndarray]:
        """Multipliers of the normalised SINR and harvest forms."""
        P, Q = self._grad(state)
        kappa = 1.0 / (t * state[2])
        return kappa * P, kappa * Q


def _sinr_coef(sc: _Scaled) -> np.ndarray:
    K = sc.Hr.shape[1]
    coef = -np.ones((K, K)) + np.diag(1.0 / sc.sinr + 1.0)
    return coef * (sc.eta**2 * sc.power / sc.sinr_scale)[:, None]


def _jbps_problem(sc: _Scaled) -> _barrier.BarrierProblem:
    K = sc.Hr.shape[1]
    g2 = sc.eta**2 * sc.power
    B = _outer_mats(sc.Hr)
    harvest_coef = np.tile((g2 / sc.harvest_req)[:, None], (1, K))
    rows = _SplitRows(sn=sc.sigma2 / sc.sinr_scale, dn=sc.delta2 / sc.sinr_scale, bn=sc.sigma2 / sc.harvest_req)
    return _barrier.BarrierProblem(mats=np.concatenate([B, B]), coef=np.concatenate([_sinr_coef(sc), harvest_coef]),
                                   trace_weight=1.0, z_weight=np.zeros(0), rows=rows)


def _sinr_only_problem(sc: _Scaled) -> _barrier.BarrierProblem:
    """SINR rows with total noise ``sigma^2 + delta^2`` (the ratio fixed at one)."""
    K = sc.Hr.shape[1]
    rows = _barrier.LinearRows(K, 0, terms=lambda z: (-np.ones(K), np.zeros((K, 0)), np.zeros((K, 0))),
                               change=lambda z, dz: np.zeros(K))
    return _barrier.BarrierProblem(mats=_outer_mats(sc.Hr), coef=_sinr_coef(sc), trace_weight=1.0,
                                   z_weight=np.zeros(0), rows=rows)


def _scaled(instance: SystemInstance, targets: Targets, rank_tol: float) -> _Scaled:
    H = instance.channels
    Q = _range_basis(H, rank_tol)
    eta = float(np.max(np.linalg.norm(H, axis=0)))
    return _Scaled(
        Q=Q, Hr=Q.conj().T @ H / eta, eta=eta, power=1.0, sinr=targets.sinr,
        sigma2=instance.antenna_noise, delta2=instance.id_noise,
        harvest_req=targets.harvest / instance.eh_efficiency,
    )


def _phase_one(sc: _Scaled, settings: _barrier.BarrierSettings):
    """Maximise the worst normalised SINR-row margin ``tau`` over ``sum tr Y <= 1``.

    Returns ("feasible", Y) as soon as an iterate has tau > 0, or
    ("infeasible", certificate) once the multipliers prove tau* < 0.
    """
    r, K = sc.Hr.shape
    B = _outer_mats(sc.Hr)
    norms2 = np.sum(np.abs(sc.Hr) ** 2, axis=0)
    coef = np.vstack([-np.ones((K, K)) + np.diag(1.0 / sc.sinr + 1.0), -np.ones((1, K))])
    mats = np.concatenate([B, np.eye(r)[None].astype(complex)])

    def terms(z):
        f = np.r_[-z[0] * norms2, 1.0]
        df = np.r_[-norms2, 0.0][:, None]
        return f, df, np.zeros((K + 1, 1))

    rows = _barrier.LinearRows(K + 1, 1, terms=terms, change=lambda z, dz: np.r_[-dz[0] * norms2, 0.0])
    problem = _barrier.BarrierProblem(mats=mats, coef=coef, trace_weight=0.0, z_weight=np.array([-1.0]), rows=rows)
    Y0 = np.tile(np.eye(r, dtype=complex) / (2 * K * r), (K, 1, 1))
    base = _barrier.row_values(problem, Y0)[:K] / norms2
    tau0 = base.min() - max(1.0, abs(base.min()))
    outcome: dict = {}

    def stop(state):
        if state.z[0] > 0:
            outcome["feasible"] = state.X.copy()
            return True
        y = 1.0 / (state.t * state.rows[:K])
        y = y / (y @ norms2)
        Bk = _sinr_dual_forms(sc.Hr, sc.sinr, y)
        min_eig = min(np.linalg.eigvalsh(b)[0] for b in Bk)
        if min_eig > 0:
            outcome["infeasible"] = InfeasibilityCertificate(weights=y, min_eigenvalue=float(min_eig))
            return True
        if problem.barrier_parameter / state.t < 1e-13:
            outcome["boundary"] = float(state.z[0])
            return True
        return False

    state = _barrier.solve(problem, Y0, np.array([tau0]), settings, stop)
    if "feasible" in outcome:
        return "feasible", outcome["feasible"], state
    if "infeasible" in outcome:
        return "infeasible", outcome["infeasible"], state
    return "boundary", outcome.get("boundary", float(state.z[0])), state


def _sinr_dual_forms(Hr: np.ndarray, sinr: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``sum_{j != k} y_j h_j h_j^H - (y_k / gamma_k) h_k h_k^H`` for every k."""
    total = (Hr * y) @ Hr.conj().T
    K = Hr.shape[1]
    return np.array([total - (y[k] / sinr[k] + y[k]) * np.outer(Hr[:, k], Hr[:, k].conj()) for k in range(K)])


def _lifted_start(V: np.ndarray, total_power: float, sc: _Scaled, inflation: float) -> np.ndarray:
    X = np.einsum("ak,bk->kab", V, V.conj())
    X += 1e-6 * np.sum(np.abs(V) ** 2, axis=0)[:, None, None] * np.eye(V.shape[0])
    sc.power = total_power
    Y = inflation * sc.reduce(X)
    return 0.5 * (Y + Y.conj().transpose(0, 2, 1))


def _start_from_sinr_opt(instance, targets, sc: _Scaled, options: SdrSolveOptions):
    try:
        sol = solve_sinr_opt(instance, targets)
    except SolverError:
        return None
    return _lifted_start(sol.beamformers, sol.total_power, sc, options.init_inflation)


def _interior(problem: _barrier.BarrierProblem, Y: np.ndarray) -> bool:
    state = problem.rows.init(_barrier.row_values(problem, Y), np.zeros(0))
    return np.isfinite(problem.rows.value(state, np.zeros(0)))


def _start_from_phase_one(Y: np.ndarray, sc: _Scaled) -> np.ndarray:
    """Scale a phase-1 point (all SINR forms positive) until every user has slack >= 1/2."""
    problem = _jbps_problem(sc)
    for _ in range(200):
        alpha, beta, s = problem.rows.init(_barrier.row_values(problem, Y), np.zeros(0))
        if np.all(alpha > 0) and np.all(beta > 0) and np.all(s >= 0.5):
            return Y
        Y = 2.0 * Y
    raise _barrier.BarrierFailure("could not scale the phase-1 point into the interior")


def _polish_residuals(x, H, targets, sigma2, delta2, zeta):
    """KKT residuals of the rank-one structure in terms of ``(log lambda, log mu, logit rho, log p)``.

    For multipliers ``(lambda, mu)`` the beam of user k spans the null space of
    ``A_k``, i.e. ``w_k ~ M^{-1} h_k`` with ``M = I + sum_j (lambda_j - mu_j) h_j h_j^H``.
    """
    K = H.shape[1]
    lam, mu, p = np.exp(x[:K]), np.exp(x[K:2 * K]), np.exp(x[3 * K:])
    rho, rho_c = 1.0 / (1.0 + np.exp(-x[2 * K:3 * K])), 1.0 / (1.0 + np.exp(x[2 * K:3 * K]))
    gamma, e = targets.sinr, targets.harvest
    M = np.eye(H.shape[0]) + (H * (lam - mu)) @ H.conj().T
    W = np.linalg.solve(M, H)
    quad = np.real(np.sum(H.conj() * W, axis=0))  # h_k^H M^{-1} h_k
    W = W / np.linalg.norm(W, axis=0)
    G = np.abs(H.conj().T @ W) ** 2 * p  # G[k, j] = p_j |h_k^H w_j|^2
    signal = np.diag(G) / gamma
    interference = G.sum(axis=1) - np.diag(G)
    r_null = lam * (1.0 + 1.0 / gamma) * quad - 1.0
    r_sinr = (signal - interference - sigma2 - delta2 / rho) / signal
    r_harvest = (G.sum(axis=1) + sigma2) * zeta * rho_c / e - 1.0
    r_stat = lam * delta2 * rho_c**2 * zeta / (mu * rho**2 * e) - 1.0
    return np.concatenate([r_null, r_sinr, r_harvest, r_stat]), W, rho, rho_c


def _polish(instance: SystemInstance, targets: Targets, X, rho, lambdas, mus):
    """Newton refinement of a barrier KKT point on the rank-one manifold.

    Returns ``(X, rho, lambdas, mus)`` or None. The result is only accepted
    when the residuals vanish to working precision and every dual matrix is
    PSD, which certifies it as a relaxation optimum in its own right.
    """
    H = instance.channels
    K = H.shape[1]
    args = (H, targets, instance.antenna_noise, instance.id_noise, instance.eh_efficiency)
    p0 = np.einsum("kaa->k", X).real
    x0 = np.concatenate([np.log(lambdas), np.log(mus), np.log(rho) - np.log1p(-rho), np.log(p0)])
    if not np.all(np.isfinite(x0)):
        return None
    sol = optimize.root(lambda x: _polish_residuals(x, *args)[0], x0, method="hybr", options={"xtol": 1e-15})
    res, W, rho_new, _ = _polish_residuals(sol.x, *args)
    # The null rows cancel 1 + (lambda - mu)|h|^2-type terms when a harvest row is
    # priced near 1/|h|^2, so their floor sits above the other rows'.
    if not np.all(np.isfinite(res)) or np.max(np.abs(res[:K])) > 1e-9 or np.max(np.abs(res[K:])) > 1e-11:
        return None
    lam, mu, p = np.exp(sol.x[:K]), np.exp(sol.x[K:2 * K]), np.exp(sol.x[3 * K:])
    A = dual_matrices(H, targets.sinr, lam, mu)
    for k in range(K):
        eigs = np.linalg.eigvalsh(A[k])
        if eigs[0] < -1e-9 * max(1.0, abs(eigs[-1])):
            return None
    X_new = np.einsum("k,ak,bk->kab", p, W, W.conj())
    return X_new, rho_new, lam, mu


# Rank margins this close to zero are treated as sitting on the feasibility boundary.
_BOUNDARY_MARGIN = 1e-6


def _fail(reason: str, **info) -> SdrRelaxationSolution:
    return SdrRelaxationSolution(X=None, rho=None, objective=float("nan"),
                                 status=SdrStatus.NUMERICAL_FAILURE, info={"reason": reason, **info})


def solve_relaxation(instance: SystemInstance, targets: Targets, options: SdrSolveOptions = SdrSolveOptions()) -> SdrRelaxationSolution:
    """Solve the relaxation; the status field reports Optimal, Infeasible or NumericalFailure."""
    if targets.num_users != instance.num_users:
        raise ValueError("targets and instance disagree on the number of users")
    started = time.perf_counter()
    margin = is_feasible(targets.sinr, instance.channels, options.rank_tol).margin

    def _fail_near_boundary(reason: str, **info) -> SdrRelaxationSolution:
        if abs(margin) <= _BOUNDARY_MARGIN:
            reason = f"{reason} (feasibility boundary: rank margin {margin:.3g})"
        return _fail(reason, **info)

    sc = _scaled(instance, targets, options.rank_tol)
    settings = _barrier.BarrierSettings(t_factor=options.t_factor, gap_tol=options.gap_tol,
                                        max_newton=options.max_iterations)
    Y0 = _start_from_sinr_opt(instance, targets, sc, options)
    init = "sinr-opt"
    phase_one_steps = 0
    if Y0 is None or not _interior(_jbps_problem(sc), Y0):
        init = "phase-1"
        sc.power = 1.0
        try:
            verdict, payload, p1 = _phase_one(sc, settings)
            phase_one_steps = p1.newton_steps
            if verdict == "infeasible":
                return SdrRelaxationSolution(X=None, rho=None, objective=float("nan"), status=SdrStatus.INFEASIBLE,
                                             infeasibility=payload, info={"newton_steps": phase_one_steps})
            if verdict == "boundary":
                return _fail("feasibility boundary: worst SINR margin converged to zero", margin=payload)
            Y = _start_from_phase_one(payload, sc)
        except (_barrier.BarrierFailure, np.linalg.LinAlgError) as exc:
            return _fail_near_boundary(f"phase 1: {exc}")
        power = float(np.einsum("jaa->", Y).real)
        sc.power *= power
        Y0 = Y / power
    problem = _jbps_problem(sc)
    none = np.zeros(0)
    # Start roughly on the central path: duality-gap estimate equal to the objective.
    settings.t0 = problem.barrier_parameter / max(_barrier.objective(problem, Y0, none), 1e-300)
    settings.max_newton = max(1, options.max_iterations - phase_one_steps)
    barrier = "converged"
    try:
        state = _barrier.solve(problem, Y0, none, settings)
    except (_barrier.BarrierFailure, np.linalg.LinAlgError) as exc:
        last = getattr(exc, "last_center", None)
        # Past this gap the centered point is still a good polishing start.
        if not options.polish or last is None or \
                problem.barrier_parameter / last.t > 1e-3 * _barrier.objective(problem, last.X, none):
            return _fail_near_boundary(str(exc), init=init)
        state, barrier = last, f"stalled: {exc}"

    X = sc.lift(state.X)
    rho = problem.rows.split(state.rows)
    lam_n, mu_n = problem.rows.multipliers(state.rows, state.t)
    lambdas = lam_n * sc.power / sc.sinr_scale
    mus = mu_n * sc.power / sc.harvest_req
    barrier_ratio = max(_eigen_ratio(Xk) for Xk in X)
    polished = _polish(instance, targets, X, rho, lambdas, mus) if options.polish else None
    if polished is not None:
        X, rho, lambdas, mus = polished
    elif barrier != "converged":
        return _fail_near_boundary(f"barrier {barrier}; polishing failed", init=init)
    A = dual_matrices(instance.channels, targets.sinr, lambdas, mus)
    cert = KktCertificate(lambdas=lambdas, mus=mus, dual_matrices=A,
                          residuals=_residuals(instance, targets, X, rho, lambdas, mus, A))
    for arr in (X, rho, lambdas, mus, A):
        arr.setflags(write=False)
    return SdrRelaxationSolution(
        X=X, rho=rho, objective=float(np.einsum("kaa->", X).real), status=SdrStatus.OPTIMAL, certificate=cert,
        info={"init": init, "newton_steps": state.newton_steps + phase_one_steps, "barrier": barrier,
              "barrier_t": state.t, "barrier_rank_ratio": barrier_ratio, "polished": polished is not None,
              "time_s": time.perf_counter() - started},
    )


def _eigen_ratio(X_k: np.ndarray) -> float:
    w = np.linalg.eigvalsh(X_k)
    return max(float(w[-2]), 0.0) / float(w[-1]) if len(w) > 1 else 0.0


def _constraint_terms(instance: SystemInstance, targets: Targets, X: np.ndarray, rho: np.ndarray):
    """Per-user (signal/gamma, interference, total received, harvest requirement) from ``X``."""
    H = instance.channels
    q = np.einsum("ak,jab,bk->kj", H.conj(), X, H).real  # q[k, j] = h_k^H X_j h_k
    signal = np.diag(q) / targets.sinr
    interference = q.sum(axis=1) - np.diag(q)
    req = targets.harvest / (instance.eh_efficiency * (1.0 - rho))
    return q, signal, interference, req


def _residuals(instance, targets, X, rho, lambdas, mus, A) -> dict:
    sigma2, delta2 = instance.antenna_noise, instance.id_noise
    q, signal, interference, req = _constraint_terms(instance, targets, X, rho)
    sinr_slack = (signal - interference - sigma2 - delta2 / rho) / signal
    harvest_slack = (q.sum(axis=1) + sigma2 - req) / req
    lam_term = lambdas * delta2 / rho**2
    mu_term = mus * req / (1.0 - rho)
    stationarity = np.abs(lam_term - mu_term) / np.maximum(lam_term, mu_term)
    comp = np.array([np.linalg.norm(A[k] @ X[k]) / (1.0 + np.linalg.norm(X[k])) for k in range(len(rho))])
    psd = np.array([max(0.0, -np.linalg.eigvalsh(A[k])[0]) for k in range(len(rho))])
    return {
        "stationarity": float(stationarity.max()),
        "complementarity": float(comp.max()),
        "psd_violation": float(psd.max()),
        "tightness": float(max(np.abs(sinr_slack).max(), np.abs(harvest_slack).max())),
    }


def verify_kkt(primal: SdrRelaxationSolution, certificate: KktCertificate, instance: SystemInstance,
               targets: Targets, tol: float = 1e-6, tol_strict: float = 1e-12) -> KktReport:
    """Recheck the optimality conditions from scratch; never raises on a failed check.

    Positivity is tested on the dimensionless ``lambda_k ||h_k||^2`` and
    ``mu_k ||h_k||^2`` against ``tol_strict``, separate from ``tol``: a harvest
    row that is tight but barely priced has a genuinely small multiplier.
    """
    try:
        X, rho = primal.X, primal.rho
        lam, mu = np.asarray(certificate.lambdas), np.asarray(certificate.mus)
        H = instance.channels
        n, K = H.shape
        A = dual_matrices(H, targets.sinr, lam, mu)
        identity = float(np.max(np.abs(A - certificate.dual_matrices)))
        res = _residuals(instance, targets, X, rho, lam, mu, A)
        min_eigs = np.array([np.linalg.eigvalsh(A[k])[0] for k in range(K)])
        comp = np.array([np.linalg.norm(A[k] @ X[k]) / (1.0 + np.linalg.norm(X[k])) for k in range(K)])
        q, signal, interference, req = _constraint_terms(instance, targets, X, rho)
        sinr_rel = np.abs(signal - interference - instance.antenna_noise - instance.id_noise / rho) / signal
        harvest_rel = np.abs(q.sum(axis=1) + instance.antenna_noise - req) / req
        norms2 = np.sum(np.abs(H) ** 2, axis=0)
        lam_n, mu_n = lam * norms2, mu * norms2
        ranks = []
        for k in range(K):
            s = np.linalg.svd(A[k], compute_uv=False)
            ranks.append(int(np.sum(s > tol * s[0])) if s[0] > 0 else 0)
        values = {
            "min_eigenvalue": float(min_eigs.min()),
            "complementarity": float(comp.max()),
            "sinr_tightness": float(sinr_rel.max()),
            "harvest_tightness": float(harvest_rel.max()),
            "min_scaled_lambda": float(lam_n.min()),
            "min_scaled_mu": float(mu_n.min()),
            "ranks": ranks,
            "stationarity": res["stationarity"],
            "identity": identity,
        }
        return KktReport(
            psd=bool(np.all(min_eigs >= -tol)),
            complementarity=bool(np.all(comp <= tol)),
            tightness=bool(np.all(sinr_rel <= tol) and np.all(harvest_rel <= tol)),
            positivity=bool(np.all(lam_n >= tol_strict) and np.all(mu_n >= tol_strict)),
            rank=all(r == n - 1 for r in ranks),
            values=values,
        )
    except Exception as exc:  # noqa: BLE001 - report, never throw
        return KktReport(False, False, False, False, False, {"error": repr(exc)})


def extract_rank_one(X_k: np.ndarray, rank_one_tol: float = 1e-6) -> tuple[np.ndarray, float]:
    """Principal component ``sqrt(l1) u1`` of ``X_k`` and the ratio ``l2/l1``.

    The global phase is fixed so the largest-modulus entry is real and nonnegative.
    """
    X_k = np.asarray(X_k, dtype=complex)
    w, U = np.linalg.eigh(0.5 * (X_k + X_k.conj().T))
    if not w[-1] > 0:
        raise ValueError("X_k must have positive trace")
    ratio = max(float(w[-2]), 0.0) / float(w[-1]) if len(w) > 1 else 0.0
    if ratio > rank_one_tol:
        raise RankOneViolation(ratio, rank_one_tol)
    v = np.sqrt(w[-1]) * U[:, -1]
    i = int(np.argmax(np.abs(v)))
    if v[i] != 0:
        v = v * (np.conj(v[i]) / abs(v[i]))
        v[i] = abs(v[i])
    return v, ratio


def solve_jbps_optimal(instance: SystemInstance, targets: Targets, options: SdrSolveOptions = SdrSolveOptions()) -> JbpsSolution:
    verdict = is_feasible(targets.sinr, instance.channels, options.rank_tol)
    if not verdict.feasible:
        raise ProblemInfeasible(f"SINR load {verdict.load:.6g} exceeds channel rank {verdict.rank}")
    relax = solve_relaxation(instance, targets, options)
    if relax.status is SdrStatus.INFEASIBLE:
        raise ProblemInfeasible("relaxation infeasible")
    if relax.status is SdrStatus.NUMERICAL_FAILURE:
        raise NumericalFailure(relax.info.get("reason", "relaxation failed"))
    vs, ratios = zip(*(extract_rank_one(Xk, options.rank_one_tol) for Xk in relax.X))
    V = np.column_stack(vs)
    return make_solution(
        instance, V, relax.rho, Method.SDR_OPTIMAL,
        relaxation_objective=relax.objective, certificate=relax.certificate,
        rank_one_ratios=np.array(ratios), relaxation=relax,
    )


def solve_sinr_only_relaxation(instance: SystemInstance, sinr, options: SdrSolveOptions = SdrSolveOptions()) -> float:
    """Minimum power of the SDR with harvest rows dropped and ``rho = 1`` (test oracle).

    Started from the duality solution inflated by ``init_inflation``; the
    barrier path then converges to the relaxation optimum independently,
    to a relative gap of about 1e-6 (the precision floor of a pure primal
    barrier method in double precision).
    """
    targets = Targets(sinr=sinr, harvest=np.ones(instance.num_users))
    sc = _scaled(instance, targets, options.rank_tol)
    base = solve_sinr_only(instance, targets.sinr)
    Y0 = _lifted_start(base.beamformers, base.total_power, sc, options.init_inflation)
    problem = _sinr_only_problem(sc)
    none = np.zeros(0)
    settings = _barrier.BarrierSettings(t_factor=options.t_factor, gap_tol=1e-10, max_newton=options.max_iterations)
    settings.t0 = problem.barrier_parameter / _barrier.objective(problem, Y0, none)
    try:
        state = _barrier.solve(problem, Y0, none, settings)
    except _barrier.BarrierFailure as exc:
        # Centering hits the double-precision floor (relative gap ~1e-7); the last
        # center is within its gap of the optimum.
        state = exc.last_center
        if state is None or problem.barrier_parameter / state.t > 1e-5 * _barrier.objective(problem, state.X, none):
            raise NumericalFailure(f"SINR-only relaxation: {exc}") from exc
    return float(np.einsum("kaa->", sc.lift(state.X)).real)
