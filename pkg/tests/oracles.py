"""Independent reference computations used only by the tests.

Nothing here calls into the package's solvers; they re-derive the same
quantities by plain loops, polynomial roots, or a generic conic solver.
"""

import cvxpy as cp
import numpy as np


def naive_sinr(H, V, rho, sigma2, delta2, k):
    K = H.shape[1]
    gains = []
    for j in range(K):
        acc = 0j
        for i in range(H.shape[0]):
            acc += np.conj(H[i, k]) * V[i, j]
        gains.append(abs(acc) ** 2)
    interference = sum(gains[j] for j in range(K) if j != k)
    return rho * gains[k] / (rho * interference + rho * sigma2 + delta2)


def naive_harvest(H, V, rho, sigma2, zeta, k):
    total = 0.0
    for j in range(H.shape[1]):
        acc = 0j
        for i in range(H.shape[0]):
            acc += np.conj(H[i, k]) * V[i, j]
        total += abs(acc) ** 2
    return zeta * (1.0 - rho) * (total + sigma2)


def single_user_power(h, gamma, e, sigma2, delta2, zeta):
    """Minimum power for one user: both constraints tight, rho from the quadratic in rho.

    gamma (sigma2 + delta2/rho) = e/(zeta (1-rho)) - sigma2, times zeta rho (1-rho).
    """
    coeffs = [-zeta * (gamma + 1) * sigma2, zeta * (gamma + 1) * sigma2 - gamma * delta2 * zeta - e, gamma * delta2 * zeta]
    roots = np.roots(coeffs)
    rho = [r.real for r in roots if abs(r.imag) < 1e-300 + 1e-12 * abs(r) and 0 < r.real < 1]
    assert len(rho) == 1
    rho = rho[0]
    poly, dpoly = np.poly1d(coeffs), np.poly1d(coeffs).deriv()
    for _ in range(3):
        rho -= poly(rho) / dpoly(rho)
    gain = gamma * (sigma2 + delta2 / rho)
    return gain / np.vdot(h, h).real, rho


def _scaled_hn(H, sigma2, delta2):
    eta = np.max(np.linalg.norm(H, axis=0))
    scale = (sigma2[0] + delta2[0]) / eta**2
    return H / eta, scale, eta


def cvx_relaxation(instance, targets):
    """Relaxed JBPS problem through cvxpy/Clarabel, with hyperbolic terms via inv_pos."""
    H, sigma2, delta2, zeta = instance.channels, instance.antenna_noise, instance.id_noise, instance.eh_efficiency
    Hn, scale, eta = _scaled_hn(H, sigma2, delta2)
    n, K = H.shape
    unit = scale * eta**2
    Y = [cp.Variable((n, n), hermitian=True) for _ in range(K)]
    rho = cp.Variable(K)
    cons = [y >> 0 for y in Y] + [rho >= 1e-12, rho <= 1 - 1e-12]
    for k in range(K):
        hk = Hn[:, k:k + 1]
        P = hk @ hk.conj().T
        q = [cp.real(cp.trace(P @ Y[j])) for j in range(K)]
        cons.append(q[k] / targets.sinr[k] - sum(q[j] for j in range(K) if j != k)
                    >= sigma2[k] / unit + delta2[k] / unit * cp.inv_pos(rho[k]))
        cons.append(sum(q) >= targets.harvest[k] / (zeta[k] * unit) * cp.inv_pos(1 - rho[k]) - sigma2[k] / unit)
    prob = cp.Problem(cp.Minimize(sum(cp.real(cp.trace(y)) for y in Y)), cons)
    prob.solve(solver="CLARABEL")
    return prob.status, (prob.value * scale if prob.value is not None else None)


def cvx_sinr_only(instance, sinr):
    """SINR-only power minimisation (noise sigma^2 + delta^2) as a second-order cone program.

    With the phase of h_k^H v_k fixed real, each SINR constraint is a cone:
    sqrt(1 + 1/gamma_k) Re(h_k^H v_k) >= ||[h_k^H V, sqrt(noise_k)]||.
    """
    H = instance.channels
    noise = instance.antenna_noise + instance.id_noise
    eta = np.max(np.linalg.norm(H, axis=0))
    unit = noise[0]
    Hn = H / eta
    n, K = H.shape
    V = cp.Variable((n, K), complex=True)
    t = cp.Variable()
    cons = [cp.norm(cp.vec(V, order="F")) <= t]
    for k in range(K):
        z = Hn[:, k].conj() @ V
        cons += [cp.imag(z[k]) == 0,
                 np.sqrt(1 + 1 / sinr[k]) * cp.real(z[k]) >= cp.norm(cp.hstack([z, np.sqrt(noise[k] / unit)]))]
    prob = cp.Problem(cp.Minimize(t), cons)
    prob.solve(solver="CLARABEL")
    return prob.status, (prob.value**2 * unit / eta**2 if prob.value is not None else None)


def rank_deficient_channels(rng, num_antennas, num_users, rank, amplitude=1e-2):
    A = rng.standard_normal((num_antennas, rank)) + 1j * rng.standard_normal((num_antennas, rank))
    B = rng.standard_normal((rank, num_users)) + 1j * rng.standard_normal((rank, num_users))
    return amplitude * (A @ B) / np.sqrt(2 * rank)
