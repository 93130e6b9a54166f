"""Acceptance criteria 1-10, one pass/fail line each (see the terminal summary)."""

import filecmp
import itertools
import time

import numpy as np
import pytest

from jbps import (
    ChannelConfig, LinkParams, Method, SdrStatus, SystemInstance, Targets, check_solution, generate_instance,
    is_feasible, solve_jbps_optimal, solve_relaxation, solve_sinr_only, solve_sinr_opt, solve_zf, verify_kkt,
    zf_ps_ratio,
)
from jbps.cli import main
from jbps.harness import Status, SweepAxis, SweepConfig, run_sweep
from jbps.zf_solver import zf_ps_split
from oracles import rank_deficient_channels, single_user_power

SUITE_SEED = 2025
SWEEP_SEED = 2024


def _eig_ratio(Xk):
    w = np.linalg.eigvalsh(Xk)
    return max(w[-2], 0.0) / w[-1]


@pytest.fixture(scope="module")
def suite():
    """108 instances: K in {2,3,4}, N_t in {4,6}, gamma in {0,10,20} dB, e in {-20,-10,0} dBm, two draws each."""
    cases = []
    grid = itertools.product((2, 3, 4), (4, 6), (0.0, 10.0, 20.0), (-20.0, -10.0, 0.0), (0, 1))
    for K, n, gamma_db, e_dbm, draw in grid:
        cfg = ChannelConfig(num_antennas=n, user_directions=ChannelConfig().user_directions[:K], seed=SUITE_SEED)
        inst = generate_instance(cfg, LinkParams(), draw)
        targets = Targets.uniform(K, gamma_db, e_dbm)
        relax = solve_relaxation(inst, targets)
        sol = solve_jbps_optimal(inst, targets)
        cases.append({
            "key": (K, n, gamma_db, e_dbm, draw), "instance": inst, "targets": targets, "relax": relax, "sol": sol,
            "kkt": verify_kkt(relax, relax.certificate, inst, targets, 1e-6),
            "zf": solve_zf(inst, targets).total_power, "sinr": solve_sinr_opt(inst, targets).total_power,
            "fp_iterations": solve_sinr_only(inst, targets.sinr).iterations,
        })
    return cases


@pytest.fixture(scope="module")
def sinr_sweep_records():
    config = SweepConfig(axis=SweepAxis.SINR_TARGET, values=(0.0, 40.0), harvest_dbm=0.0, num_draws=100,
                         channel=ChannelConfig(seed=SWEEP_SEED))
    return run_sweep(config)


def _by_cell(records):
    cells = {}
    for r in records:
        cells.setdefault((r.axis_value, r.draw), {})[r.method] = r
    return cells


def _mean(records, value, method):
    vals = [r.total_power for r in records if r.axis_value == value and r.method is method and r.status is Status.OPTIMAL]
    return float(np.mean(vals)), len(vals)


def test_criterion_1_rank_one(suite, criterion):
    assert len(suite) >= 100
    statuses = {c["relax"].status for c in suite}
    worst = max(_eig_ratio(Xk) for c in suite if c["relax"].X is not None for Xk in c["relax"].X)
    ok = statuses == {SdrStatus.OPTIMAL} and worst <= 1e-6
    criterion(1, ok, f"{len(suite)} instances, max eigenvalue ratio {worst:.2e} (<= 1e-6)")
    assert ok


def test_criterion_2_certified_optimality(suite, criterion):
    gaps = [(c["sol"].total_power - c["relax"].objective) / c["relax"].objective for c in suite]
    failed = [c["key"] for c in suite if not c["kkt"].passed]
    ok = max(gaps) <= 1e-6 and not failed
    criterion(2, ok, f"max extraction gap {max(gaps):.2e} (<= 1e-6), KKT failures {len(failed)}/{len(suite)}")
    assert ok, failed


def test_criterion_3_tight_constraints(suite, criterion):
    worst = 0.0
    for c in suite:
        rep = check_solution(c["instance"], c["targets"], c["sol"])
        worst = max(worst, np.abs(rep.sinr_slack).max(), np.abs(rep.harvest_slack).max())
    ok = worst <= 1e-6
    criterion(3, ok, f"max |slack| {worst:.2e} (<= 1e-6)")
    assert ok


def test_criterion_4_ordering(suite, sinr_sweep_records, criterion):
    violations = 0
    checked = 0
    for c in suite:
        opt = c["sol"].total_power
        for p in (c["zf"], c["sinr"]):
            checked += 1
            violations += opt > p * (1 + 1e-6)
    for cell in _by_cell(sinr_sweep_records).values():
        if all(r.status is Status.OPTIMAL for r in cell.values()):
            opt = cell[Method.SDR_OPTIMAL].total_power
            for m in (Method.ZERO_FORCING, Method.SINR_OPTIMAL):
                checked += 1
                violations += opt > cell[m].total_power * (1 + 1e-6)
    sinr_mean, n_sinr = _mean(sinr_sweep_records, 0.0, Method.SINR_OPTIMAL)
    zf_mean, n_zf = _mean(sinr_sweep_records, 0.0, Method.ZERO_FORCING)
    ok = violations == 0 and n_sinr == n_zf == 100 and sinr_mean < zf_mean
    criterion(4, ok, f"{violations} ordering violations in {checked} comparisons; at 0 dB/0 dBm mean "
                     f"sinr-opt {sinr_mean:.4e} W < zf {zf_mean:.4e} W")
    assert ok


def test_criterion_5_asymptotic_gap(sinr_sweep_records, criterion):
    gaps = {}
    for value in (0.0, 40.0):
        opt, n_opt = _mean(sinr_sweep_records, value, Method.SDR_OPTIMAL)
        assert n_opt == 100
        for m in (Method.ZERO_FORCING, Method.SINR_OPTIMAL):
            gaps[value, m] = _mean(sinr_sweep_records, value, m)[0] / opt - 1
    ok = all(gaps[40.0, m] < 0.01 and gaps[40.0, m] < gaps[0.0, m] for m in (Method.ZERO_FORCING, Method.SINR_OPTIMAL))
    detail = ", ".join(f"{m.value} {gaps[0.0, m]:.2%} -> {gaps[40.0, m]:.3%}"
                       for m in (Method.ZERO_FORCING, Method.SINR_OPTIMAL))
    criterion(5, ok, f"mean gap 0 dB -> 40 dB: {detail}")
    assert ok


def test_criterion_6_antenna_scaling(criterion):
    config = SweepConfig(axis=SweepAxis.NUM_ANTENNAS, values=(4, 5, 6, 7, 8), sinr_db=10.0, harvest_dbm=-10.0,
                         num_draws=100, methods=(Method.SDR_OPTIMAL,), channel=ChannelConfig(seed=SWEEP_SEED))
    records = run_sweep(config)
    means = [_mean(records, n, Method.SDR_OPTIMAL) for n in config.values]
    ok = all(cnt == 100 for _, cnt in means) and all(b[0] < a[0] for a, b in zip(means, means[1:]))
    criterion(6, ok, "mean optimal power [W] N_t=4..8: " + ", ".join(f"{m:.4e}" for m, _ in means))
    assert ok


def test_criterion_7_single_user(criterion):
    rng = np.random.default_rng(77)
    worst = 0.0
    for i in range(50):
        n = int(rng.integers(2, 9))
        gamma_db, e_dbm = rng.uniform(0, 30), rng.uniform(-20, 0)
        cfg = ChannelConfig(num_antennas=n, user_directions=(float(rng.uniform(-90, 90)),), seed=700)
        inst = generate_instance(cfg, LinkParams(), i)
        targets = Targets.uniform(1, gamma_db, e_dbm)
        ref, _ = single_user_power(inst.channels[:, 0], targets.sinr[0], targets.harvest[0], 1e-10, 1e-8, 0.5)
        for solve in (solve_jbps_optimal, solve_zf, solve_sinr_opt):
            worst = max(worst, abs(solve(inst, targets).total_power / ref - 1))
    ok = worst <= 1e-6
    criterion(7, ok, f"50 single-user instances, max relative deviation from closed form {worst:.2e}")
    assert ok


def test_criterion_8_defining_equation(criterion):
    rng = np.random.default_rng(88)
    alpha, beta = 10.0 ** rng.uniform(-3, 6, 1000), 10.0 ** rng.uniform(-3, 6, 1000)
    rho, comp = zf_ps_split(alpha, beta)
    public = zf_ps_ratio(alpha, beta)
    resid = np.abs(alpha / comp - beta / rho - 1) / np.maximum.reduce([alpha / comp, beta / rho, np.ones(1000)])
    regime = zf_ps_ratio(1e-4 / (0.5 * 11 * 1e-10), 10 * 1e-8 / (11 * 1e-10))
    ok = bool(np.array_equal(public, rho) and resid.max() <= 1e-9 and np.all((rho > 0) & (rho < 1))
              and f"{regime:.4e}" == "4.9975e-04")
    criterion(8, ok, f"1000 pairs, max relative residual {resid.max():.2e}; regime value {regime:.8e}")
    assert ok


def test_criterion_8_regime_approximation(criterion):
    gamma, delta2, sigma2, zeta, e = 10.0, 1e-8, 1e-10, 0.5, 1e-4
    rho = zf_ps_ratio(e / (zeta * (gamma + 1) * sigma2), gamma * delta2 / ((gamma + 1) * sigma2))
    approx = gamma * delta2 / (e / zeta + gamma * delta2)
    rel = abs(rho / approx - 1)
    ok = rel <= 1e-6
    criterion("8 (approximation)", ok, f"exact {rho:.9e} vs noise-free approximation {approx:.9e}: "
                                       f"relative difference {rel:.2e} (target 1e-6)")
    assert ok


def test_criterion_9_feasibility_equivalence(criterion):
    rng = np.random.default_rng(99)
    shapes = [(3, 1), (3, 2), (4, 1), (4, 2), (4, 3)]
    factors = 10.0 ** np.linspace(-0.3, 0.3, 6)
    mismatches, excluded, compared = [], [], 0
    for (K, r), f in itertools.product(shapes, factors):
        H = rank_deficient_channels(rng, 4, K, r)
        inst = SystemInstance(channels=H, antenna_noise=[1e-10] * K, id_noise=[1e-8] * K, eh_efficiency=[0.5] * K)
        gamma = f * r / (K - r)
        targets = Targets(sinr=np.full(K, gamma), harvest=np.full(K, 1e-5))
        verdict = is_feasible(targets.sinr, H)
        if abs(verdict.margin) <= 1e-3:
            excluded.append((K, r, round(verdict.margin, 6)))
            continue
        compared += 1
        status = solve_relaxation(inst, targets).status
        expected = SdrStatus.OPTIMAL if verdict.feasible else SdrStatus.INFEASIBLE
        if status is not expected:
            mismatches.append((K, r, verdict.margin, status.value))
    ok = not mismatches and compared + len(excluded) == 30
    criterion(9, ok, f"{compared} compared, {len(mismatches)} mismatches, {len(excluded)} boundary cases excluded "
                     f"{excluded}")
    assert ok, mismatches


def test_criterion_10_determinism_and_speed(suite, tmp_path, criterion):
    cfg = tmp_path / "det.yaml"
    cfg.write_text("axis: sinr_db\nvalues: [0, 20]\nharvest_dbm: -10\nnum_draws: 4\nseed: 7\n")
    outs = [tmp_path / "a", tmp_path / "b", tmp_path / "c"]
    codes = [main(["sweep", str(cfg), "--out", str(outs[0])]), main(["sweep", str(cfg), "--out", str(outs[1])]),
             main(["sweep", str(cfg), "--out", str(outs[2]), "--workers", "2"])]
    identical = all(filecmp.cmp(outs[0] / name, o / name, shallow=False)
                    for o in outs[1:] for name in ("records.csv", "aggregate.csv"))
    times = []
    for draw in range(10):
        inst = generate_instance(ChannelConfig(num_antennas=8, seed=SWEEP_SEED), LinkParams(), draw)
        started = time.perf_counter()
        solve_jbps_optimal(inst, Targets.uniform(4, 10.0, -10.0))
        times.append(time.perf_counter() - started)
    iters = np.array([c["fp_iterations"] for c in suite])
    share = float(np.mean(iters <= 50))
    ok = codes == [0, 0, 0] and identical and max(times) < 5.0 and share >= 0.95
    criterion(10, ok, f"sweep CSV byte-identical across runs/workers: {identical}; max K=4,N_t=8 solve "
                      f"{max(times):.3f} s; fixed point <= 50 iterations on {share:.0%} (max {iters.max()})")
    assert ok
