"""Command-line entry point: ``jbps {feasibility,solve,compare,sweep,generate}``.

Exit codes: 0 success, 2 infeasible targets, 3 solver failure (or a sweep
with at least one NumericalFailure), 4 malformed input file.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import harness
from .channel import DEFAULT_DIRECTIONS_DEG, ChannelConfig, LinkParams, generate_instance
from .feasibility import DEFAULT_RANK_TOL, is_feasible
from .io import InstanceParseError, read_instance, write_instance
from .model import (
    JbpsSolution, Method, ProblemInfeasible, SolverError, Targets, check_solution, db_to_linear, dbm_to_watts,
    linear_to_db, watts_to_dbm,
)
from .sdr_solver import SdrSolveOptions, solve_jbps_optimal, verify_kkt
from .sinr_solver import solve_sinr_opt
from .zf_solver import solve_zf

EXIT_OK, EXIT_INFEASIBLE, EXIT_SOLVER, EXIT_PARSE = 0, 2, 3, 4


def _solve(method: Method, instance, targets, tol: float) -> JbpsSolution:
    if method is Method.SDR_OPTIMAL:
        return solve_jbps_optimal(instance, targets, SdrSolveOptions(kkt_tol=tol))
    if method is Method.ZERO_FORCING:
        return solve_zf(instance, targets)
    return solve_sinr_opt(instance, targets)


def cmd_feasibility(args) -> int:
    instance, targets = read_instance(args.instance)
    sinr = targets.sinr
    if args.sinr_db:
        vals = args.sinr_db if len(args.sinr_db) > 1 else args.sinr_db * instance.num_users
        if len(vals) != instance.num_users:
            print(f"error: --sinr-db needs 1 or {instance.num_users} values", file=sys.stderr)
            return EXIT_PARSE
        sinr = db_to_linear(np.array(vals, dtype=float))
    verdict = is_feasible(sinr, instance.channels, args.rank_tol)
    print(f"sinr load      {verdict.load:.12g}")
    print(f"effective rank {verdict.rank}")
    print(f"margin         {verdict.margin:.12g}")
    print(f"verdict        {'feasible' if verdict.feasible else 'infeasible'}")
    return EXIT_OK if verdict.feasible else EXIT_INFEASIBLE


def _solution_record(instance, targets, sol: JbpsSolution, tol: float) -> dict:
    report = check_solution(instance, targets, sol, tol)
    rec = {
        "method": sol.method.value,
        "status": "Optimal",
        "total_power_w": sol.total_power,
        "total_power_dbm": watts_to_dbm(sol.total_power),
        "ps_ratios": sol.ps_ratios.tolist(),
        "sinr_db": linear_to_db(sol.per_user_sinr).tolist(),
        "harvest_dbm": watts_to_dbm(sol.per_user_harvest).tolist(),
        "max_violation": report.max_violation,
        "beamformers": [[[z.real, z.imag] for z in row] for row in sol.beamformers.tolist()],
    }
    if sol.method is Method.SDR_OPTIMAL:
        relax = sol.info["relaxation"]
        kkt = verify_kkt(relax, relax.certificate, instance, targets, tol)
        rec["certificate"] = {
            "relaxation_power_w": relax.objective,
            "rank_one_ratios": sol.info["rank_one_ratios"].tolist(),
            "kkt_passed": kkt.passed,
            "checks": {"psd": kkt.psd, "complementarity": kkt.complementarity, "tightness": kkt.tightness,
                       "positivity": kkt.positivity, "rank": kkt.rank},
            "lambdas": relax.certificate.lambdas.tolist(),
            "mus": relax.certificate.mus.tolist(),
        }
    return rec


def _print_solution(rec: dict) -> None:
    print(f"method       {rec['method']}")
    print(f"total power  {rec['total_power_dbm']:.6f} dBm ({rec['total_power_w']:.6e} W)")
    print(f"{'user':>4} {'rho':>14} {'SINR [dB]':>12} {'harvest [dBm]':>14}")
    for k, (r, s, e) in enumerate(zip(rec["ps_ratios"], rec["sinr_db"], rec["harvest_dbm"])):
        print(f"{k:>4} {r:>14.6e} {s:>12.6f} {e:>14.6f}")
    print(f"max violation {rec['max_violation']:.3e}")
    cert = rec.get("certificate")
    if cert:
        checks = ", ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in cert["checks"].items())
        print(f"relaxation   {watts_to_dbm(cert['relaxation_power_w']):.6f} dBm")
        print(f"rank-one     max eigenvalue ratio {max(cert['rank_one_ratios']):.3e}")
        print(f"KKT          {'passed' if cert['kkt_passed'] else 'FAILED'} ({checks})")


def cmd_solve(args) -> int:
    instance, targets = read_instance(args.instance)
    method = Method(args.method)
    try:
        sol = _solve(method, instance, targets, args.tol)
    except ProblemInfeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except SolverError as exc:
        print(f"solver failure ({method.value}): {exc}", file=sys.stderr)
        return EXIT_SOLVER
    rec = _solution_record(instance, targets, sol, args.tol)
    if args.json:
        print(json.dumps(rec, indent=1))
    else:
        _print_solution(rec)
    return EXIT_OK


def cmd_compare(args) -> int:
    instance, targets = read_instance(args.instance)
    powers: dict[str, float | None] = {}
    notes = {}
    for method in Method:
        try:
            powers[method.value] = _solve(method, instance, targets, args.tol).total_power
        except SolverError as exc:
            powers[method.value], notes[method.value] = None, f"{type(exc).__name__}: {exc}"
    opt = powers[Method.SDR_OPTIMAL.value]
    rows = []
    for name, p in powers.items():
        gap = None if p is None or opt is None else p / opt - 1.0
        rows.append({"method": name, "power_w": p, "power_dbm": None if p is None else watts_to_dbm(p),
                     "gap_rel": gap, "gap_db": None if gap is None else linear_to_db(1.0 + gap),
                     "note": notes.get(name, "")})
    if args.json:
        print(json.dumps(rows, indent=1))
    else:
        print(f"{'method':<9} {'power [dBm]':>12} {'power [W]':>13} {'gap [dB]':>9}")
        for r in rows:
            if r["power_w"] is None:
                print(f"{r['method']:<9} {'-':>12} {'-':>13} {'-':>9}  {r['note']}")
            else:
                gap = "-" if r["gap_db"] is None else f"{r['gap_db']:.4f}"
                print(f"{r['method']:<9} {r['power_dbm']:>12.6f} {r['power_w']:>13.6e} {gap:>9}")
    if opt is None and any("Infeasible" in n for n in notes.values()):
        return EXIT_INFEASIBLE
    return EXIT_OK if opt is not None else EXIT_SOLVER


def cmd_sweep(args) -> int:
    try:
        config = harness.load_config(args.config)
    except (harness.ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    records = harness.run_sweep(config, workers=args.workers)
    harness.write_csv(records, out / "records.csv", config.record_time)
    harness.write_csv(harness.aggregate(records), out / "aggregate.csv", config.record_time)
    failures = sum(r.status is harness.Status.NUMERICAL_FAILURE for r in records)
    print(f"{len(records)} records -> {out / 'records.csv'}, {out / 'aggregate.csv'}; numerical failures: {failures}")
    return EXIT_SOLVER if failures else EXIT_OK


def cmd_generate(args) -> int:
    directions = tuple(args.directions) if args.directions else DEFAULT_DIRECTIONS_DEG
    config = ChannelConfig(num_antennas=args.num_antennas, user_directions=directions, seed=args.seed)
    instance = generate_instance(config, LinkParams(), args.draw)
    targets = Targets(sinr=np.full(config.num_users, db_to_linear(args.sinr_db)),
                      harvest=np.full(config.num_users, dbm_to_watts(args.harvest_dbm)))
    write_instance(args.out, instance, targets, args.units)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jbps", description="Joint beamforming and power splitting for MISO SWIPT.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("feasibility", help="closed-form feasibility check of the SINR targets")
    p.add_argument("instance", help="instance JSON file")
    p.add_argument("--sinr-db", type=float, nargs="+", help="override SINR targets (one value or one per user)")
    p.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL)
    p.set_defaults(func=cmd_feasibility)

    p = sub.add_parser("solve", help="solve one instance with one method")
    p.add_argument("instance")
    p.add_argument("--method", choices=[m.value for m in Method], default=Method.SDR_OPTIMAL.value)
    p.add_argument("--tol", type=float, default=1e-6, help="constraint / KKT check tolerance")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("compare", help="all three methods side by side with gaps to the optimum")
    p.add_argument("instance")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="Monte-Carlo sweep from a YAML config")
    p.add_argument("config")
    p.add_argument("--out", required=True, help="output directory for records.csv and aggregate.csv")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("generate", help="write a seeded channel draw as an instance file")
    p.add_argument("--out", required=True)
    p.add_argument("--num-antennas", type=int, default=4)
    p.add_argument("--directions", type=float, nargs="+", help="user directions in degrees")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--draw", type=int, default=0)
    p.add_argument("--sinr-db", type=float, default=10.0)
    p.add_argument("--harvest-dbm", type=float, default=-10.0)
    p.add_argument("--units", choices=["linear", "db"], default="linear")
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InstanceParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
