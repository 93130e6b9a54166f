"""Seeded Monte-Carlo sweeps comparing the three beamforming methods.

Each (axis value, draw) cell builds its instance from ``(seed, draw)`` alone
and solves every requested method on it, so cells are independent and can be
spread over worker processes. Results are collated by cell index, which keeps
the record order (axis-major, draw-minor, method-minor) and every power value
identical for any worker count.

Wall-clock times are inherently irreproducible; they are only written when
``record_time`` is set, otherwise the ``time_s`` column is left empty so that
repeated runs produce byte-identical CSV files.
"""

from __future__ import annotations

import csv
import enum
import math
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

from .channel import ChannelConfig, LinkParams, generate_instance
from .model import (
    Method, NumericalFailure, ProblemInfeasible, SolverError, SystemInstance, Targets, check_solution, watts_to_dbm,
    dbm_to_watts,
)
from .sdr_solver import solve_jbps_optimal
from .sinr_solver import solve_sinr_opt
from .zf_solver import ZfInapplicable, solve_zf

RECORD_COLUMNS = ("axis_name", "axis_value", "draw", "method", "status", "power_dbm", "power_watts", "time_s",
                  "max_violation")
AGGREGATE_COLUMNS = ("axis_name", "axis_value", "method", "num_ok", "num_failed", "empty", "mean_power_dbm",
                     "mean_power_watts", "std_power_watts", "mean_time_s")

SOLVERS = {
    Method.SDR_OPTIMAL: solve_jbps_optimal,
    Method.ZERO_FORCING: solve_zf,
    Method.SINR_OPTIMAL: solve_sinr_opt,
}


class ConfigError(ValueError):
    pass


class SweepAxis(str, enum.Enum):
    SINR_TARGET = "sinr_db"
    HARVEST_TARGET = "harvest_dbm"
    NUM_ANTENNAS = "num_antennas"


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    INAPPLICABLE = "Inapplicable"  # ZF with N_t < K or dependent channels
    NUMERICAL_FAILURE = "NumericalFailure"
    TIME_LIMIT = "TimeLimit"


@dataclass(frozen=True)
class SweepConfig:
    axis: SweepAxis
    values: tuple
    channel: ChannelConfig = ChannelConfig()
    link: LinkParams = LinkParams()
    sinr_db: float = 10.0
    harvest_dbm: float = -10.0
    num_draws: int = 100
    methods: tuple[Method, ...] = (Method.SDR_OPTIMAL, Method.ZERO_FORCING, Method.SINR_OPTIMAL)
    time_limit_s: float | None = None
    record_time: bool = False

    def __post_init__(self):
        object.__setattr__(self, "axis", SweepAxis(self.axis))
        object.__setattr__(self, "methods", tuple(Method(m) for m in self.methods))
        vals = tuple(self.values)
        if not vals:
            raise ConfigError("sweep axis values must be nonempty")
        if self.axis is SweepAxis.NUM_ANTENNAS:
            if any(int(v) != v or v < 1 for v in vals):
                raise ConfigError("num_antennas values must be positive integers")
            vals = tuple(int(v) for v in vals)
        else:
            vals = tuple(float(v) for v in vals)
        object.__setattr__(self, "values", vals)
        if int(self.num_draws) < 1:
            raise ConfigError("num_draws must be >= 1")
        if not self.methods:
            raise ConfigError("at least one method is required")
        if self.time_limit_s is not None and not self.time_limit_s > 0:
            raise ConfigError("time_limit_s must be positive")

    def cell(self, value, draw: int) -> tuple[SystemInstance, Targets]:
        """Instance and targets of one (axis value, draw) cell."""
        channel, sinr_db, harvest_dbm = self.channel, self.sinr_db, self.harvest_dbm
        if self.axis is SweepAxis.NUM_ANTENNAS:
            channel = replace(channel, num_antennas=int(value))
        elif self.axis is SweepAxis.SINR_TARGET:
            sinr_db = value
        else:
            harvest_dbm = value
        instance = generate_instance(channel, self.link, draw)
        return instance, Targets.uniform(channel.num_users, sinr_db, harvest_dbm)


@dataclass(frozen=True)
class SweepRecord:
    axis_name: str
    axis_value: float
    draw: int
    method: Method
    status: Status
    total_power: float | None  # watts
    time_s: float = field(compare=False)
    max_violation: float | None = None
    message: str = field(default="", compare=False)


@dataclass(frozen=True)
class AggregateRow:
    axis_name: str
    axis_value: float
    method: Method
    num_ok: int
    num_failed: int
    mean_power_watts: float | None
    std_power_watts: float | None
    mean_time_s: float

    @property
    def empty(self) -> bool:
        return self.num_ok == 0

    @property
    def mean_power_dbm(self) -> float | None:
        return None if self.mean_power_watts is None else watts_to_dbm(self.mean_power_watts)


def solve_record(config: SweepConfig, instance: SystemInstance, targets: Targets, method: Method,
                 value, draw: int) -> SweepRecord:
    """Run one method on one cell; every failure mode ends up in ``status``."""
    started = time.perf_counter()
    power = violation = None
    message = ""
    try:
        solution = SOLVERS[method](instance, targets)
        violation = check_solution(instance, targets, solution).max_violation
        power = solution.total_power
        status = Status.OPTIMAL
        if violation > 1e-6:
            status, message = Status.NUMERICAL_FAILURE, f"constraint violation {violation:.3e}"
    except ProblemInfeasible as exc:
        status, message = Status.INFEASIBLE, str(exc)
    except ZfInapplicable as exc:
        status, message = Status.INAPPLICABLE, str(exc)
    except (NumericalFailure, SolverError, np.linalg.LinAlgError, FloatingPointError) as exc:
        status, message = Status.NUMERICAL_FAILURE, str(exc)
    elapsed = time.perf_counter() - started
    if config.time_limit_s is not None and elapsed > config.time_limit_s and status is Status.OPTIMAL:
        status, message = Status.TIME_LIMIT, f"{elapsed:.3f} s over the {config.time_limit_s} s limit"
    return SweepRecord(config.axis.value, value, draw, method, status, power, elapsed, violation, message)


def _run_cell(args) -> list[SweepRecord]:
    config, value, draw = args
    instance, targets = config.cell(value, draw)
    return [solve_record(config, instance, targets, m, value, draw) for m in config.methods]


def run_sweep(config: SweepConfig, workers: int = 1) -> list[SweepRecord]:
    cells = [(config, v, d) for v in config.values for d in range(config.num_draws)]
    if workers <= 1:
        results = [_run_cell(c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            # map() yields in submission order, which is the collation order.
            results = list(pool.map(_run_cell, cells, chunksize=max(1, len(cells) // (4 * workers))))
    return [r for cell in results for r in cell]


def has_numerical_failure(records) -> bool:
    return any(r.status is Status.NUMERICAL_FAILURE for r in records)


def aggregate(records) -> list[AggregateRow]:
    """Per (axis value, method): mean over Optimal draws in linear watts, failures counted separately."""
    groups: dict = defaultdict(list)
    for r in records:
        groups[(r.axis_name, r.axis_value, r.method)].append(r)
    rows = []
    for (name, value, method), group in groups.items():
        ok = np.array([r.total_power for r in group if r.status is Status.OPTIMAL], dtype=float)
        rows.append(AggregateRow(
            axis_name=name, axis_value=value, method=method,
            num_ok=len(ok), num_failed=len(group) - len(ok),
            mean_power_watts=float(ok.mean()) if len(ok) else None,
            std_power_watts=float(ok.std()) if len(ok) else None,
            mean_time_s=float(np.mean([r.time_s for r in group])),
        ))
    return rows


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, enum.Enum):
        return x.value
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    return "nan" if math.isnan(x) else f"{x:.12g}"


def write_csv(rows, path, record_time: bool = False) -> None:
    """Write records or aggregate rows; ``time_s`` / ``mean_time_s`` stay empty unless ``record_time``."""
    rows = list(rows)
    path = Path(path)
    if rows and isinstance(rows[0], AggregateRow):
        header = AGGREGATE_COLUMNS
        lines = [(r.axis_name, r.axis_value, r.method, r.num_ok, r.num_failed, int(r.empty), r.mean_power_dbm,
                  r.mean_power_watts, r.std_power_watts, r.mean_time_s if record_time else None) for r in rows]
    else:
        header = RECORD_COLUMNS
        lines = [(r.axis_name, r.axis_value, r.draw, r.method, r.status,
                  None if r.total_power is None else watts_to_dbm(r.total_power), r.total_power,
                  r.time_s if record_time else None, r.max_violation) for r in rows]
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for line in lines:
            writer.writerow([v if isinstance(v, str) else _fmt(v) for v in line])


_CHANNEL_KEYS = {f.name for f in fields(ChannelConfig)} - {"num_antennas", "seed"}
_TOP_KEYS = {"axis", "values", "sinr_db", "harvest_dbm", "num_antennas", "num_draws", "methods", "seed",
             "time_limit_s", "record_time", "channel", "link"}
_LINK_KEYS = {"antenna_noise_dbm", "id_noise_dbm", "eh_efficiency"}


def _check_keys(section: dict, allowed: set, where: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"{where}: expected a mapping")
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(map(str, unknown))}")


def config_from_dict(data: dict) -> SweepConfig:
    """Build a config from the YAML schema (dB/dBm at the boundary, see README)."""
    _check_keys(data, _TOP_KEYS, "config")
    for key in ("axis", "values"):
        if key not in data:
            raise ConfigError(f"config: missing required key '{key}'")
    channel_data = data.get("channel", {}) or {}
    _check_keys(channel_data, _CHANNEL_KEYS, "channel")
    link_data = data.get("link", {}) or {}
    _check_keys(link_data, _LINK_KEYS, "link")
    try:
        channel = ChannelConfig(num_antennas=int(data.get("num_antennas", 4)), seed=int(data.get("seed", 0)),
                                **channel_data)
        link = LinkParams(
            antenna_noise=dbm_to_watts(link_data.get("antenna_noise_dbm", -70.0)),
            id_noise=dbm_to_watts(link_data.get("id_noise_dbm", -50.0)),
            eh_efficiency=float(link_data.get("eh_efficiency", 0.5)),
        )
        return SweepConfig(
            axis=SweepAxis(data["axis"]), values=tuple(data["values"]), channel=channel, link=link,
            sinr_db=float(data.get("sinr_db", 10.0)), harvest_dbm=float(data.get("harvest_dbm", -10.0)),
            num_draws=int(data.get("num_draws", 100)), methods=tuple(data.get("methods", [m.value for m in Method])),
            time_limit_s=data.get("time_limit_s"), record_time=bool(data.get("record_time", False)),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config: {exc}") from exc


def load_config(path) -> SweepConfig:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark is not None else ""
        raise ConfigError(f"{path}: invalid YAML{where}: {getattr(exc, 'problem', exc)}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at the top level")
    return config_from_dict(data)
