"""JSON instance files: channel, receiver constants and targets in one document.

Schema (``units`` defaults to ``"db"``)::

    {
      "num_antennas": 4, "num_users": 2,
      "channels": [[re, im], ...],        # N_t*K pairs, row-major over (antenna, user)
      "units": "db",
      "antenna_noise_dbm": -70, "id_noise_dbm": -50, "eh_efficiency": 0.5,
      "sinr_db": 10, "harvest_dbm": -10
    }

Every per-user field accepts a scalar or a list of K values. With
``"units": "linear"`` the power fields are ``antenna_noise_w``, ``id_noise_w``,
``sinr`` and ``harvest_w``; floats are written with ``repr`` so a linear file
round-trips bit-exactly. dB conversions happen once, while parsing.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .model import SystemInstance, Targets, db_to_linear, dbm_to_watts, linear_to_db, watts_to_dbm

_FIELDS = {
    "db": (("antenna_noise_dbm", dbm_to_watts), ("id_noise_dbm", dbm_to_watts), ("sinr_db", db_to_linear),
           ("harvest_dbm", dbm_to_watts)),
    "linear": (("antenna_noise_w", float), ("id_noise_w", float), ("sinr", float), ("harvest_w", float)),
}


class InstanceParseError(ValueError):
    """Malformed instance document; ``location`` names the offending spot."""

    def __init__(self, location: str, message: str):
        super().__init__(f"{location}: {message}")
        self.location, self.message = location, message


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InstanceParseError(where, f"expected a number, got {json.dumps(value)}")
    return float(value)


def _per_user(doc: dict, key: str, K: int, convert) -> np.ndarray:
    if key not in doc:
        raise InstanceParseError(key, "missing required field")
    raw = doc[key]
    if isinstance(raw, list):
        if len(raw) != K:
            raise InstanceParseError(key, f"expected {K} values, got {len(raw)}")
        vals = [_number(v, f"{key}[{i}]") for i, v in enumerate(raw)]
    else:
        vals = [_number(raw, key)] * K
    return np.array([convert(v) for v in vals], dtype=float)


def parse_instance(doc, source: str = "<instance>") -> tuple[SystemInstance, Targets]:
    if not isinstance(doc, dict):
        raise InstanceParseError(source, "top level must be a JSON object")
    units = doc.get("units", "db")
    if units not in _FIELDS:
        raise InstanceParseError("units", f"expected 'db' or 'linear', got {json.dumps(units)}")
    allowed = {"num_antennas", "num_users", "channels", "units", "eh_efficiency"} | {k for k, _ in _FIELDS[units]}
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise InstanceParseError(unknown[0], f"unknown field for units={units!r}")
    dims = []
    for key in ("num_antennas", "num_users"):
        v = doc.get(key)
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise InstanceParseError(key, f"expected a positive integer, got {json.dumps(v)}")
        dims.append(v)
    n, K = dims
    pairs = doc.get("channels")
    if not isinstance(pairs, list) or len(pairs) != n * K:
        got = len(pairs) if isinstance(pairs, list) else json.dumps(pairs)
        raise InstanceParseError("channels", f"expected a list of {n * K} [re, im] pairs, got {got}")
    H = np.empty(n * K, dtype=complex)
    for i, pair in enumerate(pairs):
        if not isinstance(pair, list) or len(pair) != 2:
            raise InstanceParseError(f"channels[{i}]", "expected an [re, im] pair")
        H[i] = complex(_number(pair[0], f"channels[{i}][0]"), _number(pair[1], f"channels[{i}][1]"))
    noise_key, id_key, sinr_key, harvest_key = (k for k, _ in _FIELDS[units])
    conv = dict(_FIELDS[units])
    try:
        instance = SystemInstance(
            channels=H.reshape(n, K),
            antenna_noise=_per_user(doc, noise_key, K, conv[noise_key]),
            id_noise=_per_user(doc, id_key, K, conv[id_key]),
            eh_efficiency=_per_user(doc, "eh_efficiency", K, float),
        )
        targets = Targets(sinr=_per_user(doc, sinr_key, K, conv[sinr_key]),
                          harvest=_per_user(doc, harvest_key, K, conv[harvest_key]))
    except InstanceParseError:
        raise
    except ValueError as exc:
        raise InstanceParseError(source, str(exc)) from exc
    return instance, targets


def read_instance(path) -> tuple[SystemInstance, Targets]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InstanceParseError(str(path), exc.strerror or str(exc)) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceParseError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from exc
    try:
        return parse_instance(doc, "top level")
    except InstanceParseError as exc:
        raise InstanceParseError(f"{path}: {exc.location}", exc.message) from exc


def instance_document(instance: SystemInstance, targets: Targets, units: str = "linear") -> dict:
    H = instance.channels
    doc = {
        "num_antennas": int(H.shape[0]),
        "num_users": int(H.shape[1]),
        "channels": [[float(z.real), float(z.imag)] for z in H.reshape(-1)],
        "units": units,
    }
    if units == "linear":
        values = (instance.antenna_noise, instance.id_noise, targets.sinr, targets.harvest)
    elif units == "db":
        values = (watts_to_dbm(instance.antenna_noise), watts_to_dbm(instance.id_noise),
                  linear_to_db(targets.sinr), watts_to_dbm(targets.harvest))
    else:
        raise ValueError(f"units must be 'linear' or 'db', got {units!r}")
    for (key, _), arr in zip(_FIELDS[units], values):
        doc[key] = [float(v) for v in np.atleast_1d(arr)]
    doc["eh_efficiency"] = [float(v) for v in instance.eh_efficiency]
    return doc


def write_instance(path, instance: SystemInstance, targets: Targets, units: str = "linear") -> None:
    Path(path).write_text(json.dumps(instance_document(instance, targets, units), indent=1) + "\n")
