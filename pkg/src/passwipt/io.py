"""Config-file loading and CSV emission.

Config files are JSON objects whose keys mirror SystemConfig field names.
Power-like quantities require an explicit unit suffix: ``P_max_w`` or
``P_max_dbm``, ``sigma2_w`` or ``sigma2_dbm``, ``E_min_w`` or ``E_min_dbm``.
Floats in CSV output carry 12 significant digits.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from .errors import ConfigError
from .model import SystemConfig, dbm_to_watts

_POWER_FIELDS = ("P_max", "sigma2", "E_min")
_PLAIN_FIELDS = (
    "f_c", "c", "M", "N", "K", "Q", "J", "d_s", "a", "d", "L_x", "L_y",
    "L_0", "waveguide_lengths", "iota_ref", "eta", "grid_points",
)


def load_config(path) -> SystemConfig:
    """Build a SystemConfig from a JSON file, converting dBm where asked."""
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ConfigError("config file must contain a JSON object")
    kwargs = {}
    for name in _POWER_FIELDS:
        has_w = f"{name}_w" in raw
        has_dbm = f"{name}_dbm" in raw
        if name in raw:
            raise ConfigError(
                f"power field {name!r} needs an explicit unit: use {name}_w or {name}_dbm"
            )
        if has_w and has_dbm:
            raise ConfigError(f"both {name}_w and {name}_dbm given; pick one")
        if has_w:
            kwargs[name] = float(raw.pop(f"{name}_w"))
        elif has_dbm:
            kwargs[name] = dbm_to_watts(float(raw.pop(f"{name}_dbm")))
    for key, value in raw.items():
        if key not in _PLAIN_FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        if key == "waveguide_lengths" or key == "eta":
            kwargs[key] = tuple(value) if isinstance(value, (list, tuple)) else value
        else:
            kwargs[key] = value
    return SystemConfig(**kwargs)


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.12g}"
    if x is None:
        return ""
    return str(x)


def _write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])
    return path


TRACE_HEADER = (
    "outer_iter", "inner_iter", "surrogate", "sum_rate",
    "power_w", "min_energy_margin_w", "layout_hash",
)


def write_trace_csv(trace, path) -> Path:
    """One row per solver step; inner_iter -1 marks post-sweep rows."""
    return _write_csv(
        path,
        TRACE_HEADER,
        (
            (r.outer, r.inner, r.surrogate, r.sum_rate, r.power, r.energy_margin, r.layout_hash)
            for r in trace.rows
        ),
    )


SWEEP_HEADER = (
    "parameter", "value", "seed", "scheme", "sum_rate", "iterations",
    "power_w", "min_energy_margin_w", "feasible", "converged", "error",
    "wall_time_s",
)


def write_sweep_csv(rows, path) -> Path:
    """Per-run sweep results. wall_time_s is informational and excluded from
    the bit-for-bit determinism guarantee (everything else is covered)."""
    return _write_csv(
        path,
        SWEEP_HEADER,
        (
            (
                r.parameter, r.value, r.seed, r.scheme, r.sum_rate, r.iterations,
                r.power, r.energy_margin, r.feasible, r.converged, r.error,
                r.wall_time,
            )
            for r in rows
        ),
    )


SUMMARY_HEADER = (
    "parameter", "value", "scheme", "mean_sum_rate", "n_runs", "n_errors", "n_feasible",
)


def write_summary_csv(summary, path) -> Path:
    return _write_csv(
        path,
        SUMMARY_HEADER,
        (
            (s.parameter, s.value, s.scheme, s.mean_sum_rate, s.n_runs, s.n_errors, s.n_feasible)
            for s in summary
        ),
    )
