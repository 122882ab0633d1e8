"""Run configuration: a line-oriented ``key = value`` document.

Example::

    # three relays, two interferers, Rayleigh everywhere
    n_branches = 3
    n_interferers = 2
    m_first = 1
    m_second = 1
    m_interf = 1
    avg_snr_first_db = 10
    avg_snr_second_db = 10
    avg_inr_db = 0
    threshold_grid_db = -10, -5, 0, 5, 10
    sweep = avg_snr_first_db, 0, 20, 5

Lists are comma separated; ``#`` starts a comment.  Dimensioned powers
are given in dB and converted to linear values here.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Optional

from .params import DecodingPolicy, NetworkParams, ParamsError, db_to_linear, validate

DEFAULT_TRIALS = 100_000
DEFAULT_SEED = 1

SWEEPABLE = ("avg_snr_first_db", "avg_snr_second_db", "avg_snr_db", "avg_inr_db", "outage_threshold_db")


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


class Mode(enum.Enum):
    SIMULATE = "simulate"
    ANALYTIC = "analytic"
    VALIDATE = "validate"


@dataclass(frozen=True)
class Sweep:
    field: str
    start_db: float
    stop_db: float
    step_db: float

    def values(self) -> list[float]:
        count = int(math.floor((self.stop_db - self.start_db) / self.step_db + 1e-9)) + 1
        return [self.start_db + k * self.step_db for k in range(count)]


@dataclass(frozen=True)
class RunConfig:
    """Parsed run. ``params.outage_threshold`` holds the first grid value."""

    params: NetworkParams
    threshold_grid_db: tuple
    n_trials: int = DEFAULT_TRIALS
    master_seed: int = DEFAULT_SEED
    sweep: Optional[Sweep] = None
    output_format: str = "csv"
    output_path: Optional[str] = None
    mode: Mode = Mode.VALIDATE

    @property
    def threshold_grid(self) -> list[float]:
        return [db_to_linear(x) for x in self.threshold_grid_db]

    def sweep_points(self):
        """Yield ``(sweep value in dB or None, params, threshold grid in dB)`` per sweep point."""
        if self.sweep is None:
            yield None, self.params, list(self.threshold_grid_db)
            return
        field = self.sweep.field
        if field == "outage_threshold_db":
            yield None, self.params, self.sweep.values()
            return
        for value in self.sweep.values():
            lin = db_to_linear(value)
            if field == "avg_snr_db":
                p = replace(self.params, avg_snr_first=lin, avg_snr_second=lin)
            else:
                p = replace(self.params, **{field[: -len("_db")]: lin})
            yield value, p, list(self.threshold_grid_db)


def _float(text: str, key: str, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}", line) from None
    if not math.isfinite(value):
        raise ConfigError(f"{key}: value must be finite", line)
    return value


def _int(text: str, key: str, line: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {text!r}", line) from None


def _float_list(text: str, key: str, line: int) -> list[float]:
    items = [t.strip() for t in text.split(",")]
    if not items or any(not t for t in items):
        raise ConfigError(f"{key}: expected a comma-separated list of numbers", line)
    return [_float(t, key, line) for t in items]


def _bool(text: str, key: str, line: int) -> bool:
    lowered = text.lower()
    if lowered in ("true", "yes", "1"):
        return True
    if lowered in ("false", "no", "0"):
        return False
    raise ConfigError(f"{key}: expected true or false, got {text!r}", line)


def _choice(enum_cls):
    def parse(text, key, line):
        try:
            return enum_cls(text.lower())
        except ValueError:
            allowed = ", ".join(e.value for e in enum_cls)
            raise ConfigError(f"{key}: expected one of {allowed}, got {text!r}", line) from None

    return parse


def _format(text, key, line):
    if text.lower() not in ("csv", "json"):
        raise ConfigError(f"{key}: expected csv or json, got {text!r}", line)
    return text.lower()


def _sweep(text, key, line):
    parts = [t.strip() for t in text.split(",")]
    if len(parts) != 4:
        raise ConfigError("sweep: expected 'field, start_db, stop_db, step_db'", line)
    field = parts[0]
    if field not in SWEEPABLE:
        raise ConfigError(f"sweep: {field!r} is not a dB parameter ({', '.join(SWEEPABLE)})", line)
    start, stop, step = (_float(p, key, line) for p in parts[1:])
    if step <= 0:
        raise ConfigError("sweep: step must be > 0", line)
    if stop < start:
        raise ConfigError("sweep: stop must be ≥ start", line)
    return Sweep(field, start, stop, step)


_PARSERS = {
    "n_branches": _int,
    "n_interferers": _int,
    "m_first": _float,
    "m_second": _float,
    "m_interf": _float,
    "avg_snr_first_db": _float,
    "avg_snr_second_db": _float,
    "avg_inr_db": _float,
    "outage_threshold_db": _float,
    "threshold_grid_db": _float_list,
    "decoding_policy": _choice(DecodingPolicy),
    "packet_length": _int,
    "shared_dest_interference": _bool,
    "n_trials": _int,
    "master_seed": _int,
    "sweep": _sweep,
    "format": _format,
    "output": lambda text, key, line: text,
    "mode": _choice(Mode),
}

_REQUIRED = ("n_branches", "n_interferers", "m_first", "m_second", "m_interf", "avg_snr_first_db", "avg_snr_second_db")

# Which config key to blame for a failed params field.
_FIELD_KEYS = {
    "avg_snr_first": "avg_snr_first_db",
    "avg_snr_second": "avg_snr_second_db",
    "avg_inr": "avg_inr_db",
    "outage_threshold": "outage_threshold_db",
}


def parse_config(text: str) -> RunConfig:
    values: dict = {}
    lines: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        key, sep, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        if key not in _PARSERS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[key]})", lineno)
        if not value:
            raise ConfigError(f"{key}: missing value", lineno)
        values[key] = _PARSERS[key](value, key, lineno)
        lines[key] = lineno

    for key in _REQUIRED:
        if key not in values:
            raise ConfigError(f"missing required key {key!r}")

    sweep = values.get("sweep")
    if "threshold_grid_db" in values and "outage_threshold_db" in values:
        raise ConfigError("give either outage_threshold_db or threshold_grid_db, not both", lines["threshold_grid_db"])
    if "threshold_grid_db" in values:
        grid = tuple(values["threshold_grid_db"])
    elif "outage_threshold_db" in values:
        grid = (values["outage_threshold_db"],)
    elif sweep is not None and sweep.field == "outage_threshold_db":
        grid = tuple(sweep.values())
    else:
        raise ConfigError("missing outage_threshold_db or threshold_grid_db")

    n_interf = values["n_interferers"]
    if "avg_inr_db" in values:
        avg_inr = db_to_linear(values["avg_inr_db"])
    elif n_interf == 0:
        avg_inr = 0.0
    else:
        raise ConfigError("missing required key 'avg_inr_db' (n_interferers ≥ 1)")

    kwargs = {}
    for key in ("decoding_policy", "packet_length", "shared_dest_interference"):
        if key in values:
            kwargs[key] = values[key]
    params = NetworkParams(
        n_branches=values["n_branches"],
        n_interferers=n_interf,
        m_first=values["m_first"],
        m_second=values["m_second"],
        m_interf=values["m_interf"],
        avg_snr_first=db_to_linear(values["avg_snr_first_db"]),
        avg_snr_second=db_to_linear(values["avg_snr_second_db"]),
        avg_inr=avg_inr,
        outage_threshold=db_to_linear(grid[0]),
        **kwargs,
    )
    try:
        validate(params)
    except ParamsError as exc:
        key = _FIELD_KEYS.get(exc.field, exc.field)
        if exc.field == "outage_threshold":
            key = "threshold_grid_db" if "threshold_grid_db" in lines else "outage_threshold_db"
        raise ConfigError(str(exc), lines.get(key)) from None

    n_trials = values.get("n_trials", DEFAULT_TRIALS)
    if n_trials < 1:
        raise ConfigError("n_trials must be ≥ 1", lines["n_trials"])
    seed = values.get("master_seed", DEFAULT_SEED)
    if not 0 <= seed < 2**64:
        raise ConfigError("master_seed must be a 64-bit unsigned integer", lines["master_seed"])

    return RunConfig(
        params=params,
        threshold_grid_db=grid,
        n_trials=n_trials,
        master_seed=seed,
        sweep=sweep,
        output_format=values.get("format", "csv"),
        output_path=values.get("output"),
        mode=values.get("mode", Mode.VALIDATE),
    )
