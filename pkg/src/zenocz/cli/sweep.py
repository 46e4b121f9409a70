"""Parameter sweeps over run configurations."""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .config import FIELD_NAMES, ConfigError, parse_config
from .records import build_record

MAX_RUNS = 10**6
JOBS_ENV = "ZENOCZ_JOBS"
SWEEPABLE = tuple(f for f in FIELD_NAMES if f not in ("command", "oracle", "theta_schedule"))


@dataclass(frozen=True)
class SweepSpec:
    command: str
    axes: tuple[tuple[str, tuple[Any, ...]], ...] = ()
    fixed: dict[str, Any] = field(default_factory=dict)
    format: str = "json"
    oracle: bool = False
    seed: int | None = None
    allow_oversize: bool = False

    def __post_init__(self):
        names = [a for a, _ in self.axes]
        for name in names:
            if name not in SWEEPABLE:
                raise ConfigError(f"cannot sweep {name!r}; sweepable fields: {', '.join(SWEEPABLE)}")
        if len(set(names)) != len(names):
            raise ConfigError(f"axis given twice: {names}")
        for name, values in self.axes:
            if not values:
                raise ConfigError(f"axis {name!r} has no values")
        for key in self.fixed:
            if key.replace("-", "_") not in FIELD_NAMES:
                raise ConfigError(f"unknown config key {key!r}")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"format must be json or csv, got {self.format!r}")
        if self.size > MAX_RUNS and not self.allow_oversize:
            raise ConfigError(f"sweep has {self.size} runs (limit {MAX_RUNS}); pass --allow-oversize to run it")

    @property
    def size(self) -> int:
        return int(np.prod([len(v) for _, v in self.axes], dtype=object)) if self.axes else 1

    def points(self):
        """Axis assignments in lexicographic order (first axis varies slowest)."""
        names = [a for a, _ in self.axes]
        for combo in itertools.product(*(v for _, v in self.axes)):
            yield dict(zip(names, combo))


def parse_axis(text: str) -> tuple[str, tuple[Any, ...]]:
    """``name=v1,v2,...``, ``name=lin:start:stop:count`` or ``name=log:start:stop:count``."""
    if "=" not in text:
        raise ConfigError(f"axis must look like name=values, got {text!r}")
    name, spec = text.split("=", 1)
    name = name.strip().replace("-", "_")
    spec = spec.strip()
    if spec.startswith(("lin:", "log:")):
        kind, *parts = spec.split(":")
        if len(parts) != 3:
            raise ConfigError(f"range axis must be {kind}:start:stop:count, got {spec!r}")
        try:
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise ConfigError(f"bad range {spec!r}") from None
        if count < 1:
            raise ConfigError(f"range count must be positive, got {count}")
        if kind == "log":
            if start <= 0 or stop <= 0:
                raise ConfigError("log ranges need positive endpoints")
            vals = np.geomspace(start, stop, count)
        else:
            vals = np.linspace(start, stop, count)
        if name in ("n", "seed"):
            values: tuple[Any, ...] = tuple(dict.fromkeys(int(round(v)) for v in vals))
        else:
            values = tuple(float(v) for v in vals)
    else:
        values = tuple(v.strip() for v in spec.split(",") if v.strip())
    return name, values


def _run_point(values: dict[str, Any]) -> dict[str, Any]:
    try:
        return build_record(parse_config(values))
    except Exception as exc:  # recorded in-row; the sweep carries on
        row = {f"config.{k}": v for k, v in values.items()}
        row["error"] = f"{type(exc).__name__}: {exc}"
        return row


def sweep_configs(spec: SweepSpec) -> list[dict[str, Any]]:
    out = []
    for i, point in enumerate(spec.points()):
        values = {"command": spec.command, **spec.fixed, **point}
        if spec.oracle:
            values["oracle"] = True
        if spec.seed is not None and "seed" not in point:
            values["seed"] = spec.seed + i
        out.append(values)
    return out


def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get(JOBS_ENV, "1")))
    except ValueError:
        return 1


def run_sweep(spec: SweepSpec, jobs: int | None = None) -> list[dict[str, Any]]:
    """Run every point; output order follows :meth:`SweepSpec.points` regardless of ``jobs``."""
    configs = sweep_configs(spec)
    jobs = jobs or default_jobs()
    if jobs == 1 or len(configs) == 1:
        return [_run_point(c) for c in configs]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_point, configs, chunksize=max(1, len(configs) // (4 * jobs))))


__all__ = ["MAX_RUNS", "SweepSpec", "parse_axis", "run_sweep", "sweep_configs"]
