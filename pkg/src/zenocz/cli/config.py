"""Run configuration: JSON files, command-line overrides and validation.

A config file is a JSON object whose keys are the fields of :class:`RunConfig`
(see ``README.md`` for the schema). Flags override file values.
"""

from __future__ import annotations

import json
from contextlib import contextmanager
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any

import numpy as np

from ..interrogation import ConfigError, InterrogationConfig, Mode
from ..optics import qubit_state
from ..quantum_core import PureState
from ..rydberg_bomb import BombParams, bomb_state

COMMANDS = ("ev", "sign", "lm-cz", "photon-cz")
DEFAULT_MODE = {"ev": "detection", "sign": "sign", "lm-cz": "sign", "photon-cz": "sign"}
DEFAULT_BOMB = {"ev": "present", "sign": "present", "lm-cz": "1", "photon-cz": None}
NAMED_STATES = {"0": "1,0", "1": "0,1", "+": "+,+", "-": "+,-"}
REQUIRED = ("command", "n")


@dataclass(frozen=True)
class RunConfig:
    command: str
    n: int
    theta: float | None = None
    mode: str | None = None
    theta_schedule: tuple[float, ...] | None = None
    p_abs: float = 1.0
    p_leak: float = 0.0
    absorber_phase: float = 0.0
    loss: float = 0.0
    detour_phase: float = 0.0
    bomb: str | None = None
    control: str = "+"
    target: str = "+"
    feed_forward: bool = True
    oracle: bool = False
    seed: int | None = None

    def interrogation(self) -> InterrogationConfig:
        with _wrap_errors():
            return InterrogationConfig(
                n_cycles=self.n,
                theta=self.theta,
                mode=self.mode,
                theta_schedule=self.theta_schedule,
                bomb=BombParams(self.p_abs, self.p_leak, self.absorber_phase),
                epsilon_loss=self.loss,
                detour_phase=self.detour_phase,
            )


FIELD_NAMES = tuple(f.name for f in fields(RunConfig))


@contextmanager
def _wrap_errors():
    try:
        yield
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_amplitudes(spec: str, name: str) -> PureState:
    """``"a,b"`` -> normalized a|0> + b|1>; ``+``/``-`` stand for +1/-1, named states 0, 1, +, -."""
    spec = NAMED_STATES.get(spec.strip(), spec)
    parts = [p.strip() for p in spec.split(",")]
    if len(parts) != 2:
        raise ConfigError(f"{name}: expected two amplitudes 'a,b', got {spec!r}")
    amps = []
    for p in parts:
        if p in ("+", "-"):
            amps.append(1.0 if p == "+" else -1.0)
            continue
        try:
            amps.append(complex(p.replace(" ", "")))
        except ValueError:
            raise ConfigError(f"{name}: cannot parse amplitude {p!r}") from None
    v = np.array(amps, dtype=complex)
    norm = np.linalg.norm(v)
    if norm == 0 or not np.isfinite(norm):
        raise ConfigError(f"{name}: amplitudes must not all vanish")
    return qubit_state(*(v / norm), name=name)


def bomb_from_spec(spec: str) -> PureState:
    s = parse_amplitudes(spec, "bomb")
    return bomb_state(*s.amplitudes)


def _coerce(name: str, value: Any) -> Any:
    if value is None:
        return None
    try:
        if name == "n":
            if isinstance(value, bool) or float(value) != int(float(value)):
                raise ValueError
            return int(float(value))
        if name == "seed":
            return int(value)
        if name in ("theta", "p_abs", "p_leak", "absorber_phase", "loss", "detour_phase"):
            v = float(value)
            if not np.isfinite(v):
                raise ValueError
            return v
        if name in ("feed_forward", "oracle"):
            if isinstance(value, bool):
                return value
            s = str(value).lower()
            if s in ("on", "true", "1", "yes"):
                return True
            if s in ("off", "false", "0", "no"):
                return False
            raise ValueError
        if name == "theta_schedule":
            if isinstance(value, str):
                value = [v for v in value.replace(";", ",").split(",") if v.strip()]
            return tuple(float(v) for v in value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value for {name}: {value!r}") from None


def load_config_file(path: str | Path) -> dict[str, Any]:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return data


def parse_config(file_values: dict[str, Any] | None = None, overrides: dict[str, Any] | None = None) -> RunConfig:
    """Merge file values and flag overrides (flags win), validate, fill defaults."""
    merged: dict[str, Any] = {}
    for source in (file_values or {}, overrides or {}):
        for key, value in source.items():
            key = key.replace("-", "_")
            if key not in FIELD_NAMES:
                raise ConfigError(f"unknown config key {key!r}; valid keys: {', '.join(FIELD_NAMES)}")
            if value is not None:
                merged[key] = value
    missing = [k for k in REQUIRED if k not in merged]
    if missing:
        raise ConfigError(f"missing required fields: {', '.join(missing)}")
    values = {k: _coerce(k, v) for k, v in merged.items()}
    command = values["command"]
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}")
    if all(values.get(k) is None for k in ("theta", "mode", "theta_schedule")):
        values["mode"] = DEFAULT_MODE[command]
    if values.get("mode") is not None:
        try:
            values["mode"] = Mode(values["mode"]).value
        except ValueError:
            raise ConfigError(f"mode must be 'detection' or 'sign', got {values['mode']!r}") from None
    if values.get("bomb") is None and DEFAULT_BOMB[command] is not None:
        values["bomb"] = DEFAULT_BOMB[command]
    cfg = RunConfig(**values)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    cfg.interrogation()
    if cfg.command in ("ev", "sign") and cfg.bomb not in ("present", "absent"):
        raise ConfigError(f"--bomb must be 'present' or 'absent' for {cfg.command}, got {cfg.bomb!r}")
    if cfg.command == "lm-cz":
        bomb_from_spec(cfg.bomb)
    if cfg.command in ("lm-cz", "photon-cz"):
        parse_amplitudes(cfg.control, "control")
    if cfg.command == "photon-cz":
        parse_amplitudes(cfg.target, "target")
    theta = cfg.interrogation().resolved_theta
    if cfg.command == "sign" and theta is None:
        raise ConfigError("sign runs need a constant theta = pi/N (use --mode sign)")
    if cfg.command in ("sign", "lm-cz", "photon-cz") and theta is not None:
        if abs(theta - np.pi / cfg.n) > 1e-15:
            raise ConfigError(f"{cfg.command} runs in sign mode: theta must be pi/N (use --mode sign)")


def emit_config(cfg: RunConfig) -> dict[str, Any]:
    """JSON-ready dict; ``parse_config(emit_config(c)) == c``."""
    d = asdict(cfg)
    if d["theta_schedule"] is not None:
        d["theta_schedule"] = list(d["theta_schedule"])
    return {k: v for k, v in d.items() if v is not None}


def with_values(cfg: RunConfig, **values: Any) -> RunConfig:
    """Copy of ``cfg`` with some fields replaced, re-validated."""
    base = emit_config(cfg)
    if {"theta", "mode", "theta_schedule"} & set(values):
        for k in ("theta", "mode", "theta_schedule"):
            base.pop(k, None)
    base.update(values)
    return parse_config(base)


__all__ = [
    "COMMANDS",
    "ConfigError",
    "FIELD_NAMES",
    "RunConfig",
    "bomb_from_spec",
    "emit_config",
    "load_config_file",
    "parse_amplitudes",
    "parse_config",
    "with_values",
]
