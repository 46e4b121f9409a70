"""Flat, self-describing run records and their JSON / CSV serialization.

Keys are dotted: ``config.*`` holds the full resolved configuration (enough
to re-run), ``result.*`` the simulated scalars, ``reference.*`` the closed-form
laws, ``oracle.*`` the density-operator cross-check and ``meta.*`` the
timestamp and tool version. Floats are written with 17 significant digits.
"""

from __future__ import annotations

import csv
import io
import json
import math
from datetime import datetime, timezone
from typing import Any, Iterable

import numpy as np

from .. import __version__
from ..cz_protocol import ProtocolConfig, run_photon_cz
from ..interrogation import (
    InvariantError,
    light_matter_cz_target,
    reference_values,
    run_ev_test,
    run_light_matter_cz,
    run_sign_mode,
)
from ..quantum_core import fidelity
from .config import RunConfig, bomb_from_spec, emit_config, parse_amplitudes, parse_config

ORACLE_MAX_N = 50
INVARIANT_TOL = 1e-10


def _split(prefix: str, z: complex) -> dict[str, float]:
    return {f"{prefix}_re": float(z.real), f"{prefix}_im": float(z.imag)}


def _photon_amplitudes(state, photon: str = "photon") -> dict[str, float]:
    out = {}
    sub = state.space[photon]
    for level in ("U", "D", "OUT"):
        idx = [slice(None)] * len(state.space.dims)
        idx[state.space.axis(photon)] = sub.index(level)
        block = state.tensor()[tuple(idx)]
        out[f"p_{level}"] = float(np.sum(np.abs(block) ** 2))
        if block.size == 1:
            out.update(_split(f"amplitude_{level}", complex(block.reshape(-1)[0])))
    return out


def _interrogation_result(outcome) -> dict[str, Any]:
    r = {
        "success_probability": outcome.success_probability,
        "explosion_probability": outcome.explosion_probability,
        "loss_probability": outcome.loss_probability,
        "failure_probability": outcome.ledger.total(),
        "conservation_error": outcome.conservation_error,
    }
    return r


def execute(cfg: RunConfig) -> dict[str, Any]:
    """Run one configuration and return the ``result.*`` and ``oracle.*`` fields."""
    icfg = cfg.interrogation()
    use_oracle = cfg.oracle and cfg.n <= ORACLE_MAX_N
    oracle: dict[str, Any] = {"trace_distance": None, "failure_delta": None}

    if cfg.command in ("ev", "sign"):
        run = run_ev_test if cfg.command == "ev" else run_sign_mode
        out = run(icfg, cfg.bomb == "present", oracle=use_oracle)
        result = _interrogation_result(out)
        result.update(_photon_amplitudes(out.surviving_state))
    elif cfg.command == "lm-cz":
        bomb = bomb_from_spec(cfg.bomb)
        photon = parse_amplitudes(cfg.control, "photon")
        out = run_light_matter_cz(icfg, bomb, photon, oracle=use_oracle)
        result = _interrogation_result(out)
        target = light_matter_cz_target(bomb, photon)
        surv = out.surviving_state
        result["fidelity"] = fidelity(surv.normalized(), target) if surv.norm2 > 0 else 0.0
        result.update(_photon_amplitudes(surv))
    else:
        pcfg = ProtocolConfig(icfg, cfg.feed_forward, cfg.seed)
        control = parse_amplitudes(cfg.control, "control")
        target = parse_amplitudes(cfg.target, "target")
        g = run_photon_cz(pcfg, control, target, oracle=use_oracle)
        result = {
            "success_probability": g.success_probability,
            "explosion_probability": g.explosion_probability,
            "loss_probability": g.loss_probability,
            "failure_probability": g.failure_probability,
            "conservation_error": abs(g.success_probability + g.failure_probability - 1),
            "fidelity_vs_ideal_cz": g.fidelity_vs_ideal_cz,
            "concurrence_out": g.concurrence_out,
            "p_g": g.branch_stats["g"].probability,
            "p_r": g.branch_stats["r"].probability,
            "shot": g.shot,
        }
        for label, z in zip(("00", "01", "10", "11"), g.output_state.amplitudes):
            result.update(_split(f"output_{label}", complex(z)))
        out = g

    if use_oracle:
        oracle = {"trace_distance": out.oracle_trace_distance, "failure_delta": out.oracle_failure_delta}
    if result["conservation_error"] > INVARIANT_TOL:
        raise InvariantError(
            f"probability conservation breached by {result['conservation_error']:.3e}; "
            f"config={emit_config(cfg)} result={result}"
        )
    return {**{f"result.{k}": v for k, v in result.items()}, **{f"oracle.{k}": v for k, v in oracle.items()}}


def build_record(cfg: RunConfig) -> dict[str, Any]:
    """Full self-describing record for one run."""
    record: dict[str, Any] = {f"config.{k}": None for k in RunConfig.__dataclass_fields__}
    for k, v in emit_config(cfg).items():
        record[f"config.{k}"] = ";".join(repr(float(t)) for t in v) if k == "theta_schedule" else v
    record["config.resolved_theta"] = cfg.interrogation().resolved_theta
    record.update(execute(cfg))
    ref = reference_values(cfg.n, cfg.interrogation().resolved_theta)
    for key in ("cos_2n_theta", "one_minus_n_theta2", "one_minus_pi2_over_4n", "pi2_over_n"):
        record[f"reference.{key}"] = ref.get(key)
    record["meta.timestamp"] = datetime.now(timezone.utc).isoformat()
    record["meta.version"] = __version__
    record["error"] = None
    return record


def config_from_record(record: dict[str, Any]) -> RunConfig:
    values = {
        k.split(".", 1)[1]: v
        for k, v in record.items()
        if k.startswith("config.") and k != "config.resolved_theta" and v not in (None, "")
    }
    return parse_config(values)


def rerun(record: dict[str, Any]) -> dict[str, Any]:
    return build_record(config_from_record(record))


# -- serialization -----------------------------------------------------------------


def format_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return json.dumps(str(x))
    s = format(x, ".17g")
    return s if any(c in s for c in ".en") else s + ".0"


def _json_value(v: Any) -> str:
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, (float, np.floating)):
        return format_float(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(k)}: {_json_value(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_json_value(x) for x in v) + "]"
    return json.dumps(str(v))


def to_json_line(record: dict[str, Any]) -> str:
    return _json_value(record)


def _csv_value(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format_float(float(v))
    return str(v)


def header_of(records: Iterable[dict[str, Any]]) -> list[str]:
    header: list[str] = []
    seen = set()
    for r in records:
        for k in r:
            if k not in seen:
                seen.add(k)
                header.append(k)
    return header


def to_csv(records: list[dict[str, Any]]) -> str:
    buf = io.StringIO()
    header = header_of(records)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in records:
        w.writerow([_csv_value(r.get(k)) for k in header])
    return buf.getvalue()


def write_records(records: list[dict[str, Any]], fmt: str) -> str:
    if fmt == "csv":
        return to_csv(records)
    return "".join(to_json_line(r) + "\n" for r in records)


def read_csv(text: str) -> list[dict[str, str]]:
    return list(csv.DictReader(io.StringIO(text)))
