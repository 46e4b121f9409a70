"""Randomized invariant suite behind ``zenocz selftest``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..cz_protocol import ProtocolConfig, run_photon_cz
from ..interrogation import InterrogationConfig, run_ev_test, run_quantum_bomb
from ..optics import absorber_channel, beamsplitter, loss_channel, photon_subsystem, qubit_subsystem
from ..quantum_core import Space, random_state
from ..rydberg_bomb import BOMB_SPACE, BombParams, blockaded_absorber, pi_half_pulse

CONSERVATION_TOL = 1e-10
ORACLE_TOL = 1e-9
PROBABILITIES = (0.0, 0.1, 0.5, 1.0)


@dataclass
class SelftestReport:
    runs: int = 0
    oracle_runs: int = 0
    worst_conservation: float = 0.0
    worst_oracle: float = 0.0
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def _random_config(rng: np.random.Generator, max_n: int) -> InterrogationConfig:
    n = int(rng.integers(1, max_n + 1))
    p_abs, p_leak, eps = (float(rng.choice(PROBABILITIES)) for _ in range(3))
    if rng.random() < 0.5:
        angle = {"mode": str(rng.choice(["detection", "sign"]))}
    else:
        angle = {"theta": float(rng.uniform(1e-3, np.pi))}
    return InterrogationConfig(
        n, bomb=BombParams(p_abs, min(p_leak, p_abs)), epsilon_loss=eps, **angle
    )


def _static_checks(report: SelftestReport, rng: np.random.Generator) -> None:
    for theta in rng.uniform(-10, 10, size=20):
        m = beamsplitter(theta).matrix
        if not np.allclose(m.T @ m, np.eye(5), atol=1e-12) or abs(np.linalg.det(m) - 1) > 1e-12:
            report.failures.append(f"beamsplitter({theta}) is not a rotation")
    p8 = pi_half_pulse().power(8).matrix
    if not np.allclose(p8, np.eye(2), atol=1e-12):
        report.failures.append("pi/2 pulse to the 8th power is not the identity")
    grid = (0.0, 0.25, 0.5, 0.75, 1.0)
    for p in grid:
        loss_channel(p)
        absorber_channel(p)
        for q in grid:
            blockaded_absorber(BombParams(max(p, q), min(p, q)))


def run_selftest(n_configs: int = 500, seed: int = 2024, max_n: int = 200, oracle_max_n: int = 50) -> SelftestReport:
    """Conservation on every run; oracle equivalence on runs with N <= ``oracle_max_n``."""
    rng = np.random.default_rng(seed)
    report = SelftestReport()
    _static_checks(report, rng)
    photon_space = Space.of(photon_subsystem("photon"))
    for i in range(n_configs):
        cfg = _random_config(rng, max_n)
        kind = i % 4
        oracle = cfg.n_cycles <= oracle_max_n
        if kind == 0:
            out = run_ev_test(cfg, bool(rng.integers(2)), oracle=oracle)
        elif kind in (1, 2):
            out = run_quantum_bomb(cfg, random_state(BOMB_SPACE, rng), _random_photon(photon_space, rng), oracle=oracle)
        else:
            pcfg = ProtocolConfig(cfg, bool(rng.integers(2)))
            control = random_state(Space.of(qubit_subsystem("control")), rng)
            target = random_state(Space.of(qubit_subsystem("target")), rng)
            oracle = oracle and cfg.n_cycles <= 10
            out = run_photon_cz(pcfg, control, target, oracle=oracle)
        err = abs(out.success_probability + _failure(out) - 1)
        report.runs += 1
        report.worst_conservation = max(report.worst_conservation, err)
        if err > CONSERVATION_TOL:
            report.failures.append(f"run {i}: conservation error {err:.3e} ({cfg})")
        if oracle:
            report.oracle_runs += 1
            delta = max(out.oracle_trace_distance, out.oracle_failure_delta)
            report.worst_oracle = max(report.worst_oracle, delta)
            if delta > ORACLE_TOL:
                report.failures.append(f"run {i}: oracle disagreement {delta:.3e} ({cfg})")
    return report


def _random_photon(space: Space, rng: np.random.Generator):
    """Random photon state on U, D and OUT (terminal levels empty)."""
    s = random_state(space, rng)
    amps = np.array(s.amplitudes)
    amps[3:] = 0
    return type(s)(space, amps / np.linalg.norm(amps))


def _failure(out) -> float:
    if hasattr(out, "ledger"):
        return out.ledger.total()
    return out.failure_probability
