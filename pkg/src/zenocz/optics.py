"""Single-photon path modes, linear optical elements and photon-loss channels.

A photon subsystem has five levels:

``U``, ``D``
    upper and lower arm of the interrogation interferometer
``OUT``
    detour path that bypasses the interferometer
``ABS``, ``LOST``
    terminal sectors for an absorbed or a scattered photon

Beamsplitters are real rotations on the ordered pair ``(D, U)``::

    D -> cos(theta) D + sin(theta) U
    U -> -sin(theta) D + cos(theta) U

The pi phase picked up on grey-side transmission is folded into this sign
convention, so ``beamsplitter(a) * beamsplitter(b) == beamsplitter(a + b)``
and a full pi rotation returns ``-D``. Mirrors are identities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quantum_core import (
    Operator,
    PureState,
    QuantumChannel,
    Space,
    Subsystem,
    project_levels,
)

PHOTON_LEVELS = ("U", "D", "OUT", "ABS", "LOST")
TERMINAL_LEVELS = ("ABS", "LOST")
ABSORBED, LEAKED, LOST = "ABSORBED", "LEAKED", "LOST"


def photon_subsystem(name: str = "photon") -> Subsystem:
    return Subsystem(name, PHOTON_LEVELS)


def _photon_space(name: str) -> Space:
    return Space.of(photon_subsystem(name))


def _check_probability(p: float, what: str) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{what} must lie in [0, 1], got {p}")
    return p


def beamsplitter(theta: float, name: str = "photon", rails: tuple[str, str] = ("D", "U")) -> Operator:
    """Real rotation by ``theta`` on the ordered rail pair (reflectivity cos^2 theta)."""
    sub = photon_subsystem(name)
    a, b = (sub.index(r) for r in rails)
    c, s = np.cos(theta), np.sin(theta)
    m = np.eye(sub.dim, dtype=complex)
    m[a, a], m[b, a] = c, s
    m[a, b], m[b, b] = -s, c
    return Operator(Space.of(sub), m)


def phase_shifter(phi: float, level: str = "D", name: str = "photon") -> Operator:
    """Multiply the amplitude of ``level`` by exp(i phi)."""
    sub = photon_subsystem(name)
    d = np.ones(sub.dim, dtype=complex)
    d[sub.index(level)] = np.exp(1j * phi)
    return Operator(Space.of(sub), np.diag(d))


def hadamard_equiv(name: str = "photon", rails: tuple[str, str] = ("D", "U"), inverse: bool = False) -> Operator:
    """50% beamsplitter on ``rails``; ``inverse`` is the same splitter traversed backwards."""
    return beamsplitter(-np.pi / 4 if inverse else np.pi / 4, name, rails)


def _jump(sub: Subsystem, src: str, dst: str, amp: float) -> np.ndarray:
    m = np.zeros((sub.dim, sub.dim), dtype=complex)
    m[sub.index(dst), sub.index(src)] = amp
    return m


def loss_channel(epsilon: float, name: str = "photon") -> QuantumChannel:
    """Each interferometer arm scatters the photon to LOST with probability epsilon."""
    eps = _check_probability(epsilon, "loss probability")
    sub = photon_subsystem(name)
    space = Space.of(sub)
    keep = np.ones(sub.dim, dtype=complex)
    for arm in ("U", "D"):
        keep[sub.index(arm)] = np.sqrt(1 - eps)
    ops = [Operator(space, np.diag(keep))]
    causes: list[str | None] = [None]
    if eps > 0:
        for arm in ("U", "D"):
            ops.append(Operator(space, _jump(sub, arm, "LOST", np.sqrt(eps))))
            causes.append(LOST)
    return QuantumChannel(tuple(ops), tuple(causes))


def absorber_channel(p_abs: float, name: str = "photon", phase: float = 0.0) -> QuantumChannel:
    """Classical absorber in the U arm: absorbs with probability p_abs.

    The transmitted amplitude is sqrt(1 - p_abs) * exp(i phase); ``phase``
    defaults to zero.
    """
    p = _check_probability(p_abs, "absorption probability")
    sub = photon_subsystem(name)
    space = Space.of(sub)
    keep = np.ones(sub.dim, dtype=complex)
    keep[sub.index("U")] = np.sqrt(1 - p) * np.exp(1j * phase)
    ops = [Operator(space, np.diag(keep))]
    causes: list[str | None] = [None]
    if p > 0:
        ops.append(Operator(space, _jump(sub, "U", "ABS", np.sqrt(p))))
        causes.append(ABSORBED)
    return QuantumChannel(tuple(ops), tuple(causes))


@dataclass(frozen=True)
class LogicalEncoding:
    """Which photon levels carry logical 0 and logical 1."""

    zero: str
    one: str

    def __post_init__(self):
        if self.zero == self.one:
            raise ValueError("logical levels must be distinct")
        for lvl in (self.zero, self.one):
            if lvl not in PHOTON_LEVELS or lvl in TERMINAL_LEVELS:
                raise ValueError(f"{lvl!r} is not a usable photon path")

    @property
    def rails(self) -> tuple[str, str]:
        return (self.zero, self.one)


# photon up = logical 0, photon down = logical 1
DUAL_RAIL = LogicalEncoding("U", "D")
# interrogation gates route the upper rail through the detour
DETOUR = LogicalEncoding("OUT", "D")

QUBIT_LEVELS = ("0", "1")


def qubit_subsystem(name: str) -> Subsystem:
    return Subsystem(name, QUBIT_LEVELS)


def qubit_state(alpha: complex, beta: complex, name: str = "q") -> PureState:
    return PureState(Space.of(qubit_subsystem(name)), [alpha, beta])


def encode(logical: PureState, encoding: LogicalEncoding = DETOUR, name: str | None = None) -> PureState:
    """Map a one-qubit logical state onto a photon subsystem."""
    if logical.space.dims != (2,):
        raise ValueError("encode expects a single two-level logical state")
    name = name or logical.space.names[0]
    sub = photon_subsystem(name)
    amps = np.zeros(sub.dim, dtype=complex)
    amps[sub.index(encoding.zero)] = logical.amplitudes[0]
    amps[sub.index(encoding.one)] = logical.amplitudes[1]
    return PureState(Space.of(sub), amps)


def decode(state: PureState, encodings: dict[str, LogicalEncoding]) -> PureState:
    """Project photon subsystems onto their logical rails and relabel them 0/1.

    Amplitude on any other photon level is discarded; the result is
    sub-normalized if such amplitude was present.
    """
    s = project_levels(state, {n: enc.rails for n, enc in encodings.items()})
    subs = tuple(
        qubit_subsystem(sub.name) if sub.name in encodings else sub for sub in s.space.subsystems
    )
    return PureState(Space(subs), s.amplitudes)


def as_photon(state: PureState, encoding: LogicalEncoding, name: str) -> PureState:
    """Accept a logical qubit state or a photon state confined to the encoding's rails."""
    if len(state.space.subsystems) != 1:
        raise ValueError("expected a single-photon state")
    if state.space.dims == (2,):
        return encode(state, encoding, name)
    sub = state.space.subsystems[0]
    if sub.levels != PHOTON_LEVELS:
        raise ValueError(f"unrecognised photon levels {sub.levels}")
    for lvl, a in zip(sub.levels, state.amplitudes):
        if lvl not in encoding.rails and abs(a) > 0:
            raise ValueError(f"photon has amplitude outside its rail pair {encoding.rails} (level {lvl})")
    return PureState(_photon_space(name), state.amplitudes)


