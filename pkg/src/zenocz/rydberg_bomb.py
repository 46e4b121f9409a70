"""Rydberg quantum bomb: one control atom gating the absorption of an ensemble.

The control atom has levels ``g`` and ``r``. The ensemble is treated as an
effective two-level system: ``G`` (all atoms in the ground state) and ``R``
(one collective excitation). With the control atom in ``g`` the ensemble
absorbs a photon in the interferometer's U arm; with the control atom in ``r``
the dipole blockade makes it transparent, up to a residual leak probability.

Absorption is an incoherent heralded jump: the photon moves to ``ABS`` and the
ensemble to ``R``. An ensemble already in ``R`` is treated as transparent.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .optics import ABSORBED, LEAKED, photon_subsystem
from .quantum_core import (
    Operator,
    Outcome,
    PureState,
    QuantumChannel,
    Space,
    Subsystem,
    projective_measure,
)

ATOM = Subsystem("atom", ("g", "r"))
ENSEMBLE = Subsystem("ensemble", ("G", "R"))
BOMB_SPACE = Space.of(ATOM, ENSEMBLE)


@dataclass(frozen=True)
class BombParams:
    """Per-pass absorption probabilities of the ensemble.

    ``p_abs`` applies with the control atom in ``g``, ``p_leak`` with it in
    ``r`` (imperfect blockade). ``n_atoms`` is bookkeeping only.
    ``absorber_phase`` is a phase on the amplitude transmitted past an
    unblockaded ensemble.
    """

    p_abs: float = 1.0
    p_leak: float = 0.0
    absorber_phase: float = 0.0
    n_atoms: int | None = None

    def __post_init__(self):
        for name in ("p_abs", "p_leak"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {p}")
        if self.p_leak > self.p_abs:
            warnings.warn(
                f"p_leak={self.p_leak} exceeds p_abs={self.p_abs}: blockaded bomb absorbs more",
                stacklevel=2,
            )

    def transmission(self, atom_level: str) -> complex:
        """Amplitude transmitted past the ensemble (in ``G``) per pass."""
        if atom_level == "g":
            return np.sqrt(1 - self.p_abs) * np.exp(1j * self.absorber_phase)
        return complex(np.sqrt(1 - self.p_leak))


IDEAL_BOMB = BombParams()


def bomb_state(alpha: complex, beta: complex) -> PureState:
    """alpha|0_B> + beta|1_B> with |0_B> = |g,G> (absorbing), |1_B> = |r,G> (transparent)."""
    amps = np.zeros(BOMB_SPACE.dim, dtype=complex)
    amps[BOMB_SPACE.flat_index(atom="g", ensemble="G")] = alpha
    amps[BOMB_SPACE.flat_index(atom="r", ensemble="G")] = beta
    return PureState(BOMB_SPACE, amps)


def pi_half_pulse(inverse: bool = False) -> Operator:
    """Resonant pi/2 pulse on the control atom.

    Real rotation ``g -> (g + r)/sqrt2``, ``r -> (r - g)/sqrt2``; four pulses
    give -1. ``inverse`` flips the laser phase, i.e. rotates the other way,
    which is what undoes the first pulse on the absorbing-bomb branch.
    """
    s = -1.0 if inverse else 1.0
    m = np.array([[1.0, -s], [s, 1.0]]) / np.sqrt(2)
    return Operator(Space.of(ATOM), m)


def blockaded_absorber(params: BombParams, photon: str = "photon") -> QuantumChannel:
    """Ensemble absorption conditioned on the control atom, on (atom, ensemble, photon)."""
    ph = photon_subsystem(photon)
    space = Space.of(ATOM, ENSEMBLE, ph)
    dims = space.dims
    u, a = ph.index("U"), ph.index("ABS")

    keep = np.ones(dims, dtype=complex)
    keep[0, 0, u] = params.transmission("g")
    keep[1, 0, u] = params.transmission("r")
    ops = [Operator(space, np.diag(keep.reshape(-1)))]
    causes: list[str | None] = [None]

    for atom_idx, p, cause in ((0, params.p_abs, ABSORBED), (1, params.p_leak, LEAKED)):
        if p == 0:
            continue
        m = np.zeros(dims * 2, dtype=complex)
        # |atom, R, ABS><atom, G, U|
        m[atom_idx, 1, a, atom_idx, 0, u] = np.sqrt(p)
        ops.append(Operator(space, m.reshape(space.dim, space.dim)))
        causes.append(cause)
    return QuantumChannel(tuple(ops), tuple(causes))


@dataclass(frozen=True)
class AtomReadout:
    branches: dict[str, Outcome]
    sampled: Outcome | None = None


def measure_control_atom(s: PureState, rng: np.random.Generator | None = None, atom: str = "atom") -> AtomReadout:
    """Fluorescence readout of the control atom in the {g, r} basis.

    Both branches are returned; when ``rng`` is given one of them is also
    drawn with its Born probability.
    """
    if atom not in s.space:
        raise ValueError(f"state has no control-atom subsystem {atom!r}")
    outcomes = {o.label: o for o in projective_measure(s, atom)}
    sampled = None
    if rng is not None:
        probs = np.array([o.probability for o in outcomes.values()])
        idx = rng.choice(len(probs), p=probs / probs.sum())
        sampled = list(outcomes.values())[idx]
    return AtomReadout(outcomes, sampled)
