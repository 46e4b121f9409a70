"""N-cycle quantum interrogation: classical bombs, sign mode and quantum bombs.

Every cycle the photon meets the same sequence of elements::

    beamsplitter(theta_k) on (D, U)  ->  absorber in the U arm  ->  loss on U and D

Absorbed or scattered amplitude never re-enters the interferometer, so the
engine keeps only the surviving amplitude as a pure state and books the
probability removed in each cycle in a :class:`FailureLedger`.

The absorber is diagonal in every subsystem other than the photon. The engine
therefore groups the spectator basis states by their per-pass transmission
amplitude and evolves each group with a single 2x2 transfer matrix per cycle.
A slow density-operator path that composes the full Kraus channels is kept as
an independent oracle (``oracle=True``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .optics import (
    ABSORBED,
    DETOUR,
    LEAKED,
    LOST,
    TERMINAL_LEVELS,
    absorber_channel,
    as_photon,
    beamsplitter,
    loss_channel,
    phase_shifter,
    photon_subsystem,
)
from .quantum_core import (
    DensityOperator,
    PureState,
    Space,
    apply_operator_density,
    basis_state,
    embed,
    tensor_product,
    to_density,
    trace_distance,
)
from .rydberg_bomb import BOMB_SPACE, IDEAL_BOMB, BombParams, blockaded_absorber

CAUSES = (ABSORBED, LEAKED, LOST)
CONSERVATION_TOL = 1e-10


class ConfigError(ValueError):
    """Invalid or contradictory interrogation configuration."""


class Mode(str, enum.Enum):
    DETECTION = "detection"  # theta = pi / (2N)
    SIGN = "sign"  # theta = pi / N

    def theta(self, n_cycles: int) -> float:
        return np.pi / (2 * n_cycles) if self is Mode.DETECTION else np.pi / n_cycles


@dataclass(frozen=True)
class InterrogationConfig:
    """Interferometer settings shared by every run.

    Exactly one of ``theta``, ``mode`` or ``theta_schedule`` fixes the
    beamsplitter angles. ``detour_phase`` is the path-length error of the
    OUT detour relative to the interferometer.
    """

    n_cycles: int
    theta: float | None = None
    mode: Mode | None = None
    bomb: BombParams = IDEAL_BOMB
    epsilon_loss: float = 0.0
    detour_phase: float = 0.0
    theta_schedule: tuple[float, ...] | None = None

    def __post_init__(self):
        if isinstance(self.n_cycles, bool) or int(self.n_cycles) != self.n_cycles or self.n_cycles < 1:
            raise ConfigError(f"n_cycles must be a positive integer, got {self.n_cycles!r}")
        object.__setattr__(self, "n_cycles", int(self.n_cycles))
        if self.mode is not None:
            object.__setattr__(self, "mode", Mode(self.mode))
        given = [k for k in ("theta", "mode", "theta_schedule") if getattr(self, k) is not None]
        if not given:
            raise ConfigError("one of theta, mode or theta_schedule is required")
        if len(given) > 1:
            raise ConfigError(f"conflicting beamsplitter settings: {' and '.join(given)}; give only one")
        if self.theta_schedule is not None:
            sched = tuple(float(t) for t in self.theta_schedule)
            if len(sched) != self.n_cycles:
                raise ConfigError(f"theta_schedule has {len(sched)} entries for {self.n_cycles} cycles")
            object.__setattr__(self, "theta_schedule", sched)
            bad = [t for t in sched if not 0 < t <= np.pi]
        else:
            bad = [self.resolved_theta] if not 0 < self.resolved_theta <= np.pi else []
        if bad:
            raise ConfigError(f"beamsplitter angle must lie in (0, pi], got {bad[0]}")
        if not 0.0 <= self.epsilon_loss <= 1.0:
            raise ConfigError(f"epsilon_loss must lie in [0, 1], got {self.epsilon_loss}")

    @property
    def resolved_theta(self) -> float | None:
        """Constant beamsplitter angle, or None for a per-cycle schedule."""
        if self.theta is not None:
            return float(self.theta)
        if self.mode is not None:
            return self.mode.theta(self.n_cycles)
        return None

    def thetas(self) -> np.ndarray:
        if self.theta_schedule is not None:
            return np.array(self.theta_schedule)
        return np.full(self.n_cycles, self.resolved_theta)


@dataclass(frozen=True)
class FailureLedger:
    """Probability removed from the surviving branch, per cause and per cycle."""

    per_cycle: dict[str, np.ndarray]

    @classmethod
    def empty(cls, n_cycles: int) -> FailureLedger:
        return cls({c: np.zeros(n_cycles) for c in CAUSES})

    @property
    def n_cycles(self) -> int:
        return len(next(iter(self.per_cycle.values())))

    def total(self, *causes: str) -> float:
        causes = causes or CAUSES
        return float(sum(self.per_cycle[c].sum() for c in causes))

    def entries(self) -> dict[tuple[str, int], float]:
        """Nonzero entries keyed by (cause, cycle) with cycles counted from 1."""
        return {
            (c, k + 1): float(p)
            for c, arr in self.per_cycle.items()
            for k, p in enumerate(arr)
            if p != 0
        }

    def __add__(self, other: FailureLedger) -> FailureLedger:
        return FailureLedger({c: self.per_cycle[c] + other.per_cycle[c] for c in CAUSES})


@dataclass(frozen=True)
class RunOutcome:
    surviving_state: PureState
    ledger: FailureLedger
    initial_norm2: float
    oracle_density: DensityOperator | None = field(default=None, repr=False)
    oracle_trace_distance: float | None = None
    oracle_failure_delta: float | None = None

    @property
    def success_probability(self) -> float:
        return self.surviving_state.norm2

    @property
    def explosion_probability(self) -> float:
        return self.ledger.total(ABSORBED, LEAKED)

    @property
    def loss_probability(self) -> float:
        return self.ledger.total(LOST)

    @property
    def conservation_error(self) -> float:
        return abs(self.success_probability + self.ledger.total() - self.initial_norm2)


class InvariantError(RuntimeError):
    """A numerical invariant (e.g. probability conservation) was breached."""


# -- fast engine ---------------------------------------------------------------


def _rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


@lru_cache(maxsize=64)
def _transfer(thetas_key: bytes, t: complex, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-cycle 2x2 maps on (D, U) for an absorber of transmission ``t``.

    Returns ``(q, p)``: ``q[k]`` takes the input amplitudes to those just
    after the k-th beamsplitter, ``p`` to the surviving output after all
    cycles.
    """
    thetas = np.frombuffer(thetas_key)
    n = len(thetas)
    a = np.diag([1.0, t]).astype(complex) * np.sqrt(1 - eps)
    if np.all(thetas == thetas[0]):
        r = _rotation(thetas[0])
        m = a @ r
        powers = np.empty((n, 2, 2), dtype=complex)
        powers[0] = np.eye(2)
        filled = 1
        while filled < n:
            step = min(filled, n - filled)
            block = powers[filled - 1] @ m  # m ** filled
            powers[filled : filled + step] = powers[:step] @ block
            filled += step
        q = r @ powers
        p = m @ powers[-1]
    else:
        q = np.empty((n, 2, 2), dtype=complex)
        p = np.eye(2, dtype=complex)
        for k, th in enumerate(thetas):
            q[k] = _rotation(th) @ p
            p = a @ q[k]
    q.setflags(write=False)
    p.setflags(write=False)
    return q, p


def _arm_weight(rows: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Per-cycle sum over columns of |rows[k] . x|^2, via the 2x2 Gram matrix of ``xs``."""
    gram = xs @ xs.conj().T
    return np.einsum("ki,ij,kj->k", rows, gram, rows.conj()).real


def _absorber_grid(space: Space, photon: str, absorber: str, bomb: BombParams) -> tuple[np.ndarray, np.ndarray]:
    """Per spectator basis state: U-arm transmission amplitude and failure cause."""
    rest = [s for s in space.subsystems if s.name != photon]
    dims = tuple(s.dim for s in rest)
    trans = np.ones(dims, dtype=complex)
    cause = np.full(dims, "", dtype=object)
    if absorber == "classical":
        trans[...] = bomb.transmission("g")
        cause[...] = ABSORBED
    elif absorber == "quantum":
        names = [s.name for s in rest]
        if "atom" not in names or "ensemble" not in names:
            raise ValueError("a quantum bomb needs 'atom' and 'ensemble' subsystems")
        ia, ie = names.index("atom"), names.index("ensemble")
        for lvl, c in (("g", ABSORBED), ("r", LEAKED)):
            idx = [slice(None)] * len(dims)
            idx[ia], idx[ie] = rest[ia].index(lvl), rest[ie].index("G")
            trans[tuple(idx)] = bomb.transmission(lvl)
            cause[tuple(idx)] = c
    elif absorber != "none":
        raise ValueError(f"unknown absorber kind {absorber!r}")
    return trans.reshape(-1), cause.reshape(-1)


def interrogate(
    state: PureState, cfg: InterrogationConfig, photon: str = "photon", absorber: str = "quantum"
) -> tuple[PureState, FailureLedger]:
    """Send the ``photon`` subsystem of ``state`` through the N-cycle interferometer.

    ``absorber`` is ``"none"`` (empty arm), ``"classical"`` (absorbs with
    ``cfg.bomb.p_abs``) or ``"quantum"`` (ensemble gated by the control atom).
    Returns the surviving sub-normalized state and the failure ledger.
    """
    space = state.space
    ax = space.axis(photon)
    sub = space.subsystems[ax]
    d, u = sub.index("D"), sub.index("U")
    x = np.moveaxis(state.tensor(), ax, 0).reshape(sub.dim, -1).copy()

    trans, cause = _absorber_grid(space, photon, absorber, cfg.bomb)
    eps = float(cfg.epsilon_loss)
    key = np.ascontiguousarray(cfg.thetas(), dtype=float).tobytes()
    ledger = FailureLedger.empty(cfg.n_cycles)

    rails = x[[d, u]]
    out = np.zeros_like(rails)
    for t in np.unique(trans):
        cols = trans == t
        q, p = _transfer(key, complex(t), eps)
        xs = rails[:, cols]
        absorbed = 1 - abs(t) ** 2
        if absorbed > 0:
            for c in np.unique(cause[cols]):
                if c:
                    ledger.per_cycle[c] += absorbed * _arm_weight(q[:, 1, :], xs[:, cause[cols] == c])
        if eps > 0:
            pd = _arm_weight(q[:, 0, :], xs)
            pu = _arm_weight(q[:, 1, :], xs)
            ledger.per_cycle[LOST] += eps * (pd + abs(t) ** 2 * pu)
        out[:, cols] = p @ xs
    x[[d, u]] = out
    if cfg.detour_phase:
        x[sub.index("OUT")] *= np.exp(1j * cfg.detour_phase)

    rest_dims = tuple(s.dim for s in space.subsystems if s.name != photon)
    t = np.moveaxis(x.reshape((sub.dim,) + rest_dims), 0, ax)
    return PureState(space, t), ledger


# -- density-operator oracle -----------------------------------------------------


def interrogate_density(
    rho: DensityOperator, cfg: InterrogationConfig, photon: str = "photon", absorber: str = "quantum"
) -> DensityOperator:
    """Compose the full Kraus channels cycle by cycle on a density operator."""
    space = rho.space
    kraus = []
    if absorber == "quantum":
        ch = blockaded_absorber(cfg.bomb, photon)
        kraus.append([embed(k, space, ("atom", "ensemble", photon)) for k in ch.kraus_ops])
    elif absorber == "classical":
        ch = absorber_channel(cfg.bomb.p_abs, photon, cfg.bomb.absorber_phase)
        kraus.append([embed(k, space, (photon,)) for k in ch.kraus_ops])
    kraus.append([embed(k, space, (photon,)) for k in loss_channel(cfg.epsilon_loss, photon).kraus_ops])

    m = rho.matrix
    splitters: dict[float, np.ndarray] = {}
    for theta in cfg.thetas():
        if theta not in splitters:
            splitters[theta] = embed(beamsplitter(theta, photon), space, (photon,))
        b = splitters[theta]
        m = b @ m @ b.conj().T
        for ops in kraus:
            m = sum(k @ m @ k.conj().T for k in ops)
    rho = DensityOperator(space, m)
    if cfg.detour_phase:
        rho = apply_operator_density(phase_shifter(cfg.detour_phase, "OUT", photon), rho, (photon,))
    return rho


def surviving_projector(space: Space, photons) -> np.ndarray:
    """Diagonal mask of basis states with no photon in a terminal level."""
    mask = np.ones(space.dims, dtype=bool)
    for name in photons:
        ax = space.axis(name)
        sub = space.subsystems[ax]
        for lvl in TERMINAL_LEVELS:
            idx = [slice(None)] * len(space.dims)
            idx[ax] = sub.index(lvl)
            mask[tuple(idx)] = False
    return mask.reshape(-1)


def oracle_deltas(state: PureState, failure: float, rho: DensityOperator, photons) -> tuple[float, float]:
    """Trace distance on the surviving sector and failure-probability delta."""
    keep = surviving_projector(rho.space, photons)
    m = rho.matrix * np.outer(keep, keep)
    surv = DensityOperator(rho.space, m)
    td = trace_distance(surv, to_density(state))
    oracle_failure = rho.trace - surv.trace
    return td, abs(oracle_failure - failure)


# -- runs --------------------------------------------------------------------------


def _run(state: PureState, cfg: InterrogationConfig, absorber: str, oracle: bool) -> RunOutcome:
    surviving, ledger = interrogate(state, cfg, "photon", absorber)
    outcome = RunOutcome(surviving, ledger, state.norm2)
    if outcome.conservation_error > CONSERVATION_TOL:
        raise InvariantError(
            f"probability not conserved: success {outcome.success_probability!r} + "
            f"failures {ledger.total()!r} != {state.norm2!r}"
        )
    if not oracle:
        return outcome
    rho = interrogate_density(to_density(state), cfg, "photon", absorber)
    td, dfail = oracle_deltas(surviving, ledger.total(), rho, ["photon"])
    return RunOutcome(surviving, ledger, state.norm2, rho, td, dfail)


def photon_in(level: str, name: str = "photon") -> PureState:
    return basis_state(Space.of(photon_subsystem(name)), **{name: level})


def run_ev_test(cfg: InterrogationConfig, bomb_present: bool, oracle: bool = False) -> RunOutcome:
    """Elitzur-Vaidman test: photon enters D, classical absorber in the U arm if present."""
    return _run(photon_in("D"), cfg, "classical" if bomb_present else "none", oracle)


def run_sign_mode(cfg: InterrogationConfig, bomb_present: bool, oracle: bool = False) -> RunOutcome:
    """Sign-mode interrogation (theta = pi/N): no bomb returns -D, a bomb freezes +D."""
    theta = cfg.resolved_theta
    if theta is None or abs(theta - np.pi / cfg.n_cycles) > 1e-15:
        raise ConfigError(f"sign mode needs theta = pi/N = {np.pi / cfg.n_cycles!r}, got {theta!r}")
    return _run(photon_in("D"), cfg, "classical" if bomb_present else "none", oracle)


def run_quantum_bomb(
    cfg: InterrogationConfig, bomb_state: PureState, photon_state: PureState, oracle: bool = False
) -> RunOutcome:
    """Interrogate a bomb in superposition; the photon may use U, D and OUT."""
    if bomb_state.space != BOMB_SPACE:
        raise ValueError(f"bomb state must live on {BOMB_SPACE.names}")
    if len(photon_state.space.subsystems) != 1 or photon_state.space.dim != 5:
        raise ValueError("photon state must be a single photon subsystem")
    photon = PureState(photon_in("D").space, photon_state.amplitudes)
    return _run(tensor_product(bomb_state, photon), cfg, "quantum", oracle)


def run_light_matter_cz(
    cfg: InterrogationConfig, bomb_state: PureState, photon_logical: PureState, oracle: bool = False
) -> RunOutcome:
    """Bomb-controlled phase: logical 0 takes the detour, logical 1 enters at D.

    A constant angle must be pi/N; an explicit ``theta_schedule`` is taken as given.
    """
    theta = cfg.resolved_theta
    if theta is not None and abs(theta - np.pi / cfg.n_cycles) > 1e-15:
        raise ConfigError("the light-matter CZ runs in sign mode (theta = pi/N) or on an explicit schedule")
    photon = as_photon(photon_logical, DETOUR, "photon")
    return run_quantum_bomb(cfg, bomb_state, photon, oracle)


def light_matter_cz_target(bomb_state: PureState, photon_logical: PureState) -> PureState:
    """Ideal output: the D-path term changes sign exactly on the transparent bomb branch."""
    photon = as_photon(photon_logical, DETOUR, "photon")
    state = tensor_product(bomb_state, photon)
    z = np.ones(state.space.dims, dtype=complex)
    z[1, 0, photon.space["photon"].index("D")] = -1
    return PureState(state.space, state.tensor() * z)


def reference_values(n_cycles: int, theta: float | None) -> dict[str, float]:
    """Closed-form survival and explosion laws for comparison with simulations."""
    n = n_cycles
    ref = {
        "one_minus_pi2_over_4n": 1 - np.pi**2 / (4 * n),
        "pi2_over_n": np.pi**2 / n,
    }
    if theta is not None:
        ref["cos_2n_theta"] = float(np.cos(theta) ** (2 * n))
        ref["one_minus_n_theta2"] = 1 - n * theta**2
    return {k: float(v) for k, v in ref.items()}


__all__ = [
    "CAUSES",
    "ConfigError",
    "FailureLedger",
    "InterrogationConfig",
    "InvariantError",
    "Mode",
    "RunOutcome",
    "interrogate",
    "interrogate_density",
    "light_matter_cz_target",
    "oracle_deltas",
    "reference_values",
    "run_ev_test",
    "run_light_matter_cz",
    "run_quantum_bomb",
    "run_sign_mode",
    "surviving_projector",
]
