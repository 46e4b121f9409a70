"""Dense linear algebra over small labeled Hilbert spaces.

A space is an ordered tuple of named subsystems, each with an ordered tuple of
level names. Amplitudes are stored flat in row-major order over that tuple, so
the basis ordering is fixed by declaration order and never changes.

Sub-normalized pure states are first-class: a conditioned branch carries its
probability in its squared norm.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

EXACT_TOL = 1e-12
CHANNEL_TOL = 1e-10


class SpaceError(ValueError):
    """Incompatible subsystems, names or dimensions."""


class ChannelError(ValueError):
    """Kraus set that is not trace preserving."""


class MeasurementError(ValueError):
    """Invalid measurement basis."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Subsystem:
    name: str
    levels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        if len(set(self.levels)) != len(self.levels):
            raise SpaceError(f"duplicate level names in subsystem {self.name!r}")

    @property
    def dim(self) -> int:
        return len(self.levels)

    def index(self, level: str) -> int:
        try:
            return self.levels.index(level)
        except ValueError:
            raise SpaceError(f"subsystem {self.name!r} has no level {level!r}") from None

    def renamed(self, name: str) -> Subsystem:
        return Subsystem(name, self.levels)


@dataclass(frozen=True)
class Space:
    """Ordered tensor product of subsystems."""

    subsystems: tuple[Subsystem, ...]

    def __post_init__(self):
        object.__setattr__(self, "subsystems", tuple(self.subsystems))
        names = [s.name for s in self.subsystems]
        if len(set(names)) != len(names):
            raise SpaceError(f"duplicate subsystem names: {names}")

    @classmethod
    def of(cls, *subsystems: Subsystem) -> Space:
        return cls(tuple(subsystems))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.subsystems)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(s.dim for s in self.subsystems)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims, dtype=int))

    def axis(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise SpaceError(f"space {self.names} has no subsystem {name!r}") from None

    def __getitem__(self, name: str) -> Subsystem:
        return self.subsystems[self.axis(name)]

    def __contains__(self, name: str) -> bool:
        return name in self.names

    def labels(self) -> list[tuple[tuple[str, str], ...]]:
        """Basis labels in canonical order; each is ((subsystem, level), ...)."""
        grids = np.indices(self.dims).reshape(len(self.dims), -1).T
        return [
            tuple((s.name, s.levels[i]) for s, i in zip(self.subsystems, idx))
            for idx in grids
        ]

    def flat_index(self, **levels: str) -> int:
        if set(levels) != set(self.names):
            raise SpaceError(f"need a level for each of {self.names}, got {sorted(levels)}")
        idx = tuple(s.index(levels[s.name]) for s in self.subsystems)
        return int(np.ravel_multi_index(idx, self.dims))

    def __mul__(self, other: Space) -> Space:
        clash = set(self.names) & set(other.names)
        if clash:
            raise SpaceError(f"subsystem name collision: {sorted(clash)}")
        return Space(self.subsystems + other.subsystems)

    def select(self, names: Sequence[str]) -> Space:
        return Space(tuple(self[n] for n in names))


@dataclass(frozen=True)
class PureState:
    space: Space
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = _frozen(self.amplitudes).reshape(-1)
        if amps.size != self.space.dim:
            raise SpaceError(f"{amps.size} amplitudes for a space of dimension {self.space.dim}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    @property
    def is_normalized(self) -> bool:
        return abs(self.norm2 - 1.0) <= EXACT_TOL

    def normalized(self) -> PureState:
        n = np.sqrt(self.norm2)
        if n == 0:
            raise ValueError("cannot normalize a zero state")
        return PureState(self.space, self.amplitudes / n)

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.space.dims)

    def amplitude(self, **levels: str) -> complex:
        return complex(self.amplitudes[self.space.flat_index(**levels)])

    def __add__(self, other: PureState) -> PureState:
        _same_space(self.space, other.space)
        return PureState(self.space, self.amplitudes + other.amplitudes)

    def __mul__(self, c: complex) -> PureState:
        return PureState(self.space, self.amplitudes * c)

    __rmul__ = __mul__

    def __matmul__(self, other: PureState) -> PureState:
        return tensor_product(self, other)


@dataclass(frozen=True)
class Operator:
    """Square matrix acting on ``space``; ``space`` names are default targets."""

    space: Space
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = _frozen(self.matrix)
        d = self.space.dim
        if m.shape != (d, d):
            raise SpaceError(f"operator matrix shape {m.shape} does not match dimension {d}")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls, space: Space) -> Operator:
        return cls(space, np.eye(space.dim))

    @property
    def is_unitary(self) -> bool:
        m = self.matrix
        return np.allclose(m.conj().T @ m, np.eye(len(m)), atol=EXACT_TOL, rtol=0)

    def __matmul__(self, other: Operator) -> Operator:
        """Composition ``self * other`` (``other`` acts first)."""
        _same_space(self.space, other.space)
        return Operator(self.space, self.matrix @ other.matrix)

    def dagger(self) -> Operator:
        return Operator(self.space, self.matrix.conj().T)

    def power(self, k: int) -> Operator:
        return Operator(self.space, np.linalg.matrix_power(self.matrix, k))

    def renamed(self, *names: str) -> Operator:
        if len(names) != len(self.space.subsystems):
            raise SpaceError("one new name per subsystem required")
        subs = tuple(s.renamed(n) for s, n in zip(self.space.subsystems, names))
        return Operator(Space(subs), self.matrix)


@dataclass(frozen=True)
class DensityOperator:
    space: Space
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = _frozen(self.matrix)
        d = self.space.dim
        if m.shape != (d, d):
            raise SpaceError(f"density matrix shape {m.shape} does not match dimension {d}")
        object.__setattr__(self, "matrix", m)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def check(self) -> None:
        m = self.matrix
        if not np.allclose(m, m.conj().T, atol=EXACT_TOL, rtol=0):
            raise ValueError("density operator is not Hermitian")
        if np.linalg.eigvalsh(m).min() < -CHANNEL_TOL:
            raise ValueError("density operator is not positive semidefinite")
        if self.trace > 1 + EXACT_TOL:
            raise ValueError(f"density operator trace {self.trace} exceeds 1")

    def normalized(self) -> DensityOperator:
        return DensityOperator(self.space, self.matrix / self.trace)


@dataclass(frozen=True)
class QuantumChannel:
    """Kraus representation; ``causes[i]`` names the event of ``kraus_ops[i]``.

    The no-event operator carries cause ``None``.
    """

    kraus_ops: tuple[Operator, ...]
    causes: tuple[str | None, ...] = ()

    def __post_init__(self):
        ops = tuple(self.kraus_ops)
        if not ops:
            raise ChannelError("a channel needs at least one Kraus operator")
        causes = tuple(self.causes) or (None,) * len(ops)
        if len(causes) != len(ops):
            raise ChannelError("one cause per Kraus operator required")
        space = ops[0].space
        for k in ops[1:]:
            _same_space(space, k.space)
        total = sum(k.matrix.conj().T @ k.matrix for k in ops)
        err = np.abs(total - np.eye(space.dim)).max()
        if err > CHANNEL_TOL:
            raise ChannelError(f"Kraus operators are not trace preserving (max deviation {err:.3e})")
        object.__setattr__(self, "kraus_ops", ops)
        object.__setattr__(self, "causes", causes)

    @property
    def space(self) -> Space:
        return self.kraus_ops[0].space

    @classmethod
    def identity(cls, space: Space) -> QuantumChannel:
        return cls((Operator.identity(space),))


def _same_space(a: Space, b: Space) -> None:
    if a != b:
        raise SpaceError(f"space mismatch: {a.names}{a.dims} vs {b.names}{b.dims}")


def tensor_product(a, b):
    """Kronecker product of two states, operators or density operators."""
    space = a.space * b.space
    if isinstance(a, PureState) and isinstance(b, PureState):
        return PureState(space, np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, Operator) and isinstance(b, Operator):
        return Operator(space, np.kron(a.matrix, b.matrix))
    if isinstance(a, DensityOperator) and isinstance(b, DensityOperator):
        return DensityOperator(space, np.kron(a.matrix, b.matrix))
    raise TypeError(f"cannot take tensor product of {type(a).__name__} and {type(b).__name__}")


def _resolve_targets(op_space: Space, space: Space, targets: Sequence[str] | None) -> list[int]:
    targets = tuple(targets) if targets is not None else op_space.names
    if isinstance(targets, str):
        targets = (targets,)
    if len(targets) != len(op_space.subsystems):
        raise SpaceError(f"operator acts on {len(op_space.subsystems)} subsystems, got targets {targets}")
    if len(set(targets)) != len(targets):
        raise SpaceError(f"repeated targets {targets}")
    axes = [space.axis(t) for t in targets]
    for sub, ax in zip(op_space.subsystems, axes):
        if space.subsystems[ax].dim != sub.dim:
            raise SpaceError(
                f"dimension mismatch on {space.subsystems[ax].name!r}: "
                f"operator expects {sub.dim}, state has {space.subsystems[ax].dim}"
            )
    return axes


def _apply_matrix(matrix: np.ndarray, tensor: np.ndarray, axes: list[int], op_dims) -> np.ndarray:
    k = len(axes)
    m = matrix.reshape(tuple(op_dims) * 2)
    out = np.tensordot(m, tensor, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(out, list(range(k)), axes)


def apply_operator(op: Operator, s: PureState, targets: Sequence[str] | None = None) -> PureState:
    """Apply ``op`` to the ``targets`` subsystems of ``s`` (identity elsewhere)."""
    axes = _resolve_targets(op.space, s.space, targets)
    out = _apply_matrix(op.matrix, s.tensor(), axes, op.space.dims)
    return PureState(s.space, out)


def embed(op: Operator, space: Space, targets: Sequence[str] | None = None) -> np.ndarray:
    """Full matrix of ``op`` acting on ``targets`` within ``space``."""
    axes = _resolve_targets(op.space, space, targets)
    eye = np.eye(space.dim, dtype=complex).reshape(space.dims * 2)
    out = _apply_matrix(op.matrix, eye, axes, op.space.dims)
    return out.reshape(space.dim, space.dim)


def apply_channel(
    ch: QuantumChannel, s: PureState, targets: Sequence[str] | None = None
) -> list[tuple[PureState, str | None]]:
    """One sub-normalized branch per Kraus operator, tagged with its cause."""
    return [(apply_operator(k, s, targets), c) for k, c in zip(ch.kraus_ops, ch.causes)]


def apply_operator_density(
    op: Operator, rho: DensityOperator, targets: Sequence[str] | None = None
) -> DensityOperator:
    m = embed(op, rho.space, targets)
    return DensityOperator(rho.space, m @ rho.matrix @ m.conj().T)


def apply_channel_density(
    ch: QuantumChannel, rho: DensityOperator, targets: Sequence[str] | None = None
) -> DensityOperator:
    out = np.zeros_like(rho.matrix)
    for k in ch.kraus_ops:
        m = embed(k, rho.space, targets)
        out += m @ rho.matrix @ m.conj().T
    return DensityOperator(rho.space, out)


@dataclass(frozen=True)
class Outcome:
    label: str
    probability: float
    state: PureState  # renormalized post-measurement state (zero if probability is 0)


def projective_measure(
    s: PureState, subsystem: str, basis: Mapping[str, Iterable[complex]] | None = None
) -> list[Outcome]:
    """Measure ``subsystem`` in ``basis`` (outcome label -> vector; default: its levels)."""
    ax = s.space.axis(subsystem)
    sub = s.space.subsystems[ax]
    if basis is None:
        basis = {lvl: np.eye(sub.dim)[i] for i, lvl in enumerate(sub.levels)}
    labels = list(basis)
    vecs = np.array([np.asarray(basis[k], dtype=complex) for k in labels])
    if vecs.shape[1] != sub.dim:
        raise MeasurementError(f"basis vectors must have length {sub.dim}")
    gram = vecs.conj() @ vecs.T
    if not np.allclose(gram, np.eye(len(labels)), atol=EXACT_TOL, rtol=0):
        raise MeasurementError("measurement basis is not orthonormal")
    if len(labels) != sub.dim:
        raise MeasurementError("measurement basis is not complete")
    out = []
    t = s.tensor()
    for label, v in zip(labels, vecs):
        proj = np.outer(v, v.conj())
        branch = _apply_matrix(proj, t, [ax], (sub.dim,))
        p = float(np.vdot(branch, branch).real)
        post = branch / np.sqrt(p) if p > 0 else branch
        out.append(Outcome(label, p, PureState(s.space, post)))
    return out


def to_density(s: PureState) -> DensityOperator:
    return DensityOperator(s.space, np.outer(s.amplitudes, s.amplitudes.conj()))


def mix(branches: Iterable) -> DensityOperator:
    """Sum of branch projectors; accepts states or (state, cause) pairs."""
    items = [b[0] if isinstance(b, tuple) else b for b in branches]
    if not items:
        raise ValueError("nothing to mix")
    space = items[0].space
    m = np.zeros((space.dim, space.dim), dtype=complex)
    for s in items:
        _same_space(space, s.space)
        if isinstance(s, DensityOperator):
            m += s.matrix
        else:
            m += np.outer(s.amplitudes, s.amplitudes.conj())
    return DensityOperator(space, m)


def fidelity(out: PureState | DensityOperator, ref: PureState) -> float:
    """|<ref|out>|^2 for states, <ref|rho|ref> for density operators."""
    _same_space(out.space, ref.space)
    if not ref.is_normalized:
        raise ValueError("reference state must be normalized")
    if isinstance(out, DensityOperator):
        f = np.vdot(ref.amplitudes, out.matrix @ ref.amplitudes).real
    else:
        f = abs(np.vdot(ref.amplitudes, out.amplitudes)) ** 2
    return float(min(max(f, 0.0), 1.0))


def trace_distance(a: PureState | DensityOperator, b: PureState | DensityOperator) -> float:
    a = to_density(a) if isinstance(a, PureState) else a
    b = to_density(b) if isinstance(b, PureState) else b
    _same_space(a.space, b.space)
    return float(0.5 * np.abs(np.linalg.eigvalsh(a.matrix - b.matrix)).sum())


def partial_trace(rho: PureState | DensityOperator, keep: Sequence[str]) -> DensityOperator:
    """Reduced density operator on the ``keep`` subsystems (in the given order)."""
    rho = to_density(rho) if isinstance(rho, PureState) else rho
    space = rho.space
    keep_ax = [space.axis(n) for n in keep]
    drop_ax = [i for i in range(len(space.dims)) if i not in keep_ax]
    n = len(space.dims)
    t = rho.matrix.reshape(space.dims * 2)
    t = np.transpose(t, keep_ax + drop_ax + [n + i for i in keep_ax] + [n + i for i in drop_ax])
    dk = int(np.prod([space.dims[i] for i in keep_ax], dtype=int))
    dd = int(np.prod([space.dims[i] for i in drop_ax], dtype=int))
    t = t.reshape(dk, dd, dk, dd)
    return DensityOperator(space.select(keep), np.einsum("ajbj->ab", t))


def project_levels(s: PureState, allowed: Mapping[str, Sequence[str]]) -> PureState:
    """Restrict subsystems to a subset of their levels, giving a smaller space."""
    t = s.tensor()
    subs = []
    for ax, sub in enumerate(s.space.subsystems):
        if sub.name in allowed:
            idx = [sub.index(l) for l in allowed[sub.name]]
            t = np.take(t, idx, axis=ax)
            subs.append(Subsystem(sub.name, tuple(allowed[sub.name])))
        else:
            subs.append(sub)
    return PureState(Space(tuple(subs)), t)


def concurrence(state: PureState) -> float:
    """Pure-state concurrence 2|ad - bc| of a normalized two-qubit state."""
    if state.space.dims != (2, 2):
        raise SpaceError(f"concurrence needs two 2-level subsystems, got dims {state.space.dims}")
    if not state.is_normalized:
        raise ValueError("concurrence needs a normalized state")
    a, b, c, d = state.amplitudes
    return float(min(2 * abs(a * d - b * c), 1.0))


def basis_state(space: Space, **levels: str) -> PureState:
    amps = np.zeros(space.dim, dtype=complex)
    amps[space.flat_index(**levels)] = 1.0
    return PureState(space, amps)


def state_from(subsystem: Subsystem, amplitudes: Mapping[str, complex]) -> PureState:
    """Single-subsystem state from a level -> amplitude mapping."""
    amps = np.zeros(subsystem.dim, dtype=complex)
    for level, a in amplitudes.items():
        amps[subsystem.index(level)] = a
    return PureState(Space.of(subsystem), amps)


def random_state(space: Space, rng: np.random.Generator) -> PureState:
    v = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
    return PureState(space, v / np.linalg.norm(v))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
