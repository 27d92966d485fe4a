"""Dense finite-dimensional quantum states over labelled registers.

States are immutable values. A :class:`RegisterLayout` fixes the order and
dimension of every register; amplitudes and matrices use the row-major
(big-endian) convention, so the first register is the most significant
index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence, Union

import numpy as np
from scipy.linalg import block_diag
from scipy.stats import unitary_group

DEFAULT_TOL = 1e-9
# branches lighter than this are dropped
ZERO_PROB = 1e-12


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered list of ``(label, dimension)`` pairs."""

    registers: tuple[tuple[str, int], ...]

    def __post_init__(self):
        regs = tuple((str(label), int(dim)) for label, dim in self.registers)
        labels = [label for label, _ in regs]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate register labels in {labels}")
        for label, dim in regs:
            if dim < 1:
                raise ValueError(f"register {label!r} has dimension {dim} < 1")
        object.__setattr__(self, "registers", regs)

    @classmethod
    def of(cls, *pairs: tuple[str, int]) -> "RegisterLayout":
        return cls(tuple(pairs))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.registers)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.registers)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64))

    def __len__(self):
        return len(self.registers)

    def __contains__(self, label):
        return label in self.labels

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown register {label!r}; layout has {self.labels}") from None

    def dim_of(self, labels: Iterable[str]) -> int:
        return int(np.prod([self.dims[self.index(lb)] for lb in labels], dtype=np.int64))

    def ordered(self, labels: Iterable[str]) -> tuple[str, ...]:
        """Return ``labels`` sorted into layout order, validating each."""
        wanted = set(labels)
        for lb in wanted:
            self.index(lb)
        return tuple(lb for lb in self.labels if lb in wanted)

    def subset(self, labels: Iterable[str]) -> "RegisterLayout":
        keep = set(self.ordered(labels))
        return RegisterLayout(tuple(r for r in self.registers if r[0] in keep))

    def concat(self, other: "RegisterLayout") -> "RegisterLayout":
        clash = set(self.labels) & set(other.labels)
        if clash:
            raise ValueError(f"register labels collide: {sorted(clash)}")
        return RegisterLayout(self.registers + other.registers)


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.complex128, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PureState:
    """State vector on a register layout, normalized to 1."""

    layout: RegisterLayout
    amplitudes: np.ndarray
    tol: float = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        amps = _frozen(np.asarray(self.amplitudes).reshape(-1))
        if amps.shape != (self.layout.dim,):
            raise ValueError(f"expected {self.layout.dim} amplitudes, got {amps.shape[0]}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > self.tol:
            raise ValueError(f"state norm {norm!r} differs from 1")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, layout: RegisterLayout, vector) -> "PureState":
        vec = np.asarray(vector, dtype=np.complex128).reshape(-1)
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(layout, vec / norm)

    @classmethod
    def basis(cls, layout: RegisterLayout, indices: Sequence[int]) -> "PureState":
        """Computational basis state with one index per register."""
        if len(indices) != len(layout):
            raise ValueError("need one basis index per register")
        vec = np.zeros(layout.dim, dtype=np.complex128)
        vec[np.ravel_multi_index(tuple(indices), layout.dims)] = 1.0
        return cls(layout, vec)

    def density(self) -> "DensityOperator":
        return DensityOperator._unchecked(self.layout, np.outer(self.amplitudes, self.amplitudes.conj()))

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.layout.dims)

    def relabel(self, mapping: dict[str, str]) -> "PureState":
        layout = RegisterLayout(tuple((mapping.get(lb, lb), d) for lb, d in self.layout.registers))
        return PureState(layout, self.amplitudes, self.tol)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    """Hermitian, positive semi-definite, unit-trace matrix on a layout."""

    layout: RegisterLayout
    matrix: np.ndarray
    tol: float = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        mat = _frozen(self.matrix)
        d = self.layout.dim
        if mat.shape != (d, d):
            raise ValueError(f"expected a {d}x{d} matrix, got {mat.shape}")
        if not np.all(np.isfinite(mat)):
            raise ValueError("matrix entries must be finite")
        if np.max(np.abs(mat - mat.conj().T), initial=0.0) > self.tol:
            raise ValueError("matrix is not Hermitian")
        if abs(np.trace(mat).real - 1.0) > self.tol:
            raise ValueError(f"trace {np.trace(mat).real!r} differs from 1")
        lowest = np.linalg.eigvalsh(mat)[0]
        if lowest < -self.tol:
            raise ValueError(f"matrix is not positive semi-definite (eigenvalue {lowest:.3e})")
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def _unchecked(cls, layout: RegisterLayout, matrix: np.ndarray) -> "DensityOperator":
        # for outputs of operations that preserve validity by construction
        obj = object.__new__(cls)
        object.__setattr__(obj, "layout", layout)
        object.__setattr__(obj, "matrix", _frozen(matrix))
        object.__setattr__(obj, "tol", DEFAULT_TOL)
        return obj

    @classmethod
    def classical(cls, layout: RegisterLayout, probs) -> "DensityOperator":
        """Diagonal state encoding a probability vector over the joint index."""
        p = np.asarray(probs, dtype=float).reshape(-1)
        return cls(layout, np.diag(p))

    @classmethod
    def maximally_mixed(cls, layout: RegisterLayout) -> "DensityOperator":
        return cls._unchecked(layout, np.eye(layout.dim) / layout.dim)

    def tensor(self) -> np.ndarray:
        return self.matrix.reshape(self.layout.dims * 2)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def relabel(self, mapping: dict[str, str]) -> "DensityOperator":
        layout = RegisterLayout(tuple((mapping.get(lb, lb), d) for lb, d in self.layout.registers))
        return DensityOperator._unchecked(layout, self.matrix)


State = Union[PureState, DensityOperator]


def as_density(state: State) -> DensityOperator:
    return state.density() if isinstance(state, PureState) else state


# -- linear algebra helpers -------------------------------------------------

def eigh_sorted(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hermitian eigendecomposition with a reproducible gauge.

    Eigenvalues come out in descending order. Each eigenvector is rescaled by
    a phase so that its first entry of non-negligible magnitude is real and
    positive.
    """
    vals, vecs = np.linalg.eigh(matrix)
    vals, vecs = vals[::-1], vecs[:, ::-1].copy()
    for k in range(vecs.shape[1]):
        col = vecs[:, k]
        lead = np.flatnonzero(np.abs(col) > 1e-12)
        if lead.size:
            ph = col[lead[0]] / abs(col[lead[0]])
            vecs[:, k] = col / ph
    return vals, vecs


def psd_sqrt(matrix: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(matrix)
    vals = np.sqrt(np.clip(vals, 0.0, None))
    return (vecs * vals) @ vecs.conj().T


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    if dim == 1:
        return np.exp(2j * np.pi * rng.random()).reshape(1, 1)
    return unitary_group.rvs(dim, random_state=rng)


def random_pure_state(layout: RegisterLayout, rng: np.random.Generator) -> PureState:
    vec = rng.normal(size=layout.dim) + 1j * rng.normal(size=layout.dim)
    return PureState.normalized(layout, vec)


def random_density(layout: RegisterLayout, rng: np.random.Generator, rank: int | None = None) -> DensityOperator:
    """Random mixed state with the induced (Hilbert-Schmidt type) measure."""
    d = layout.dim
    r = d if rank is None else rank
    g = rng.normal(size=(d, r)) + 1j * rng.normal(size=(d, r))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return DensityOperator(layout, rho / np.trace(rho).real)


# -- tensor network plumbing ------------------------------------------------

def _apply_left(tensor: np.ndarray, op: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    """Contract ``op`` (acting on ``axes`` in the given order) into ``tensor``."""
    k = len(axes)
    tdims = [tensor.shape[a] for a in axes]
    op_t = op.reshape(tdims + tdims)
    out = np.tensordot(op_t, tensor, axes=(list(range(k, 2 * k)), list(axes)))
    return np.moveaxis(out, list(range(k)), list(axes))


def apply_to_amplitudes(amps: np.ndarray, layout: RegisterLayout, op: np.ndarray,
                        targets: Sequence[str]) -> np.ndarray:
    """``(op x 1)`` applied to a raw, possibly unnormalized, amplitude vector."""
    axes = [layout.index(t) for t in targets]
    return _apply_left(np.asarray(amps).reshape(layout.dims), np.asarray(op), axes).reshape(-1)


def apply_operator(state: State, op: np.ndarray, targets: Sequence[str]):
    """Return the unnormalized ``op|psi>`` vector or ``op rho op^dagger`` matrix.

    ``op`` acts on ``targets`` in the order given. The result is a raw
    ndarray because the operator need not preserve the norm.
    """
    layout = state.layout
    axes = [layout.index(t) for t in targets]
    op = np.asarray(op, dtype=np.complex128)
    need = layout.dim_of(targets)
    if op.shape != (need, need):
        raise ValueError(f"operator shape {op.shape} does not match registers {tuple(targets)} (dim {need})")
    if isinstance(state, PureState):
        return _apply_left(state.tensor(), op, axes).reshape(-1)
    n = len(layout)
    t = _apply_left(state.tensor(), op, axes)
    t = _apply_left(t, op.conj(), [n + a for a in axes])
    return t.reshape(layout.dim, layout.dim)


def apply_unitary(state: State, unitary: np.ndarray, targets: Sequence[str]) -> State:
    out = apply_operator(state, unitary, targets)
    if isinstance(state, PureState):
        return PureState(state.layout, out, state.tol)
    return DensityOperator._unchecked(state.layout, out)


# -- core operations --------------------------------------------------------

def tensor(a: State, b: State) -> State:
    """Tensor product; the combined layout is ``a``'s registers then ``b``'s."""
    if isinstance(a, PureState) != isinstance(b, PureState):
        raise TypeError("tensor needs two pure states or two density operators")
    layout = a.layout.concat(b.layout)
    if isinstance(a, PureState):
        return PureState(layout, np.kron(a.amplitudes, b.amplitudes))
    return DensityOperator._unchecked(layout, np.kron(a.matrix, b.matrix))


def partial_trace(state: State, keep: Iterable[str]) -> DensityOperator:
    """Marginal on the registers in ``keep`` (returned in layout order)."""
    layout = state.layout
    kept = layout.ordered(keep)
    out_layout = layout.subset(kept)
    keep_axes = [layout.index(lb) for lb in kept]
    drop_axes = [i for i in range(len(layout)) if i not in keep_axes]
    dk = out_layout.dim
    if isinstance(state, PureState):
        m = np.transpose(state.tensor(), keep_axes + drop_axes).reshape(dk, -1)
        return DensityOperator._unchecked(out_layout, m @ m.conj().T)
    n = len(layout)
    t = np.transpose(state.tensor(), keep_axes + drop_axes + [n + a for a in keep_axes] + [n + a for a in drop_axes])
    dd = layout.dim // dk
    t = t.reshape(dk, dd, dk, dd)
    return DensityOperator._unchecked(out_layout, np.einsum("aibi->ab", t))


def purify(rho: DensityOperator, anc_label: str = "R") -> PureState:
    """Purification ``(sqrt(rho) x 1) sum_i |i>|i>`` with a full-size ancilla.

    For a diagonal ``rho`` this is ``sum_x sqrt(p_x)|x>|x>``.
    """
    if anc_label in rho.layout:
        raise ValueError(f"ancilla label {anc_label!r} already in layout")
    vals = np.linalg.eigvalsh(rho.matrix)
    if vals[0] < -rho.tol:
        raise ValueError("cannot purify a non-PSD operator")
    d = rho.layout.dim
    root = psd_sqrt(rho.matrix)
    layout = rho.layout.concat(RegisterLayout(((anc_label, d),)))
    return PureState.normalized(layout, root.reshape(-1))


def _check_same_layout(a: State, b: State):
    if a.layout != b.layout:
        raise ValueError(f"layouts differ: {a.layout.registers} vs {b.layout.registers}")


def trace_distance(rho: State, sigma: State) -> float:
    """Half the trace norm of ``rho - sigma``."""
    _check_same_layout(rho, sigma)
    if isinstance(rho, PureState) and isinstance(sigma, PureState):
        ov = abs(np.vdot(rho.amplitudes, sigma.amplitudes)) ** 2
        return float(np.sqrt(max(0.0, 1.0 - ov)))
    diff = as_density(rho).matrix - as_density(sigma).matrix
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff))))


def fidelity(rho: State, sigma: State) -> float:
    """Root fidelity ``|| sqrt(rho) sqrt(sigma) ||_1`` (``|<psi|phi>|`` for pure inputs)."""
    _check_same_layout(rho, sigma)
    if isinstance(rho, PureState) and isinstance(sigma, PureState):
        return float(min(1.0, abs(np.vdot(rho.amplitudes, sigma.amplitudes))))
    a = psd_sqrt(as_density(rho).matrix)
    b = psd_sqrt(as_density(sigma).matrix)
    return float(min(1.0, np.sum(np.linalg.svd(a @ b, compute_uv=False))))


def _cut_matrix(psi: PureState, bob_side: Sequence[str]) -> np.ndarray:
    layout = psi.layout
    bob = [layout.index(lb) for lb in bob_side]
    rest = [i for i in range(len(layout)) if i not in bob]
    return np.transpose(psi.tensor(), rest + bob).reshape(-1, layout.dim_of(bob_side))


def _bob_labels(layout: RegisterLayout, bob_side: Iterable[str]) -> tuple[str, ...]:
    bob = layout.ordered(bob_side)
    if not bob or len(bob) == len(layout):
        raise ValueError("the cut must leave registers on both sides")
    return bob


def uhlmann_rotation(psi0: PureState, psi1: PureState, bob_side: Iterable[str]) -> np.ndarray:
    """Unitary on ``bob_side`` maximizing ``|<psi1|(1 x U)|psi0>|``.

    The maximum equals the fidelity of the two marginals on the other
    registers. ``U`` acts on the ``bob_side`` registers in layout order.
    """
    _check_same_layout(psi0, psi1)
    bob = _bob_labels(psi0.layout, bob_side)
    m0 = _cut_matrix(psi0, bob)
    m1 = _cut_matrix(psi1, bob)
    # <psi1|(1 x U)|psi0> = tr(m1^dag m0 U^T); choose U^T = Q P^dag for m1^dag m0 = P S Q^dag
    p, _, qh = np.linalg.svd(m1.conj().T @ m0)
    return (qh.conj().T @ p.conj().T).T


def rotation_overlap(psi0: PureState, psi1: PureState, unitary: np.ndarray, bob_side: Iterable[str]) -> float:
    """``|<psi1|(1 x U)|psi0>|`` for a unitary on ``bob_side``."""
    bob = psi0.layout.ordered(bob_side)
    return float(abs(np.vdot(psi1.amplitudes, apply_operator(psi0, unitary, bob))))


class Branch(NamedTuple):
    """One classical transcript of a cq-family: its label, weight and pure state."""

    label: str
    prob: float
    state: PureState


@dataclass(frozen=True, eq=False)
class BlockUnitary:
    """Unitary that is block diagonal in a classical transcript register."""

    blocks: dict
    registers: tuple[str, ...]

    def __getitem__(self, label: str) -> np.ndarray:
        return self.blocks[label]

    def matrix(self, order: Sequence[str] | None = None) -> np.ndarray:
        order = list(self.blocks) if order is None else list(order)
        return block_diag(*[self.blocks[t] for t in order])

    def apply(self, label: str, state: State) -> State:
        return apply_unitary(state, self.blocks[label], self.registers)


def conditioned_uhlmann(branches0: Sequence[Branch], branches1: Sequence[Branch],
                        bob_side: Iterable[str]) -> BlockUnitary:
    """Per-transcript Uhlmann rotations taking family 0 toward family 1.

    Both families must list the same transcript labels. Blocks where either
    family has (numerically) zero weight get the identity.
    """
    f0 = {b.label: b for b in branches0}
    f1 = {b.label: b for b in branches1}
    if set(f0) != set(f1):
        raise ValueError(f"transcript alphabets differ: {sorted(set(f0) ^ set(f1))}")
    if not f0:
        raise ValueError("empty branch families")
    layout = next(iter(f0.values())).state.layout
    bob = _bob_labels(layout, bob_side)
    d = layout.dim_of(bob)
    blocks = {}
    for t in f0:
        if f0[t].prob < ZERO_PROB or f1[t].prob < ZERO_PROB:
            blocks[t] = np.eye(d, dtype=np.complex128)
        else:
            blocks[t] = uhlmann_rotation(f0[t].state, f1[t].state, bob)
    return BlockUnitary(blocks, bob)


def cq_state(branches: Sequence[Branch], keep: Iterable[str] | None = None,
             transcript_label: str = "T") -> DensityOperator:
    """Dense cq-state ``sum_t p_t |t><t| x rho_t`` with ``rho_t`` optionally reduced to ``keep``.

    The transcript register is placed first. Labels are enumerated in the
    order given.
    """
    branches = list(branches)
    first = branches[0].state.layout
    keep = first.labels if keep is None else first.ordered(keep)
    sub = first.subset(keep)
    d = sub.dim
    mat = np.zeros((len(branches) * d, len(branches) * d), dtype=np.complex128)
    for i, b in enumerate(branches):
        mat[i * d:(i + 1) * d, i * d:(i + 1) * d] = b.prob * partial_trace(b.state, keep).matrix
    layout = RegisterLayout(((transcript_label, len(branches)),)).concat(sub)
    return DensityOperator._unchecked(layout, mat)


def cq_distance(branches0: Sequence[Branch], branches1: Sequence[Branch],
                keep: Iterable[str] | None = None) -> float:
    """Trace distance between two cq-families, transcript register included.

    Computed block by block; labels missing from one family count as zero
    weight there.
    """
    f0 = {b.label: b for b in branches0}
    f1 = {b.label: b for b in branches1}
    total = 0.0
    for t in set(f0) | set(f1):
        mats = []
        for fam in (f0, f1):
            if t in fam:
                b = fam[t]
                mats.append(b.prob * (b.state.density().matrix if keep is None else partial_trace(b.state, keep).matrix))
            else:
                mats.append(None)
        if mats[0] is None:
            total += np.trace(mats[1]).real
        elif mats[1] is None:
            total += np.trace(mats[0]).real
        else:
            total += np.sum(np.abs(np.linalg.eigvalsh(mats[0] - mats[1])))
    return float(0.5 * total)


# -- measurements -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Measurement:
    """Kraus operators ``M_z`` acting on a subset of registers.

    ``registers`` gives the target registers in the order the operators
    expect. Completeness ``sum_z M_z^dagger M_z = 1`` is enforced.
    """

    registers: tuple[str, ...]
    outcomes: tuple[tuple[str, np.ndarray], ...]
    tol: float = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        regs = tuple(self.registers)
        outs = tuple((str(z), _frozen(op)) for z, op in self.outcomes)
        if not outs:
            raise ValueError("a measurement needs at least one outcome")
        labels = [z for z, _ in outs]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate outcome labels {labels}")
        shape = outs[0][1].shape
        if len(shape) != 2 or shape[0] != shape[1]:
            raise ValueError("Kraus operators must be square")
        for z, op in outs:
            if op.shape != shape:
                raise ValueError(f"Kraus operator {z!r} has shape {op.shape}, expected {shape}")
        total = sum(op.conj().T @ op for _, op in outs)
        err = np.max(np.abs(total - np.eye(shape[0])))
        if err > self.tol:
            raise ValueError(f"incomplete measurement: sum of effects deviates from identity by {err:.3e}")
        object.__setattr__(self, "registers", regs)
        object.__setattr__(self, "outcomes", outs)

    @classmethod
    def projective(cls, registers: Sequence[str], dim: int, groups: dict) -> "Measurement":
        """Projective measurement; ``groups`` maps outcome label to basis indices."""
        outs = []
        for z, idx in groups.items():
            p = np.zeros((dim, dim))
            p[list(idx), list(idx)] = 1.0
            outs.append((z, p))
        return cls(tuple(registers), tuple(outs))

    @classmethod
    def computational(cls, register: str, dim: int) -> "Measurement":
        return cls.projective((register,), dim, {str(i): [i] for i in range(dim)})

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(z for z, _ in self.outcomes)

    @property
    def dim(self) -> int:
        return self.outcomes[0][1].shape[0]

    def effects(self) -> list[np.ndarray]:
        return [op.conj().T @ op for _, op in self.outcomes]


class Outcome(NamedTuple):
    label: str
    probability: float
    state: State


def measure(state: State, m: Measurement) -> list[Outcome]:
    """Outcome probabilities and renormalized post-measurement states.

    Outcomes with probability below the zero threshold are omitted.
    """
    results = []
    for z, op in m.outcomes:
        out = apply_operator(state, op, m.registers)
        if isinstance(state, PureState):
            p = float(np.vdot(out, out).real)
            if p < ZERO_PROB:
                continue
            results.append(Outcome(z, p, PureState(state.layout, out / np.sqrt(p))))
        else:
            p = float(np.trace(out).real)
            if p < ZERO_PROB:
                continue
            results.append(Outcome(z, p, DensityOperator._unchecked(state.layout, out / p)))
    return results


def measurement_channel(state: State, m: Measurement) -> DensityOperator:
    """The channel ``rho -> sum_z M_z rho M_z^dagger`` (outcome discarded)."""
    rho = as_density(state)
    out = sum(apply_operator(rho, op, m.registers) for _, op in m.outcomes)
    return DensityOperator._unchecked(rho.layout, out)


def _classical_blocks(state: DensityOperator, x_register: str, tol: float):
    """Split a state classical on ``x_register`` into weights and conditional states."""
    layout = state.layout
    ax = layout.index(x_register)
    rest = [lb for lb in layout.labels if lb != x_register]
    n = len(layout)
    t = state.tensor()
    t = np.moveaxis(t, [ax, n + ax], [0, n])
    dx = layout.dims[ax]
    dr = layout.dim // dx
    t = t.reshape(dx, dr, dx, dr)
    off = t.copy()
    for x in range(dx):
        off[x, :, x, :] = 0
    if np.max(np.abs(off), initial=0.0) > tol:
        raise ValueError(f"state is not classical on register {x_register!r}")
    weights = np.array([np.trace(t[x, :, x, :]).real for x in range(dx)])
    blocks = [t[x, :, x, :] for x in range(dx)]
    return weights, blocks, layout.subset(rest)


def detection_error(state: DensityOperator, m: Measurement, x_register: str) -> float:
    """``1 - min_x tr(E_x rho^x)`` over values of ``x`` with non-zero weight."""
    weights, blocks, rest = _classical_blocks(state, x_register, state.tol)
    _check_alphabet(m, len(weights))
    worst = 0.0
    for x, (w, blk) in enumerate(zip(weights, blocks)):
        if w < ZERO_PROB:
            continue
        cond = DensityOperator._unchecked(rest, blk / w)
        p = np.trace(apply_operator(cond, m.outcomes[x][1], m.registers)).real
        worst = max(worst, 1.0 - p)
    return float(worst)


def _check_alphabet(m: Measurement, size: int):
    if len(m.outcomes) != size:
        raise ValueError(f"measurement has {len(m.outcomes)} outcomes but the classical register has {size} values")


def gentle_post_state(state: DensityOperator, m: Measurement, x_register: str) -> tuple[float, DensityOperator]:
    """Measure a cq-state with a detector for its classical register.

    Outcome ``i`` of ``m`` is read as a guess for value ``i`` of
    ``x_register``. Returns ``Pr[X' = X]`` and the post-measurement state
    with the outcome discarded.
    """
    if x_register in m.registers:
        raise ValueError("the detector must not act on the classical register")
    weights, blocks, rest = _classical_blocks(state, x_register, state.tol)
    _check_alphabet(m, len(weights))
    pr = 0.0
    for x, blk in enumerate(blocks):
        if weights[x] < ZERO_PROB:
            continue
        cond = DensityOperator._unchecked(rest, blk)
        pr += np.trace(apply_operator(cond, m.outcomes[x][1], m.registers)).real
    return float(pr), measurement_channel(state, m)
