"""Final-state protocol model, necessary-condition checks and Bob's extraction attack.

A protocol is represented by its purified final states: for every pair of
inputs ``(x, y)`` a list of classical transcripts, each with a probability
and a pure state on the protocol registers. Registers are split between
Alice, Bob and (optionally) an environment that neither party holds.

When Alice's input has to be treated coherently (for Uhlmann rotations and
for the Bob-security check) it is placed on an extra register
``INPUT_REGISTER`` on Alice's side, in superposition with amplitudes
``sqrt(P(x | transcript))``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence, Union

import numpy as np

from . import bounds
from .entropy import ClassicalDistribution, shannon
from .functions import FunctionTable, builtin, concealment_t
from .labels import bitstrings, parse, render
from .primitives import JointDistribution, embed_pure, entropy_sum, oblivious_key
from .qstate import (
    DEFAULT_TOL,
    ZERO_PROB,
    Branch,
    DensityOperator,
    Measurement,
    PureState,
    RegisterLayout,
    apply_to_amplitudes,
    conditioned_uhlmann,
    partial_trace,
    trace_distance,
)

INPUT_REGISTER = "_X"
MAX_EXPERIMENT_DIM = 2 ** 12

MeasurementSpec = Union[Measurement, Mapping[str, Measurement]]


@dataclass(frozen=True, eq=False)
class ProtocolInstance:
    """Final-state model of a one-sided SFE protocol.

    ``branches[(x, y)]`` lists the transcripts for inputs ``x`` and ``y``
    (labels from ``function``). ``measurements[y]`` is Bob's honest output
    measurement for input ``y``, either one :class:`Measurement` or a map
    from transcript label to measurement. Registers in neither ``alice``
    nor ``bob`` belong to the environment.
    """

    function: FunctionTable
    layout: RegisterLayout
    branches: Mapping[tuple[str, str], tuple[Branch, ...]]
    measurements: Mapping[str, MeasurementSpec]
    alice: tuple[str, ...] = ("A",)
    bob: tuple[str, ...] = ("B",)
    tol: float = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        f, layout = self.function, self.layout
        if INPUT_REGISTER in layout:
            raise ValueError(f"register label {INPUT_REGISTER!r} is reserved")
        alice, bob = layout.ordered(self.alice), layout.ordered(self.bob)
        if set(alice) & set(bob):
            raise ValueError("Alice and Bob share registers")
        if not alice or not bob:
            raise ValueError("both parties need at least one register")
        clean = {}
        for x in f.x_alphabet:
            for y in f.y_alphabet:
                if (x, y) not in self.branches:
                    raise ValueError(f"no branches for inputs x={x!r}, y={y!r}")
                raw = list(self.branches[(x, y)])
                total = sum(b.prob for b in raw)
                if abs(total - 1.0) > self.tol:
                    raise ValueError(f"branch probabilities for ({x!r}, {y!r}) sum to {total!r}")
                labels = [b.label for b in raw]
                if len(set(labels)) != len(labels):
                    raise ValueError(f"duplicate transcripts for ({x!r}, {y!r})")
                kept = [b for b in raw if b.prob >= ZERO_PROB]
                norm = sum(b.prob for b in kept)
                for b in kept:
                    if b.state.layout != layout:
                        raise ValueError(f"branch {b.label!r} of ({x!r}, {y!r}) has a different layout")
                clean[(x, y)] = tuple(Branch(b.label, b.prob / norm, b.state) for b in kept)
        for y, spec in self.measurements.items():
            for m in _measurement_list(spec):
                stray = set(m.registers) - set(bob)
                if stray:
                    raise ValueError(f"honest measurement for y={y!r} acts on non-Bob registers {sorted(stray)}")
                if layout.dim_of(m.registers) != m.dim:
                    raise ValueError(f"measurement for y={y!r} does not match its registers' dimension")
        object.__setattr__(self, "alice", alice)
        object.__setattr__(self, "bob", bob)
        object.__setattr__(self, "branches", clean)
        object.__setattr__(self, "measurements", dict(self.measurements))

    @property
    def env(self) -> tuple[str, ...]:
        return tuple(lb for lb in self.layout.labels if lb not in self.alice and lb not in self.bob)

    def transcripts(self) -> tuple[str, ...]:
        """All transcript labels that occur, in first-seen order."""
        seen: dict[str, None] = {}
        for brs in self.branches.values():
            for b in brs:
                seen.setdefault(b.label, None)
        return tuple(seen)

    def measurement_for(self, y: str, transcript: str) -> Measurement:
        if y not in self.measurements:
            raise KeyError(f"no honest measurement for y={y!r}")
        spec = self.measurements[y]
        if isinstance(spec, Measurement):
            return spec
        if transcript not in spec:
            raise KeyError(f"no honest measurement for y={y!r} and transcript {transcript!r}")
        return spec[transcript]

    def with_bob(self, bob: Sequence[str]) -> "ProtocolInstance":
        return ProtocolInstance(self.function, self.layout, self.branches, self.measurements,
                                self.alice, tuple(bob), self.tol)


def _measurement_list(spec: MeasurementSpec) -> list[Measurement]:
    return [spec] if isinstance(spec, Measurement) else list(spec.values())


def _outcome_index(m: Measurement, f: FunctionTable) -> list[int]:
    """Index of each outcome of ``m`` in ``f``'s output alphabet, or -1."""
    return [f.z_alphabet.index(z) if z in f.z_alphabet else -1 for z in m.labels]


def _prob_correct(p: ProtocolInstance, x: str, y: str) -> float:
    f = p.function
    want = f.table[f.x_alphabet.index(x), f.y_alphabet.index(y)]
    total = 0.0
    for br in p.branches[(x, y)]:
        m = p.measurement_for(y, br.label)
        for (_, op), zi in zip(m.outcomes, _outcome_index(m, f)):
            if zi == want:
                out = apply_to_amplitudes(br.state.amplitudes, p.layout, op, m.registers)
                total += br.prob * float(np.vdot(out, out).real)
    return total


def check_correctness(p: ProtocolInstance) -> float:
    """Worst-case probability over ``(x, y)`` that the honest output differs from ``f(x, y)``."""
    f = p.function
    worst = max(1.0 - _prob_correct(p, x, y) for x in f.x_alphabet for y in f.y_alphabet)
    return float(min(1.0, max(0.0, worst)))


# -- views of the final state ----------------------------------------------

def purified_family(p: ProtocolInstance, y: str, transcripts: Sequence[str] | None = None) -> list[Branch]:
    """Per-transcript pure states with Alice's uniform input held coherently.

    Returns one branch per label in ``transcripts`` (default: all labels of
    the instance). A label that never occurs for ``y`` gets weight zero.
    """
    f = p.function
    transcripts = p.transcripts() if transcripts is None else tuple(transcripts)
    nx = len(f.x_alphabet)
    layout = RegisterLayout(((INPUT_REGISTER, nx),)).concat(p.layout)
    acc = {t: np.zeros((nx, p.layout.dim), dtype=np.complex128) for t in transcripts}
    weight = dict.fromkeys(transcripts, 0.0)
    for i, x in enumerate(f.x_alphabet):
        for br in p.branches[(x, y)]:
            acc[br.label][i] = math.sqrt(br.prob / nx) * br.state.amplitudes
            weight[br.label] += br.prob / nx
    fam = []
    for t in transcripts:
        if weight[t] < ZERO_PROB:
            fam.append(Branch(t, 0.0, PureState.basis(layout, [0] * len(layout))))
        else:
            fam.append(Branch(t, weight[t], PureState(layout, acc[t].reshape(-1) / math.sqrt(weight[t]))))
    return fam


def alice_view(p: ProtocolInstance, y: str, purified: bool = True) -> DensityOperator:
    """Alice's final state for Bob input ``y``: transcript, her input and her registers.

    With ``purified`` the input register carries the coherent purification
    of her uniform input; otherwise it is classical.
    """
    fam = purified_family(p, y)
    keep = (INPUT_REGISTER,) + p.alice
    sub = fam[0].state.layout.subset(keep)
    d = sub.dim
    mat = np.zeros((len(fam) * d, len(fam) * d), dtype=np.complex128)
    for i, br in enumerate(fam):
        if br.prob < ZERO_PROB:
            continue
        blk = partial_trace(br.state, keep).matrix
        if not purified:
            blk = _dephase_first(blk, len(p.function.x_alphabet))
        mat[i * d:(i + 1) * d, i * d:(i + 1) * d] = br.prob * blk
    layout = RegisterLayout((("T", len(fam)),)).concat(sub)
    return DensityOperator._unchecked(layout, mat)


def _dephase_first(mat: np.ndarray, dx: int) -> np.ndarray:
    d = mat.shape[0] // dx
    out = np.zeros_like(mat)
    for i in range(dx):
        out[i * d:(i + 1) * d, i * d:(i + 1) * d] = mat[i * d:(i + 1) * d, i * d:(i + 1) * d]
    return out


def check_bob_security(p: ProtocolInstance, purified: bool = True) -> float:
    """Smallest ``eps_B`` with ``D(rho_A^y, rho_A^y') <= 2 eps_B`` for all ``y, y'``."""
    views = [alice_view(p, y, purified) for y in p.function.y_alphabet]
    worst = 0.0
    for a, b in itertools.combinations(views, 2):
        worst = max(worst, trace_distance(a, b))
    return 0.5 * worst


def effective_eps(p: ProtocolInstance) -> float:
    """The larger of the correctness and Bob-security errors."""
    return max(check_correctness(p), check_bob_security(p))


def ideal_alice_marginal(f: FunctionTable, y: str, z: str) -> ClassicalDistribution:
    """Uniform distribution over the inputs ``x`` with ``f(x, y) = z``."""
    j = f.y_alphabet.index(y)
    zi = f.z_alphabet.index(z)
    mask = f.table[:, j] == zi
    if not mask.any():
        raise ValueError(f"no input x gives f(x, {y!r}) = {z!r}")
    return ClassicalDistribution(f.x_alphabet, mask / mask.sum())


def bob_states(p: ProtocolInstance, y: str, registers: Sequence[str] | None = None) -> list[np.ndarray]:
    """For each ``x``, Bob's state with the transcript as a classical block index."""
    regs = p.layout.ordered(p.bob if registers is None else registers)
    transcripts = p.transcripts()
    d = p.layout.dim_of(regs)
    out = []
    for x in p.function.x_alphabet:
        mat = np.zeros((len(transcripts) * d, len(transcripts) * d), dtype=np.complex128)
        for br in p.branches[(x, y)]:
            i = transcripts.index(br.label)
            mat[i * d:(i + 1) * d, i * d:(i + 1) * d] = br.prob * partial_trace(br.state, regs).matrix
        out.append(mat)
    return out


def alice_guessing(p: ProtocolInstance, y: str) -> tuple[float, float | None]:
    """Bob's probability of guessing Alice's uniform input from his final state.

    For ``|X| = 2`` the Helstrom value is exact and returned twice. Otherwise
    the pretty-good measurement gives a lower bound and the second entry
    is ``None``.
    """
    rhos = bob_states(p, y)
    nx = len(rhos)
    if nx == 2:
        diff = 0.5 * (rhos[0] - rhos[1])
        val = 0.5 + 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))
        return val, val
    avg = sum(rhos) / nx
    vals, vecs = np.linalg.eigh(avg)
    inv = np.where(vals > ZERO_PROB, 1.0 / np.sqrt(np.clip(vals, ZERO_PROB, None)), 0.0)
    inv_root = (vecs * inv) @ vecs.conj().T
    total = 0.0
    for r in rhos:
        effect = inv_root @ (r / nx) @ inv_root
        total += np.trace(effect @ (r / nx)).real
    return float(total), None


# -- protocol constructions -------------------------------------------------

def canonical_protocol(f: FunctionTable, noise: float = 0.0) -> ProtocolInstance:
    """Alice keeps ``|x>_A`` and Bob receives a copy ``|x>_B``.

    With probability ``noise`` (transcript ``"noise"``) Bob's copy is
    replaced by the fixed dummy ``|0>_B``. The honest measurement reads
    ``B`` and outputs ``f(., y)``. Alice's view never depends on ``y``.
    """
    if not 0.0 <= noise <= 1.0:
        raise ValueError("noise must lie in [0, 1]")
    nx = len(f.x_alphabet)
    layout = RegisterLayout((("A", nx), ("B", nx)))
    branches = {}
    for i, x in enumerate(f.x_alphabet):
        good = PureState.basis(layout, [i, i])
        dummy = PureState.basis(layout, [i, 0])
        brs = [Branch("ok", 1.0 - noise, good)]
        if noise > 0:
            brs.append(Branch("noise", noise, dummy))
        for y in f.y_alphabet:
            branches[(x, y)] = tuple(brs)
    measurements = {}
    for j, y in enumerate(f.y_alphabet):
        groups = {z: np.flatnonzero(f.table[:, j] == zi).tolist() for zi, z in enumerate(f.z_alphabet)}
        measurements[y] = Measurement.projective(("B",), nx, groups)
    return ProtocolInstance(f, layout, branches, measurements, ("A",), ("B",))


def _parse_tuple(label: str) -> tuple[str, ...]:
    out = parse(label)
    return out if isinstance(out, tuple) else (out,)


def precomputed_ot(n: int = 2, k: int = 1) -> tuple[ProtocolInstance, JointDistribution]:
    """1-out-of-n k-bit OT from one oblivious key, as a final-state model.

    Bob with choice ``b`` and key ``(c, x_c)`` announces ``e = b - c mod n``;
    Alice with strings ``a`` answers ``m_j = a_j xor x_{j - e}``; Bob outputs
    ``m_b xor x_c``. Alice holds ``U``, Bob ``V``, and ``E`` (the resource's
    purification) stays with the environment.
    """
    key = oblivious_key(n, k)
    f = builtin("ot", n=n, k=k)
    layout = embed_pure(key).layout
    nu, nv = len(key.u_alphabet), len(key.v_alphabet)
    strings = bitstrings(k)
    sidx = {s: i for i, s in enumerate(strings)}
    us = [tuple(sidx[s] for s in _parse_tuple(lb)) for lb in key.u_alphabet]
    vs = [(int(c), sidx[s]) for c, s in map(_parse_tuple, key.v_alphabet)]
    vindex = {v: j for j, v in enumerate(vs)}

    branches = {}
    for x in f.x_alphabet:
        a = [sidx[s] for s in _parse_tuple(x)]
        for y in f.y_alphabet:
            b = int(y)
            # key values sharing a transcript stay in coherent superposition
            acc: dict[str, np.ndarray] = {}
            for ui, u in enumerate(us):
                for c in range(n):
                    vi = vindex[(c, u[c])]
                    prob = key.probs[ui, vi]
                    if prob <= 0:
                        continue
                    e = (b - c) % n
                    msgs = tuple(strings[a[j] ^ u[(j - e) % n]] for j in range(n))
                    vec = acc.setdefault(render((str(e),) + msgs), np.zeros(layout.dim, dtype=np.complex128))
                    vec[(ui * nv + vi) * nu * nv + ui * nv + vi] = math.sqrt(prob)
            brs = []
            for label, vec in acc.items():
                w = float(np.vdot(vec, vec).real)
                brs.append(Branch(label, w, PureState(layout, vec / math.sqrt(w))))
            branches[(x, y)] = tuple(brs)

    transcripts = sorted({br.label for brs in branches.values() for br in brs})
    measurements = {}
    for y in f.y_alphabet:
        b = int(y)
        per_t = {}
        for t in transcripts:
            msgs = _parse_tuple(t)[1:]
            groups = {z: [] for z in strings}
            for vi, (_, s) in enumerate(vs):
                groups[strings[sidx[msgs[b]] ^ s]].append(vi)
            per_t[t] = Measurement.projective(("V",), nv, groups)
        measurements[y] = per_t
    return ProtocolInstance(f, layout, branches, measurements, ("U",), ("V",)), key


def give_purification(p: ProtocolInstance, resource: PureState | None = None,
                      registers: Sequence[str] = ("V", "E")) -> ProtocolInstance:
    """Hand the resource's purifying system (and ``V``) to Bob."""
    if resource is not None:
        for lb, d in resource.layout.registers:
            if lb not in p.layout or p.layout.dims[p.layout.index(lb)] != d:
                raise ValueError(f"protocol does not contain resource register {lb!r} of dimension {d}")
    missing = [lb for lb in registers if lb not in p.layout]
    if missing:
        raise ValueError(f"protocol lacks resource registers {missing}")
    return p.with_bob(tuple(p.bob) + tuple(lb for lb in registers if lb not in p.bob))


# -- extraction attack ------------------------------------------------------

@dataclass
class AttackResult:
    order: list
    per_step_fail: list
    joint_success: float
    extracted_x_accuracy: float
    rotation_fidelity: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "AttackResult":
        return cls(list(d["order"]), list(d["per_step_fail"]), d["joint_success"],
                   d["extracted_x_accuracy"], list(d.get("rotation_fidelity", [])))


def extraction_attack(p: ProtocolInstance, order: Sequence[str] | None = None) -> AttackResult:
    """Exact simulation of Bob extracting ``f(x, y)`` for every ``y`` in ``order``.

    Bob runs the protocol honestly with ``order[0]``. At step ``i`` he
    applies the honest measurement for ``order[i]``, keeps the
    post-measurement state, and applies the transcript-conditioned Uhlmann
    rotation taking the final-state family of ``order[i]`` toward that of
    ``order[i + 1]``. The outcome tree is enumerated exactly for every
    ``x`` and transcript.
    """
    f = p.function
    order = list(f.y_alphabet if order is None else order)
    if len(order) < 2:
        raise ValueError("the attack needs at least two inputs in its order")
    for y in order:
        if y not in f.y_alphabet:
            raise ValueError(f"unknown input y={y!r}")
        if y not in p.measurements:
            raise KeyError(f"no honest measurement for y={y!r}")
    transcripts = p.transcripts()
    families = {y: purified_family(p, y, transcripts) for y in dict.fromkeys(order)}
    rotations, fids = [], []
    for y0, y1 in zip(order, order[1:]):
        rot = conditioned_uhlmann(families[y0], families[y1], p.bob)
        rotations.append(rot)
        fids.append(_rotated_overlap(families[y0], families[y1], rot, p.bob))

    nx = len(f.x_alphabet)
    ycols = [f.y_alphabet.index(y) for y in order]
    m = len(order)
    fail = np.zeros(m)
    joint = pinned = 0.0
    for xi, x in enumerate(f.x_alphabet):
        truth = f.table[xi, ycols]
        for br in p.branches[(x, order[0])]:
            # squared norm of each path vector is that path's probability
            paths = [(math.sqrt(br.prob / nx) * br.state.amplitudes, ())]
            for step, y in enumerate(order):
                meas = p.measurement_for(y, br.label)
                nxt = []
                for amps, hist in paths:
                    for (_, op), zi in zip(meas.outcomes, _outcome_index(meas, f)):
                        out = apply_to_amplitudes(amps, p.layout, op, meas.registers)
                        if float(np.vdot(out, out).real) < ZERO_PROB / nx:
                            continue
                        if step < m - 1:
                            out = apply_to_amplitudes(out, p.layout, rotations[step][br.label], p.bob)
                        nxt.append((out, hist + (zi,)))
                paths = nxt
            for amps, hist in paths:
                w = float(np.vdot(amps, amps).real)
                wrong = np.array(hist) != truth
                fail += w * wrong
                if not wrong.any():
                    joint += w
                cand = np.all(f.table[:, ycols] == np.array(hist), axis=1)
                if cand.sum() == 1 and cand[xi]:
                    pinned += w
    return AttackResult(order, fail.tolist(), float(min(1.0, joint)), float(min(1.0, pinned)), fids)


def _rotated_overlap(fam0, fam1, rot, bob) -> float:
    """``sum_t sqrt(p0 p1) |<phi1|(1 x U_t)|phi0>|``, the cq fidelity the rotation reaches."""
    total = 0.0
    for b0, b1 in zip(fam0, fam1):
        if b0.prob < ZERO_PROB or b1.prob < ZERO_PROB:
            continue
        out = apply_to_amplitudes(b0.state.amplitudes, b0.state.layout, rot[b0.label], bob)
        total += math.sqrt(b0.prob * b1.prob) * abs(np.vdot(b1.state.amplitudes, out))
    return float(total)


def attack_bound_check(p: ProtocolInstance, result: AttackResult) -> dict:
    """Compare an attack result with the analytic success guarantees at the instance's error."""
    eps = effective_eps(p)
    m = len(result.order)
    guarantee = bounds.prop1_success(min(eps, 1.0), m)
    return {
        "eps": eps,
        "m": m,
        "joint_success": result.joint_success,
        "prop1_simple": guarantee.simple,
        "prop1_chain": guarantee.exact_chain,
        "respects_simple": result.joint_success >= guarantee.simple,
        "respects_chain": result.joint_success >= guarantee.exact_chain,
    }


# -- entropy-gap experiment -------------------------------------------------

def _vn_matrix(mat: np.ndarray) -> float:
    vals = np.linalg.eigvalsh(mat)
    vals = vals[vals > ZERO_PROB]
    return float(-np.sum(vals * np.log2(vals))) + 0.0


def bob_conditional_entropy(p: ProtocolInstance, y: str, registers: Sequence[str] | None = None) -> float:
    """``H(X | T B)`` for uniform classical ``X``, transcript ``T`` and Bob's ``registers``."""
    regs = p.layout.ordered(p.bob if registers is None else registers)
    if p.layout.dim > MAX_EXPERIMENT_DIM:
        raise ValueError(f"state dimension {p.layout.dim} exceeds the guard {MAX_EXPERIMENT_DIM}")
    nx = len(p.function.x_alphabet)
    weights, h_blocks = [], 0.0
    per_t: dict[str, list] = {}
    for x in p.function.x_alphabet:
        for br in p.branches[(x, y)]:
            w = br.prob / nx
            rho = partial_trace(br.state, regs).matrix
            weights.append(w)
            h_blocks += w * _vn_matrix(rho)
            per_t.setdefault(br.label, []).append((w, rho))
    h_xtb = shannon(weights) + h_blocks
    t_weights, h_tb = [], 0.0
    for items in per_t.values():
        wt = sum(w for w, _ in items)
        t_weights.append(wt)
        h_tb += wt * _vn_matrix(sum(w * r for w, r in items) / wt)
    return h_xtb - (shannon(t_weights) + h_tb)


@dataclass
class Thm2Experiment:
    y: str
    h_x_given_b: float
    h_x_given_bb: float
    gap: float
    entropy_sum: float
    t: float
    eps: float
    rhs: float
    upper_ok: bool
    lower_ok: bool
    notes: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _resource_distribution(resource) -> JointDistribution:
    if isinstance(resource, JointDistribution):
        return resource
    uv = partial_trace(resource, ["U", "V"])
    nu, nv = uv.layout.dims
    table = np.diag(uv.matrix).real.reshape(nu, nv)
    return JointDistribution.from_dense([str(i) for i in range(nu)], [str(j) for j in range(nv)], table)


def thm2_experiment(p: ProtocolInstance, resource, fixed_y: str | None = None,
                    purifying: Sequence[str] = ("E",), tol: float = 1e-8) -> Thm2Experiment:
    """Entropy gap ``H(X|B) - H(X|BB')`` when Bob also receives the resource purification.

    ``resource`` is the :class:`JointDistribution` or its embedded pure
    state. The gap must not exceed ``H_max(U|V) + H_max(V|U)``. The lower
    check against the required minimum at the measured error presumes the
    instance is secure for Alice, which this model does not verify.
    """
    f = p.function
    y = f.y_alphabet[0] if fixed_y is None else fixed_y
    P = _resource_distribution(resource)
    extended = give_purification(p, resource if isinstance(resource, PureState) else None,
                                 registers=tuple(purifying))
    h_b = bob_conditional_entropy(p, y)
    h_bb = bob_conditional_entropy(extended, y)
    gap = h_b - h_bb
    es = entropy_sum(P)
    t = concealment_t(f)
    eps = min(effective_eps(p), 1.0)
    rhs, _ = bounds.thm2_rhs(t, len(f.x_alphabet), len(f.y_alphabet), eps)
    return Thm2Experiment(y, h_b, h_bb, gap, es, t, eps, rhs,
                          upper_ok=bool(gap <= es + tol), lower_ok=bool(gap >= rhs - tol),
                          notes="lower check presumes the instance is secure for Alice")
