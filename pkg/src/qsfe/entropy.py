"""Classical and quantum entropies, plus the inequality toolkit used in the bounds.

All logarithms are base 2 and ``0 log 0 = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .qstate import (
    DEFAULT_TOL,
    ZERO_PROB,
    DensityOperator,
    Measurement,
    RegisterLayout,
    State,
    apply_operator,
    as_density,
    measurement_channel,
    partial_trace,
    random_density,
    random_unitary,
    trace_distance,
)

SUPPORT_TOL = 1e-12


def _check_probs(probs: np.ndarray, tol: float):
    if np.any(probs < -tol):
        raise ValueError("probabilities must be non-negative")
    if abs(probs.sum() - 1.0) > tol:
        raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")


@dataclass(frozen=True, eq=False)
class ClassicalDistribution:
    alphabet: tuple[str, ...]
    probs: np.ndarray
    tol: float = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        p = np.array(self.probs, dtype=float).reshape(-1)
        if len(p) != len(self.alphabet):
            raise ValueError("alphabet and probability vector differ in length")
        _check_probs(p, self.tol)
        p.setflags(write=False)
        object.__setattr__(self, "alphabet", tuple(str(a) for a in self.alphabet))
        object.__setattr__(self, "probs", p)

    @classmethod
    def uniform(cls, alphabet: Sequence[str]) -> "ClassicalDistribution":
        return cls(tuple(alphabet), np.full(len(alphabet), 1.0 / len(alphabet)))

    def support(self) -> tuple[str, ...]:
        return tuple(a for a, p in zip(self.alphabet, self.probs) if p > SUPPORT_TOL)

    def __getitem__(self, label: str) -> float:
        return float(self.probs[self.alphabet.index(label)])


@dataclass(frozen=True, eq=False)
class BipartiteDistribution:
    """Joint table ``P[x, y]``."""

    x_alphabet: tuple[str, ...]
    y_alphabet: tuple[str, ...]
    probs: np.ndarray
    tol: float = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.shape != (len(self.x_alphabet), len(self.y_alphabet)):
            raise ValueError(f"table shape {p.shape} does not match alphabets")
        _check_probs(p, self.tol)
        p.setflags(write=False)
        object.__setattr__(self, "x_alphabet", tuple(str(a) for a in self.x_alphabet))
        object.__setattr__(self, "y_alphabet", tuple(str(a) for a in self.y_alphabet))
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_table(cls, table) -> "BipartiteDistribution":
        p = np.asarray(table, dtype=float)
        return cls(tuple(map(str, range(p.shape[0]))), tuple(map(str, range(p.shape[1]))), p)

    def transpose(self) -> "BipartiteDistribution":
        return BipartiteDistribution(self.y_alphabet, self.x_alphabet, self.probs.T)


def shannon(probs) -> float:
    p = np.asarray(probs, dtype=float).reshape(-1)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p))) + 0.0


def binary_h(p: float) -> float:
    """Binary entropy in bits."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"binary entropy needs 0 <= p <= 1, got {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return float(-p * np.log2(p) - (1 - p) * np.log2(1 - p))


def g_func(x: float) -> float:
    """``(1 + x) h(x / (1 + x))``, the penalty in the continuity bound."""
    if x < 0:
        raise ValueError(f"g needs x >= 0, got {x}")
    return (1.0 + x) * binary_h(x / (1.0 + x))


def cond_shannon(P: BipartiteDistribution) -> float:
    """``H(X|Y) = H(XY) - H(Y)``."""
    return shannon(P.probs) - shannon(P.probs.sum(axis=0))


def cond_max_entropy(P: BipartiteDistribution) -> float:
    """``max_y log |supp P_{X|Y=y}|`` over ``y`` with non-zero weight."""
    supp = P.probs > SUPPORT_TOL
    counts = supp.sum(axis=0)
    counts = counts[counts > 0]
    return float(np.log2(counts.max())) if counts.size else 0.0


def von_neumann(rho: State) -> float:
    """``-tr rho log rho``; eigenvalues below 1e-12 contribute nothing."""
    rho = as_density(rho)
    vals = np.linalg.eigvalsh(rho.matrix)
    vals = vals[vals > SUPPORT_TOL]
    return float(-np.sum(vals * np.log2(vals))) + 0.0


def cond_von_neumann(rho: State, a: Iterable[str], b: Iterable[str]) -> float:
    """``H(A|B) = H(AB) - H(B)`` from the marginals of ``rho``."""
    a, b = set(a), set(b)
    if a & b:
        raise ValueError(f"register sets overlap: {sorted(a & b)}")
    if not a:
        return 0.0
    h_ab = von_neumann(partial_trace(rho, a | b))
    h_b = von_neumann(partial_trace(rho, b)) if b else 0.0
    return h_ab - h_b


def afw_bound(eps: float, x_dim: int) -> float:
    """Continuity bound ``eps log|X| + g(eps)`` for cq conditional entropies."""
    if eps < 0:
        raise ValueError("eps must be non-negative")
    return eps * np.log2(x_dim) + g_func(eps)


def fano_bound(eps: float, x_size: int) -> float:
    """``h(eps) + eps log|X|``."""
    if not 0.0 <= eps <= 1.0:
        raise ValueError("eps must lie in [0, 1]")
    return binary_h(eps) + eps * np.log2(x_size)


# -- inequality checks ------------------------------------------------------
# Each check returns the slack (right side subtracted from the side that must
# be larger); a negative slack is a violation.

def dephase(rho: State, register: str) -> DensityOperator:
    """Measure ``register`` in the computational basis, keeping the outcome in place."""
    d = rho.layout.dims[rho.layout.index(register)]
    return measurement_channel(rho, Measurement.computational(register, d))


def _is_classical_on(rho: DensityOperator, register: str, tol: float) -> bool:
    return np.max(np.abs(dephase(rho, register).matrix - rho.matrix)) <= tol


def concavity_slack(probs: Sequence[float], states: Sequence[State], a: Iterable[str], b: Iterable[str]) -> float:
    """``H(A|B)_mix - sum_x p_x H(A|B)_{rho^x}``."""
    a, b = list(a), list(b)
    mats = [as_density(s) for s in states]
    mix = DensityOperator._unchecked(mats[0].layout, sum(p * m.matrix for p, m in zip(probs, mats)))
    return cond_von_neumann(mix, a, b) - sum(p * cond_von_neumann(m, a, b) for p, m in zip(probs, mats))


def classical_chain_slack(rho: State, a: Iterable[str], b: Iterable[str], z: str, tol: float = 1e-8) -> float:
    """``H(A|BZ) - (H(A|B) - log|Z|)`` for ``rho`` classical on ``z``."""
    rho = as_density(rho)
    if not _is_classical_on(rho, z, tol):
        raise ValueError(f"state is not classical on {z!r}")
    a, b = list(a), list(b)
    dz = rho.layout.dims[rho.layout.index(z)]
    return cond_von_neumann(rho, a, b + [z]) - cond_von_neumann(rho, a, b) + np.log2(dz)


def projective_measurement_slack(rho: State, a: Iterable[str], b: Iterable[str], c: str) -> float:
    """``H(A|BC) - (H(A|BZ) - log|Z|)`` with ``Z`` the computational measurement of ``c``."""
    a, b = list(a), list(b)
    dz = rho.layout.dims[rho.layout.index(c)]
    measured = dephase(rho, c)
    return cond_von_neumann(rho, a, b + [c]) - cond_von_neumann(measured, a, b + [c]) + np.log2(dz)


def continuity_slack(rho: State, sigma: State, x: str, b: Iterable[str]) -> float:
    """``afw(D) - |H(X|B)_rho - H(X|B)_sigma|`` for two cq-states classical on ``x``."""
    b = list(b)
    keep = [x] + b
    r, s = partial_trace(rho, keep), partial_trace(sigma, keep)
    eps = trace_distance(r, s)
    dx = rho.layout.dims[rho.layout.index(x)]
    gap = abs(cond_von_neumann(r, [x], b) - cond_von_neumann(s, [x], b))
    return afw_bound(eps, dx) - gap


def fano_slack(rho: State, m: Measurement, x: str) -> float:
    """``h(eps) + eps log|X| - H(X|B)`` where ``m`` on B guesses the classical ``x``.

    ``eps`` is the exact error ``Pr[X' != X]`` of the guess.
    """
    rho = as_density(rho)
    layout = rho.layout
    dx = layout.dims[layout.index(x)]
    if len(m.outcomes) != dx:
        raise ValueError("guessing measurement must have one outcome per value of x")
    b = [lb for lb in layout.labels if lb != x]
    correct = 0.0
    for i, (_, op) in enumerate(m.outcomes):
        proj = np.zeros((dx, dx))
        proj[i, i] = 1.0
        out = apply_operator(rho, op, m.registers)
        out = apply_operator(DensityOperator._unchecked(layout, out), proj, [x])
        correct += np.trace(out).real
    eps = float(np.clip(1.0 - correct, 0.0, 1.0))
    return fano_bound(eps, dx) - cond_von_neumann(rho, [x], b)


@dataclass
class InequalityConfig:
    """Register roles for :func:`inequality_suite` on a supplied state."""

    a: tuple[str, ...] = ("A",)
    b: tuple[str, ...] = ("B",)
    c: str = "C"


@dataclass
class SuiteReport:
    trials: int
    worst_slack: dict
    violations: dict
    tol: float

    @property
    def ok(self) -> bool:
        return all(v == 0 for v in self.violations.values())


def _random_cq(rng, dx: int, db: int, x="X", b="B") -> DensityOperator:
    layout = RegisterLayout(((x, dx), (b, db)))
    p = rng.dirichlet(np.ones(dx))
    mat = np.zeros((dx * db, dx * db), dtype=np.complex128)
    for i in range(dx):
        rho = random_density(RegisterLayout(((b, db),)), rng).matrix
        mat[i * db:(i + 1) * db, i * db:(i + 1) * db] = p[i] * rho
    return DensityOperator(layout, mat)


def _random_measurement(rng, register: str, dim: int, outcomes: int) -> Measurement:
    # rows of a random isometry give Kraus operators of a random POVM
    v = random_unitary(dim * outcomes, rng)[:, :dim]
    ops = tuple((str(i), v[i * dim:(i + 1) * dim, :]) for i in range(outcomes))
    return Measurement((register,), ops)


def inequality_suite(rho: State | None = None, config: InequalityConfig | None = None, *,
                     trials: int = 100, seed: int = 0, dims: tuple[int, int, int] = (2, 2, 2),
                     tol: float = 1e-8) -> SuiteReport:
    """Check concavity, the classical chain rule, the projective-measurement
    bound, continuity and Fano numerically.

    With ``rho`` given, only the checks that apply to it run: the
    measurement bound on ``config.c``, and (if ``rho`` is classical on
    ``config.c``) the chain rule and concavity over the ``c``-conditioned
    decomposition. Without ``rho``, ``trials`` seeded random instances are
    drawn for every check.
    """
    worst: dict[str, float] = {}
    bad: dict[str, int] = {}

    def record(name, slack):
        worst[name] = min(worst.get(name, np.inf), float(slack))
        bad[name] = bad.get(name, 0) + int(slack < -tol)

    if rho is not None:
        cfg = config or InequalityConfig()
        rho = as_density(rho)
        record("projective_measurement", projective_measurement_slack(rho, cfg.a, cfg.b, cfg.c))
        if _is_classical_on(rho, cfg.c, tol):
            record("classical_chain", classical_chain_slack(rho, cfg.a, cfg.b, cfg.c))
            layout = rho.layout
            dz = layout.dims[layout.index(cfg.c)]
            probs, parts = [], []
            for zi in range(dz):
                proj = np.zeros((dz, dz))
                proj[zi, zi] = 1.0
                blk = apply_operator(rho, proj, [cfg.c])
                w = np.trace(blk).real
                if w > ZERO_PROB:
                    probs.append(w)
                    parts.append(DensityOperator._unchecked(layout, blk / w))
            record("concavity", concavity_slack(probs, parts, cfg.a, cfg.b))
        return SuiteReport(1, worst, bad, tol)

    rng = np.random.default_rng(seed)
    da, db, dc = dims
    abc = RegisterLayout((("A", da), ("B", db), ("C", dc)))
    for _ in range(trials):
        k = int(rng.integers(2, 4))
        p = rng.dirichlet(np.ones(k))
        states = [random_density(abc, rng, rank=int(rng.integers(1, abc.dim + 1))) for _ in range(k)]
        record("concavity", concavity_slack(p, states, ["A"], ["B"]))

        generic = random_density(abc, rng, rank=int(rng.integers(1, abc.dim + 1)))
        record("classical_chain", classical_chain_slack(dephase(generic, "C"), ["A"], ["B"], "C"))
        record("projective_measurement", projective_measurement_slack(generic, ["A"], ["B"], "C"))

        r, s = _random_cq(rng, da, db), _random_cq(rng, da, db)
        record("continuity", continuity_slack(r, s, "X", ["B"]))
        # nearby pairs exercise the small-eps regime where g dominates
        mix = float(rng.uniform(0, 0.1))
        near = DensityOperator._unchecked(r.layout, (1 - mix) * r.matrix + mix * s.matrix)
        record("continuity", continuity_slack(r, near, "X", ["B"]))

        cq = _random_cq(rng, da, db)
        record("fano", fano_slack(cq, _random_measurement(rng, "B", db, da), "X"))
    return SuiteReport(trials, worst, bad, tol)
