"""Trusted-randomness resources ``P_UV``.

Alice receives ``U`` and Bob receives ``V``. Tables are stored sparsely so
that products of several OT instances stay tractable.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .entropy import SUPPORT_TOL, BipartiteDistribution
from .labels import bitstrings, render
from .qstate import DEFAULT_TOL, PureState, RegisterLayout

MAX_SUPPORT = 2 ** 24
MAX_EMBED_DIM = 2 ** 12
ERASURE = "⊥"


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Joint table ``P[u, v]`` with labelled rows and columns."""

    u_alphabet: tuple[str, ...]
    v_alphabet: tuple[str, ...]
    probs: sp.csr_array
    tol: float = field(default=DEFAULT_TOL, repr=False)

    def __post_init__(self):
        us = tuple(str(a) for a in self.u_alphabet)
        vs = tuple(str(a) for a in self.v_alphabet)
        p = sp.csr_array(self.probs, dtype=float)
        if p.shape != (len(us), len(vs)):
            raise ValueError(f"table shape {p.shape} does not match alphabets ({len(us)}, {len(vs)})")
        if len(set(us)) != len(us) or len(set(vs)) != len(vs):
            raise ValueError("duplicate labels")
        if p.nnz and p.data.min() < -self.tol:
            raise ValueError("probabilities must be non-negative")
        if abs(p.sum() - 1.0) > self.tol:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        p.data[p.data < 0] = 0.0
        p.eliminate_zeros()
        p.sort_indices()
        object.__setattr__(self, "u_alphabet", us)
        object.__setattr__(self, "v_alphabet", vs)
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_dense(cls, us: Sequence[str], vs: Sequence[str], table) -> "JointDistribution":
        return cls(tuple(us), tuple(vs), sp.csr_array(np.asarray(table, dtype=float)))

    @property
    def support_size(self) -> int:
        return int(np.count_nonzero(self.probs.data > SUPPORT_TOL))

    def dense(self) -> np.ndarray:
        if len(self.u_alphabet) * len(self.v_alphabet) > MAX_SUPPORT:
            raise ValueError("table too large to densify")
        return self.probs.toarray()

    def as_bipartite(self) -> BipartiteDistribution:
        """The table as ``P_XY`` with ``X = U`` and ``Y = V``."""
        return BipartiteDistribution(self.u_alphabet, self.v_alphabet, self.dense())

    def marginal_u(self) -> np.ndarray:
        return np.asarray(self.probs.sum(axis=1)).reshape(-1)

    def marginal_v(self) -> np.ndarray:
        return np.asarray(self.probs.sum(axis=0)).reshape(-1)

    def transpose(self) -> "JointDistribution":
        return JointDistribution(self.v_alphabet, self.u_alphabet, self.probs.T.tocsr())

    def entries(self):
        """Yield ``(u_index, v_index, prob)`` for the stored support."""
        coo = self.probs.tocoo()
        for i, j, p in zip(coo.row, coo.col, coo.data):
            yield int(i), int(j), float(p)


def _check_support(size: int):
    if size > MAX_SUPPORT:
        raise ValueError(f"support of size {size} exceeds the guard {MAX_SUPPORT}")


def oblivious_key(n: int, k: int) -> JointDistribution:
    """Randomized 1-out-of-n k-bit string OT.

    ``U = (x_0, ..., x_{n-1})`` uniform, ``V = (c, x_c)`` with ``c`` uniform;
    every support point has mass ``1 / (n 2^{nk})``.
    """
    if n < 2 or k < 1:
        raise ValueError("need n >= 2 and k >= 1")
    _check_support(n * 2 ** (n * k))
    strings = bitstrings(k)
    us = list(itertools.product(range(2 ** k), repeat=n))
    vs = [(c, s) for c in range(n) for s in strings]
    rows = np.repeat(np.arange(len(us)), n)
    cols = np.array([c * 2 ** k + u[c] for u in us for c in range(n)])
    data = np.full(len(rows), 1.0 / (n * 2 ** (n * k)))
    table = sp.csr_array((data, (rows, cols)), shape=(len(us), len(vs)))
    u_labels = [render(tuple(strings[i] for i in u)) for u in us]
    v_labels = [render((str(c), s)) for c, s in vs]
    return JointDistribution(tuple(u_labels), tuple(v_labels), table)


def rabin_key(p: float, k: int) -> JointDistribution:
    """Randomized Rabin OT: ``U`` uniform on k-bit strings, ``V = U`` with
    probability ``p`` and the erasure symbol otherwise."""
    if not 0.0 <= p <= 1.0 or k < 1:
        raise ValueError("need 0 <= p <= 1 and k >= 1")
    strings = bitstrings(k)
    m = len(strings)
    table = np.zeros((m, m + 1))
    table[np.arange(m), np.arange(m)] = p / m
    table[:, m] = (1 - p) / m
    return JointDistribution.from_dense(strings, strings + [ERASURE], table)


def _merge_rows(P: JointDistribution, tol: float) -> JointDistribution:
    """Merge ``u`` values whose conditionals ``P_{V|U=u}`` agree within L1 ``tol``."""
    csr = P.probs
    mass = P.marginal_u()
    classes: list[list[int]] = []
    reps: dict[tuple, list[tuple[int, np.ndarray]]] = {}
    for i in range(csr.shape[0]):
        if mass[i] <= SUPPORT_TOL:
            continue
        lo, hi = csr.indptr[i], csr.indptr[i + 1]
        idx, vals = csr.indices[lo:hi], csr.data[lo:hi]
        keep = vals > SUPPORT_TOL
        idx, vals = idx[keep], vals[keep] / mass[i]
        bucket = reps.setdefault(tuple(idx), [])
        for cls_id, ref in bucket:
            if np.abs(ref - vals).sum() < tol:
                classes[cls_id].append(i)
                break
        else:
            bucket.append((len(classes), vals))
            classes.append([i])
    if len(classes) == csr.shape[0]:
        return P
    rows = np.zeros(csr.shape[0], dtype=np.int64)
    used = np.zeros(csr.shape[0], dtype=bool)
    for c, members in enumerate(classes):
        rows[members] = c
        used[members] = True
    coo = csr.tocoo()
    keep = used[coo.row]
    merged = sp.csr_array((coo.data[keep], (rows[coo.row[keep]], coo.col[keep])),
                          shape=(len(classes), csr.shape[1]))
    labels = tuple(P.u_alphabet[members[0]] for members in classes)
    return JointDistribution(labels, P.v_alphabet, merged)


def min_sufficient_stat(P: JointDistribution, tol: float = DEFAULT_TOL) -> JointDistribution:
    """Reduce to ``(U_V, V_U)``, the minimum sufficient statistics of each side.

    ``u`` values with identical conditional rows are merged (L1 distance
    below ``tol``), then the same for ``v``; this repeats until nothing
    changes. A merged class keeps the label of its first member, and values
    of zero probability are dropped.
    """
    cur = P
    while True:
        nxt = _merge_rows(cur, tol)
        nxt = _merge_rows(nxt.transpose(), tol).transpose()
        if nxt.probs.shape == cur.probs.shape:
            return nxt
        cur = nxt


def hmax_u_given_v(P: JointDistribution) -> float:
    cols = (P.probs > SUPPORT_TOL).tocsc()
    counts = np.diff(cols.indptr)
    counts = counts[counts > 0]
    return float(np.log2(counts.max())) if counts.size else 0.0


def hmax_v_given_u(P: JointDistribution) -> float:
    rows = (P.probs > SUPPORT_TOL).tocsr()
    counts = np.diff(rows.indptr)
    counts = counts[counts > 0]
    return float(np.log2(counts.max())) if counts.size else 0.0


def entropy_sum(P: JointDistribution) -> float:
    """``H_max(U|V) + H_max(V|U)``."""
    return hmax_u_given_v(P) + hmax_v_given_u(P)


def product(P: JointDistribution, Q: JointDistribution) -> JointDistribution:
    """Independent product with pair labels ``(p,q)``."""
    _check_support(P.support_size * Q.support_size)
    table = sp.kron(P.probs, Q.probs, format="csr")
    us = tuple(render((a, b)) for a in P.u_alphabet for b in Q.u_alphabet)
    vs = tuple(render((a, b)) for a in P.v_alphabet for b in Q.v_alphabet)
    return JointDistribution(us, vs, table)


def power(P: JointDistribution, m: int) -> JointDistribution:
    """``m`` independent copies; labels are flat tuples ``(a_1,...,a_m)``."""
    if m < 1:
        raise ValueError("need m >= 1")
    if m == 1:
        return P
    _check_support(P.support_size ** m)
    table = P.probs
    for _ in range(m - 1):
        table = sp.kron(table, P.probs, format="csr")
    us = ["(" + ",".join(t) + ")" for t in itertools.product(P.u_alphabet, repeat=m)]
    vs = ["(" + ",".join(t) + ")" for t in itertools.product(P.v_alphabet, repeat=m)]
    return JointDistribution(tuple(us), tuple(vs), table)


def embed_pure(P: JointDistribution) -> PureState:
    """``sum sqrt(P(u,v)) |u,v>_{UV} |u,v>_E`` on registers U, V, E.

    ``E`` has dimension ``|U| |V|`` with ``|u,v>_E`` at index ``u |V| + v``.
    """
    nu, nv = len(P.u_alphabet), len(P.v_alphabet)
    total = (nu * nv) ** 2
    if total > MAX_EMBED_DIM:
        raise ValueError(f"embedding dimension {total} exceeds the guard {MAX_EMBED_DIM}")
    layout = RegisterLayout((("U", nu), ("V", nv), ("E", nu * nv)))
    amps = np.zeros((nu, nv, nu * nv), dtype=np.complex128)
    for i, j, p in P.entries():
        amps[i, j, i * nv + j] = np.sqrt(p)
    return PureState(layout, amps.reshape(-1))


def to_json(P: JointDistribution) -> dict:
    return {"u": list(P.u_alphabet), "v": list(P.v_alphabet), "p": P.dense().tolist()}


def from_json(obj: dict) -> JointDistribution:
    try:
        return JointDistribution.from_dense(obj["u"], obj["v"], obj["p"])
    except KeyError as e:
        raise ValueError(f"distribution JSON missing field {e}") from None
