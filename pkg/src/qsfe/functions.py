"""Finite two-input functions ``f: X x Y -> Z`` and their structural predicates."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .entropy import BipartiteDistribution, cond_shannon
from .labels import bitstrings, render

MAX_TABLE = 2 ** 20


@dataclass(frozen=True, eq=False)
class FunctionTable:
    """Truth table: ``table[i, j]`` is the index into ``z_alphabet`` of ``f(x_i, y_j)``."""

    x_alphabet: tuple[str, ...]
    y_alphabet: tuple[str, ...]
    z_alphabet: tuple[str, ...]
    table: np.ndarray
    name: str = field(default="", compare=False)

    def __post_init__(self):
        xs, ys, zs = (tuple(str(a) for a in al) for al in (self.x_alphabet, self.y_alphabet, self.z_alphabet))
        if not xs or not ys or not zs:
            raise ValueError("alphabets must be non-empty")
        for al in (xs, ys, zs):
            if len(set(al)) != len(al):
                raise ValueError(f"duplicate labels in alphabet {al}")
        t = np.array(self.table, dtype=np.int64)
        if t.shape != (len(xs), len(ys)):
            raise ValueError(f"table shape {t.shape} does not match |X| x |Y| = {(len(xs), len(ys))}")
        if t.size and (t.min() < 0 or t.max() >= len(zs)):
            raise ValueError("table entries must index into the output alphabet")
        t.setflags(write=False)
        object.__setattr__(self, "x_alphabet", xs)
        object.__setattr__(self, "y_alphabet", ys)
        object.__setattr__(self, "z_alphabet", zs)
        object.__setattr__(self, "table", t)

    @classmethod
    def from_callable(cls, xs, ys, zs, fn, name: str = "") -> "FunctionTable":
        if len(xs) * len(ys) > MAX_TABLE:
            raise ValueError(f"table with {len(xs) * len(ys)} entries exceeds the guard {MAX_TABLE}")
        zindex = {z: i for i, z in enumerate(zs)}
        t = [[zindex[fn(x, y)] for y in ys] for x in xs]
        return cls(tuple(map(render, xs)), tuple(map(render, ys)), tuple(zs), np.array(t), name)

    def __call__(self, x: str, y: str) -> str:
        return self.z_alphabet[self.table[self.x_alphabet.index(x), self.y_alphabet.index(y)]]

    @property
    def shape(self) -> tuple[int, int]:
        return self.table.shape

    def restrict(self, xs=None, ys=None) -> "FunctionTable":
        """Sub-table on the given X and Y labels (order preserved as given)."""
        xs = self.x_alphabet if xs is None else tuple(xs)
        ys = self.y_alphabet if ys is None else tuple(ys)
        xi = [self.x_alphabet.index(x) for x in xs]
        yi = [self.y_alphabet.index(y) for y in ys]
        return FunctionTable(xs, ys, self.z_alphabet, self.table[np.ix_(xi, yi)], self.name)


class Verdict(NamedTuple):
    holds: bool
    witness: object = None


def is_non_trivial(f: FunctionTable) -> Verdict:
    """Every column has a collision. On failure the witness is an injective column's label."""
    for j, y in enumerate(f.y_alphabet):
        col = f.table[:, j]
        if len(np.unique(col)) == len(col):
            return Verdict(False, y)
    return Verdict(True)


def is_non_redundant(f: FunctionTable) -> Verdict:
    """All rows distinct. On failure the witness is the first equal pair ``(x, x')``."""
    seen: dict[bytes, int] = {}
    for i, row in enumerate(f.table):
        key = row.tobytes()
        if key in seen:
            return Verdict(False, (f.x_alphabet[seen[key]], f.x_alphabet[i]))
        seen[key] = i
    return Verdict(True)


def remove_redundant(f: FunctionTable) -> FunctionTable:
    """Drop redundant inputs, keeping the lexicographically smallest label of each duplicate class."""
    keep: dict[bytes, int] = {}
    for i, row in enumerate(f.table):
        key = row.tobytes()
        if key not in keep or f.x_alphabet[i] < f.x_alphabet[keep[key]]:
            keep[key] = i
    rows = sorted(keep.values())
    return f.restrict(xs=[f.x_alphabet[i] for i in rows])


def output_distribution(f: FunctionTable, y: str) -> BipartiteDistribution:
    """Joint distribution of ``(X, f(X, y))`` for uniform ``X``."""
    j = f.y_alphabet.index(y)
    nx = len(f.x_alphabet)
    p = np.zeros((nx, len(f.z_alphabet)))
    p[np.arange(nx), f.table[:, j]] = 1.0 / nx
    return BipartiteDistribution(f.x_alphabet, f.z_alphabet, p)


def concealment_profile(f: FunctionTable) -> np.ndarray:
    """``H(X | f(X, y))`` for each ``y`` under uniform ``X``."""
    return np.array([cond_shannon(output_distribution(f, y)) for y in f.y_alphabet])


def concealment_t(f: FunctionTable) -> float:
    """``t = min_y H(X | f(X, y))`` with ``X`` uniform."""
    return float(concealment_profile(f).min())


def eq_concealment_comparison(k: int) -> dict:
    """Exact concealment of equality on 2^k inputs next to the closed form ``(1 - 2^-k) k``.

    The exact value is ``(1 - 2^-k) log(2^k - 1)``, slightly below the closed
    form; both still exceed the ``k - 1`` that the equality bound uses.
    """
    exact = concealment_t(builtin("eq_restricted", n=k, k=k))
    return {
        "k": k,
        "exact": exact,
        "exact_closed_form": (1 - 2.0 ** -k) * np.log2(2 ** k - 1) if k > 0 else 0.0,
        "coarse_expression": (1 - 2.0 ** -k) * k,
        "used_in_bound": k - 1,
    }


# -- builtin functions ------------------------------------------------------

def _ip(n: int) -> FunctionTable:
    xs = bitstrings(n)
    return FunctionTable.from_callable(
        xs, xs, ("0", "1"),
        lambda x, y: str(sum(int(a) & int(b) for a, b in zip(x, y)) % 2),
        name=f"ip({n})")


def _eq(n: int) -> FunctionTable:
    xs = bitstrings(n)
    return FunctionTable.from_callable(xs, xs, ("0", "1"), lambda x, y: "1" if x == y else "0", name=f"eq({n})")


def _eq_restricted(n: int, k: int) -> FunctionTable:
    if not 0 < k <= n:
        raise ValueError("need 0 < k <= n")
    dom = bitstrings(n)[: 2 ** k]
    return FunctionTable.from_callable(dom, dom, ("0", "1"), lambda x, y: "1" if x == y else "0",
                                       name=f"eq_restricted({n},{k})")


def _ot(n: int, k: int) -> FunctionTable:
    strings = bitstrings(k)
    if len(strings) ** n * n > MAX_TABLE:
        raise ValueError("ot table exceeds the size guard")
    xs = list(itertools.product(strings, repeat=n))
    ys = [str(c) for c in range(n)]
    return FunctionTable.from_callable(xs, ys, tuple(strings), lambda x, c: x[int(c)], name=f"ot({n},{k})")


def builtin(name: str, n: int = 2, k: int = 1) -> FunctionTable:
    """Truth tables for ``ip``, ``eq``, ``eq_restricted`` and ``ot``.

    ``eq_restricted(n, k)`` limits both inputs to the first ``2^k``
    strings of length ``n`` in lexicographic order. ``ot(n, k)`` is
    1-out-of-n string OT: ``f((x_0..x_{n-1}), c) = x_c``.
    """
    if name in ("ip", "eq"):
        if 4 ** n > MAX_TABLE:
            raise ValueError(f"{name} table exceeds the size guard")
        return _ip(n) if name == "ip" else _eq(n)
    if name == "eq_restricted":
        return _eq_restricted(n, k)
    if name == "ot":
        return _ot(n, k)
    raise ValueError(f"unknown builtin function {name!r}")


def parse_builtin(spec: str) -> FunctionTable:
    """Parse names like ``ot(2,1)``, ``ip(3)`` or ``eq_restricted(4,2)``."""
    spec = spec.replace(" ", "")
    if "(" not in spec:
        return builtin(spec)
    head, args = spec.split("(", 1)
    nums = [int(a) for a in args.rstrip(")").split(",") if a]
    if head in ("ip", "eq"):
        return builtin(head, n=nums[0])
    return builtin(head, n=nums[0], k=nums[1] if len(nums) > 1 else 1)
