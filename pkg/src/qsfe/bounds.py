"""Closed-form lower bounds on SFE reductions, evaluated on concrete parameters."""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .entropy import binary_h, g_func

FEASIBILITY_TOL = 1e-9
EPS_PRIME_FACTORS = {"theorem": 2.0, "proof": 3.0}


@dataclass
class BoundReport:
    bound_name: str
    inputs: dict
    lhs: float
    rhs: float
    slack: float = field(init=False)
    feasible: bool = field(init=False)
    notes: str = ""
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.slack = self.lhs - self.rhs
        self.feasible = bool(self.slack >= -FEASIBILITY_TOL)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "BoundReport":
        rep = cls(d["bound_name"], d["inputs"], d["lhs"], d["rhs"], d.get("notes", ""), d.get("extras", {}))
        return rep


def h_clamped(x: float) -> tuple[float, bool]:
    """Binary entropy of ``min(x, 1)`` and whether clamping happened."""
    return binary_h(min(max(x, 0.0), 1.0)), x > 1.0


def eps_prime(eps: float, size: int, variant: str = "theorem") -> float:
    """``c |Y|^2 sqrt(eps)`` with ``c = 2`` (theorem) or ``3`` (proof)."""
    return EPS_PRIME_FACTORS[variant] * size ** 2 * math.sqrt(eps)


def _check_eps(eps: float):
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"eps must lie in [0, 1], got {eps}")


def _clamp_note(clamped: bool) -> str:
    return "h(eps') clamped at eps' = 1; outside the small-error regime" if clamped else ""


class Prop1Success(NamedTuple):
    simple: float
    exact_chain: float


def prop1_failure_chain(eps: float, m: int) -> float:
    """Union bound on the attack's failure: ``(3 sqrt(eps) + eps)(m^2 + m)/2 - 3 sqrt(eps)``."""
    s = math.sqrt(eps)
    return 0.5 * (3 * s + eps) * (m * m + m) - 3 * s


def prop1_success(eps: float, m: int) -> Prop1Success:
    """Lower bounds on extracting ``m`` function values: ``1 - 2 m^2 sqrt(eps)``
    and the tighter union-bound chain, both clipped at 0."""
    _check_eps(eps)
    if m < 2:
        raise ValueError("need m >= 2")
    simple = max(0.0, 1.0 - 2 * m * m * math.sqrt(eps))
    chain = max(0.0, 1.0 - prop1_failure_chain(eps, m))
    return Prop1Success(simple, min(1.0, chain))


def thm1_threshold(x_size: int, y_size: int) -> float:
    """The ``eps`` solving ``2 |Y|^2 sqrt(eps) + eps = 1/|X|``.

    Any protocol for a non-trivial function on these alphabets with error
    below this value contradicts the attack.
    """
    if x_size < 2 or y_size < 2:
        raise ValueError("need |X| >= 2 and |Y| >= 2")
    b, c = y_size ** 2, 1.0 / x_size
    # positive root of s^2 + 2 b s - c = 0, written without cancellation
    s = c / (b + math.sqrt(b * b + c))
    return s * s


def thm1_check(x_size: int, y_size: int, eps: float) -> BoundReport:
    """Compare the attack's success ``1 - 2|Y|^2 sqrt(eps)`` with Bob's best ideal guess ``1 - 1/|X| + eps``."""
    _check_eps(eps)
    attack = 1.0 - 2 * y_size ** 2 * math.sqrt(eps)
    guess = 1.0 - 1.0 / x_size + eps
    return BoundReport("thm1", {"x": x_size, "y": y_size, "eps": eps}, lhs=guess, rhs=attack,
                       notes="feasible iff the ideal guessing bound is not beaten by the attack",
                       extras={"threshold": thm1_threshold(x_size, y_size)})


def thm2_rhs(t: float, x_size: int, y_size: int, eps: float, variant: str = "theorem") -> tuple[float, bool]:
    _check_eps(eps)
    ep = eps_prime(eps, y_size, variant)
    h, clamped = h_clamped(ep)
    return t - (eps + ep) * math.log2(x_size) - g_func(eps) - h, clamped


def thm2_check(entropy_sum: float, t: float, x_size: int, y_size: int, eps: float,
               variant: str = "theorem") -> BoundReport:
    """Resource entropy ``H_max(U|V) + H_max(V|U)`` against the required minimum."""
    rhs, clamped = thm2_rhs(t, x_size, y_size, eps, variant)
    return BoundReport("thm2", {"entropy_sum": entropy_sum, "t": t, "x": x_size, "y": y_size, "eps": eps,
                                "eps_prime_variant": variant},
                       lhs=entropy_sum, rhs=rhs, notes=_clamp_note(clamped),
                       extras={"eps_prime": eps_prime(eps, y_size, variant), "clamped": clamped})


def _cor3_terms(n: int, m: int, eps: float) -> tuple[float, float]:
    et = 3 * m * eps
    etp = 3 * n * n * math.sqrt(et)
    h, _ = h_clamped(etp)
    lhs = (g_func(et) + h) / m + (et + etp) * 4 * n
    return lhs, 3 * (n - 1) - math.log2(n)


def cor3_minimal_eps(n: int, m: int, rel_tol: float = 1e-12) -> float:
    """Smallest ``eps`` at which the extension inequality can hold.

    The left side is not monotone once ``h`` passes its peak, so the first
    sign change is located on a log grid and then refined by bisection.
    """
    def margin(e):
        lhs, rhs = _cor3_terms(n, m, e)
        return lhs - rhs

    hi_eps = 1.0 / (3 * m)
    grid = np.geomspace(1e-18, hi_eps, 4001)
    vals = np.array([margin(e) for e in grid])
    idx = np.flatnonzero(vals >= 0)
    if idx.size == 0:
        return math.inf
    j = idx[0]
    if j == 0:
        return float(grid[0])
    lo, hi = float(grid[j - 1]), float(grid[j])
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if margin(mid) >= 0:
            hi = mid
        else:
            lo = mid
    return hi


def cor3_closed_form(n: int, m: int) -> float:
    """The error lower bound ``1 / (3 m (27 n^2)^2)`` from the unoptimized closed-form argument."""
    return 1.0 / (3 * m * (27 * n * n) ** 2)


def cor3_check(n: int, m: int, eps: float) -> tuple[BoundReport, float]:
    """Can ``m + 1`` instances of 1-out-of-n bit OT come from ``m`` with error ``eps``?

    The report is feasible iff the contradiction inequality holds at
    ``eps``, i.e. the extension is not ruled out.
    """
    if n < 2 or m < 1:
        raise ValueError("need n >= 2 and m >= 1")
    _check_eps(eps)
    lhs, rhs = _cor3_terms(n, m, eps)
    min_eps = cor3_minimal_eps(n, m)
    closed = cor3_closed_form(n, m)
    rep = BoundReport("cor3", {"n": n, "m": m, "eps": eps}, lhs=lhs, rhs=rhs,
                      notes="extension with error below minimal_eps is impossible",
                      extras={"minimal_eps": min_eps, "closed_form_eps": closed,
                              "closed_form_c_n_as_printed": closed,
                              "eps_tilde": 3 * m * eps})
    return rep, min_eps


def cor4_min_m(n: int, k: int, eps: float, variant: str = "theorem") -> float:
    """Lower bound on the number of 1-out-of-2 k-bit OTs for 1-out-of-n k-bit OT."""
    if n < 2 or k < 1:
        raise ValueError("need n >= 2 and k >= 1")
    _check_eps(eps)
    ep = eps_prime(eps, n, variant)
    h, _ = h_clamped(ep)
    return (((1 - eps - ep) * n - 1) * k - g_func(eps) - h) / (k + 1)


def _min_instances_report(name, inputs, rhs, m, scale, clamped, ep) -> BoundReport:
    # bounds of the form scale * m >= rhs
    min_m = max(0, math.ceil(rhs / scale - 1e-12))
    lhs = scale * (min_m if m is None else m)
    note = "lhs uses the minimal integer m" if m is None else ""
    note = "; ".join(s for s in (note, _clamp_note(clamped)) if s)
    return BoundReport(name, inputs, lhs=lhs, rhs=rhs, notes=note,
                       extras={"min_m": min_m, "eps_prime": ep, "clamped": clamped})


def cor4_check(n: int, k: int, eps: float, m: int | None = None, variant: str = "theorem") -> BoundReport:
    rhs = cor4_min_m(n, k, eps, variant)
    ep = eps_prime(eps, n, variant)
    return _min_instances_report("cor4", {"n": n, "k": k, "eps": eps, "m": m}, rhs, m, 1, ep > 1, ep)


def cor5_bound(n: int, eps: float, m: int | None = None, variant: str = "theorem") -> BoundReport:
    """Inner product mod two from 1-out-of-2 bit OT: ``2m >= rhs``."""
    if n < 2:
        raise ValueError("need n >= 2")
    _check_eps(eps)
    ep = eps_prime(eps, n, variant)
    h, clamped = h_clamped(ep)
    rhs = (n - 1) - (eps + ep) * n - g_func(eps) - h
    return _min_instances_report("cor5", {"n": n, "eps": eps, "m": m}, rhs, m, 2, clamped, ep)


def cor6_bound(k: int, eps: float, m: int | None = None, variant: str = "theorem") -> BoundReport:
    """Equality from 1-out-of-2 bit OT: ``2m >= rhs`` with ``eps' = c 2^{2k} sqrt(eps)``."""
    if k < 1:
        raise ValueError("need k >= 1")
    _check_eps(eps)
    ep = eps_prime(eps, 2 ** k, variant)
    h, clamped = h_clamped(ep)
    rhs = (1 - eps - ep) * k - g_func(eps) - h - 1
    return _min_instances_report("cor6", {"k": k, "eps": eps, "m": m}, rhs, m, 2, clamped, ep)


def sweep(fn: Callable[..., BoundReport], grid: dict) -> list[BoundReport]:
    """Evaluate ``fn`` on the Cartesian product of ``grid``, in sorted parameter order."""
    keys = sorted(grid)
    out = []
    for values in itertools.product(*(sorted(grid[k]) for k in keys)):
        rep = fn(**dict(zip(keys, values)))
        out.append(rep[0] if isinstance(rep, tuple) else rep)
    return out
