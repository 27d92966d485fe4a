"""The acceptance battery: each criterion checks a number or property at a stated tolerance and time budget.

Used by ``qsfe verify`` and by the test suite. A criterion returns its
verdict together with the measured values so failures can be diagnosed
from the report alone.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import attack, bounds, entropy, functions, primitives, qstate


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    seconds: float
    budget: float
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d} {self.name} ({self.seconds:.2f}s / {self.budget:g}s)"

    def to_dict(self) -> dict:
        return {"number": self.number, "name": self.name, "passed": self.passed,
                "seconds": self.seconds, "budget": self.budget, "details": self.details}


@dataclass(frozen=True)
class Criterion:
    number: int
    name: str
    tags: tuple[str, ...]
    budget: float
    tol: float
    check: Callable[[float, int | None], tuple[bool, dict]]

    def matches(self, pattern: str | None) -> bool:
        if not pattern:
            return True
        pattern = pattern.lower()
        return pattern in self.name.lower() or any(pattern in t for t in self.tags) or pattern == str(self.number)

    def run(self, tol: float | None = None, seed: int | None = None) -> CriterionResult:
        start = time.perf_counter()
        try:
            ok, details = self.check(self.tol if tol is None else tol, seed)
        except Exception as e:  # a crash is a failed criterion, reported by name
            ok, details = False, {"error": f"{type(e).__name__}: {e}"}
        elapsed = time.perf_counter() - start
        details = dict(details, tol=self.tol if tol is None else tol)
        return CriterionResult(self.number, self.name, bool(ok and elapsed < self.budget), elapsed,
                               self.budget, details)


# -- criteria ---------------------------------------------------------------

def _uhlmann(tol: float, seed: int | None = None) -> tuple[bool, dict]:
    rng = np.random.default_rng(20240611 if seed is None else seed)
    worst, count = 0.0, 0
    for d in (2, 3):
        layout = qstate.RegisterLayout((("A", d), ("B", d)))
        for _ in range(60):
            psi0 = qstate.random_pure_state(layout, rng)
            psi1 = qstate.random_pure_state(layout, rng)
            u = qstate.uhlmann_rotation(psi0, psi1, ["B"])
            achieved = qstate.rotation_overlap(psi0, psi1, u, ["B"])
            target = qstate.fidelity(qstate.partial_trace(psi0, ["A"]), qstate.partial_trace(psi1, ["A"]))
            worst = max(worst, abs(achieved - target))
            count += 1
    return worst <= tol, {"pairs": count, "max_abs_error": worst}


def _detector_state(eps: float, d: int, rng) -> tuple[qstate.DensityOperator, qstate.Measurement]:
    """Uniform ``X`` with ``|phi_x> = sqrt(1-eps)|x> + sqrt(eps)|w_x>``, ``w_x`` orthogonal to ``|x>``.

    The basis measurement guesses each ``x`` with error exactly ``eps``. A
    random basis change is applied to both state and detector.
    """
    rot = qstate.random_unitary(d, rng)
    layout = qstate.RegisterLayout((("X", d), ("B", d)))
    mat = np.zeros((d * d, d * d), dtype=np.complex128)
    for x in range(d):
        w = rng.normal(size=d) + 1j * rng.normal(size=d)
        w[x] = 0
        w /= np.linalg.norm(w)
        phi = math.sqrt(1 - eps) * np.eye(d)[x] + math.sqrt(eps) * w
        phi = rot @ phi
        mat[x * d:(x + 1) * d, x * d:(x + 1) * d] = np.outer(phi, phi.conj()) / d
    ops = tuple((str(x), rot @ np.diag(np.eye(d)[x]) @ rot.conj().T) for x in range(d))
    return qstate.DensityOperator(layout, mat), qstate.Measurement(("B",), ops)


def _gentle(tol: float, seed: int | None = None) -> tuple[bool, dict]:
    rng = np.random.default_rng(7 if seed is None else seed)
    rows, ok = [], True
    for eps in (0.01, 0.04, 0.09):
        for d in (2, 3):
            for _ in range(5):
                rho, m = _detector_state(eps, d, rng)
                measured = qstate.detection_error(rho, m, "X")
                _, post = qstate.gentle_post_state(rho, m, "X")
                dist = qstate.trace_distance(post, rho)
                bound = math.sqrt(eps) + eps
                ok &= abs(measured - eps) <= 1e-9 and dist <= bound + tol
                rows.append(dist / bound)
    return ok, {"instances": len(rows), "max_distance_over_bound": max(rows)}


_PERFECT = (("ot", {"n": 2, "k": 1}), ("ip", {"n": 3}), ("eq_restricted", {"n": 4, "k": 2}))


def _perfect_extraction(tol: float, seed: int | None = None) -> tuple[bool, dict]:
    out, ok = {}, True
    for name, kw in _PERFECT:
        f = functions.builtin(name, **kw)
        res = attack.extraction_attack(attack.canonical_protocol(f, 0.0))
        out[f.name] = {"joint_success": res.joint_success, "extracted_x_accuracy": res.extracted_x_accuracy}
        ok &= abs(res.joint_success - 1) <= tol and abs(res.extracted_x_accuracy - 1) <= tol
    return ok, out


def _prop1_quantitative(tol: float, seed: int | None = None) -> tuple[bool, dict]:
    f = functions.builtin("ot", n=2, k=1)
    out, ok = {}, True
    for eta in (1e-4, 1e-3, 1e-2):
        p = attack.canonical_protocol(f, eta)
        res = attack.extraction_attack(p)
        chk = attack.attack_bound_check(p, res)
        ok &= chk["respects_simple"] and chk["respects_chain"]
        out[str(eta)] = chk
    return ok, out


def _entropy_sums(tol: float, seed: int | None = None) -> tuple[bool, dict]:
    out, ok = {}, True
    for k in (1, 2, 3):
        for m in (1, 2, 3):
            val = primitives.entropy_sum(primitives.power(primitives.oblivious_key(2, k), m))
            out[f"otkey(2,{k})^{m}"] = val
            ok &= abs(val - m * (k + 1)) <= tol
    for n in (2, 3, 4):
        val = primitives.entropy_sum(primitives.oblivious_key(n, 1))
        out[f"otkey({n},1)"] = val
        ok &= abs(val - ((n - 1) + math.log2(n))) <= tol
    return ok, out


def _concealment(tol: float, seed: int | None = None) -> tuple[bool, dict]:
    out, ok = {}, True
    for n in (2, 3, 4):
        t = functions.concealment_t(functions.builtin("ip", n=n))
        out[f"ip({n})"] = t
        ok &= abs(t - (n - 1)) <= tol
    for n, k in ((2, 1), (2, 2), (3, 1)):
        t = functions.concealment_t(functions.builtin("ot", n=n, k=k))
        out[f"ot({n},{k})"] = t
        ok &= abs(t - (n - 1) * k) <= tol
    target = 0.75 * math.log2(3)
    for n in (2, 3, 4):
        t = functions.concealment_t(functions.builtin("eq_restricted", n=n, k=2))
        out[f"eq_restricted({n},2)"] = t
        ok &= abs(t - target) <= tol
    cmp = functions.eq_concealment_comparison(2)
    out["eq_k2_comparison"] = cmp
    out["note"] = (f"closed form (1 - 2^-k) k gives {cmp['coarse_expression']:.6f} for k=2, "
                   f"above the exact {cmp['exact']:.6f}; the bound uses k - 1 = {cmp['used_in_bound']}")
    return ok, out


def _leading_constants(tol: float, seed: int | None = None) -> tuple[bool, dict]:
    out, ok = {}, True
    for name, kw in (("ip", {"n": 3}), ("ot", {"n": 2, "k": 2}), ("eq_restricted", {"n": 3, "k": 2})):
        f = functions.builtin(name, **kw)
        t = functions.concealment_t(f)
        rhs, _ = bounds.thm2_rhs(t, len(f.x_alphabet), len(f.y_alphabet), 0.0)
        out[f"thm2 {f.name}"] = rhs
        ok &= abs(rhs - t) <= tol
    for n in (2, 4, 8):
        rep = bounds.cor4_check(n, 64, 0.0)
        out[f"cor4 n={n} k=64"] = {"rhs": rep.rhs, "min_m": rep.extras["min_m"]}
        # the number of instances is an integer, so the 0.1 window applies to min_m;
        # the real-valued rhs approaches n - 1 at rate (n-1)/(k+1)
        ok &= abs(rep.extras["min_m"] - (n - 1)) <= 0.1 and abs(rep.rhs - (n - 1)) <= (n - 1) / 65 + tol
    for n in (2, 3, 5, 8):
        rhs = bounds.cor5_bound(n, 0.0).rhs
        out[f"cor5 n={n}"] = rhs
        ok &= abs(rhs - (n - 1)) <= tol
    for k in (1, 2, 10, 64):
        rhs = bounds.cor6_bound(k, 0.0).rhs
        out[f"cor6 k={k}"] = rhs
        ok &= abs(rhs - (k - 1)) <= tol
    return ok, out


def _cor3(tol: float, seed: int | None = None) -> tuple[bool, dict]:
    ms = (1, 2, 4, 8)
    prods = {m: m * bounds.cor3_minimal_eps(2, m) for m in ms}
    ratio = max(prods.values()) / min(prods.values())
    infeasible = {}
    for n in (2, 3, 4):
        for m in ms:
            rep, _ = bounds.cor3_check(n, m, 0.0)
            infeasible[f"n={n} m={m}"] = not rep.feasible
    ok = ratio <= 2.0 and all(infeasible.values())
    return ok, {"m_times_minimal_eps": {str(m): v for m, v in prods.items()}, "max_over_min": ratio,
                "perfect_extension_infeasible": infeasible}


def _bisect_threshold(x: int, y: int) -> float:
    # independent oracle: solve 2 y^2 sqrt(e) + e = 1/x on the eps axis directly
    lo, hi = 0.0, 1.0 / x
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 2 * y * y * math.sqrt(mid) + mid < 1.0 / x:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _thm1(tol: float, seed: int | None = None) -> tuple[bool, dict]:
    th = bounds.thm1_threshold(4, 2)
    oracle = _bisect_threshold(4, 2)
    guess = [attack.alice_guessing(attack.canonical_protocol(functions.builtin("ot", n=2, k=1), 0.0), y)[0]
             for y in ("0", "1")]
    ok = abs(th - oracle) <= tol and all(abs(g - 1) <= 1e-9 for g in guess)
    return ok, {"threshold": th, "oracle": oracle, "alice_guessing": guess}


def _thm2_gap(tol: float, seed: int | None = None) -> tuple[bool, dict]:
    p, key = attack.precomputed_ot(2, 1)
    rows, ok = {}, True
    for y in p.function.y_alphabet:
        e = attack.thm2_experiment(p, key, fixed_y=y)
        rows[y] = e.to_dict()
        ok &= e.t - tol <= e.gap <= e.entropy_sum + tol
        ok &= abs(e.t - 1) <= 1e-12 and abs(e.entropy_sum - 2) <= 1e-12
    return ok, rows


def _inequalities(tol: float, seed: int | None = None) -> tuple[bool, dict]:
    rep = entropy.inequality_suite(trials=100, seed=11 if seed is None else seed, tol=tol)
    return rep.ok, {"trials": rep.trials, "worst_slack": rep.worst_slack, "violations": rep.violations}


CRITERIA: tuple[Criterion, ...] = (
    Criterion(1, "uhlmann achievability", ("qstate", "uhlmann"), 10, 1e-9, _uhlmann),
    Criterion(2, "gentle measurement", ("qstate", "measurement"), 5, 0.0, _gentle),
    Criterion(3, "perfect-protocol extraction", ("attack",), 30, 1e-9, _perfect_extraction),
    Criterion(4, "attack success versus guarantee", ("attack", "bounds"), 60, 0.0, _prop1_quantitative),
    Criterion(5, "entropy sums of resources", ("primitives", "entropy"), 10, 1e-12, _entropy_sums),
    Criterion(6, "concealment values", ("functions",), 5, 1e-9, _concealment),
    Criterion(7, "leading constants at eps=0", ("bounds",), 5, 1e-12, _leading_constants),
    Criterion(8, "extension error scaling", ("bounds",), 10, 0.0, _cor3),
    Criterion(9, "guessing threshold", ("bounds", "attack"), 5, 1e-10, _thm1),
    Criterion(10, "entropy gap experiment", ("attack", "entropy"), 10, 1e-8, _thm2_gap),
    Criterion(11, "entropy inequality battery", ("entropy",), 30, 1e-8, _inequalities),
)


def run(pattern: str | None = None, tol: float | None = None, seed: int | None = None) -> list[CriterionResult]:
    """Run every criterion matching ``pattern`` (name, tag or number).

    ``tol`` replaces every criterion's own tolerance and ``seed`` the fixed
    seeds of the randomized ones; both default to the stated values.
    """
    return [c.run(tol, seed) for c in CRITERIA if c.matches(pattern)]
