import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsfe.entropy import (
    BipartiteDistribution,
    InequalityConfig,
    afw_bound,
    binary_h,
    concavity_slack,
    cond_max_entropy,
    cond_shannon,
    cond_von_neumann,
    dephase,
    fano_bound,
    g_func,
    inequality_suite,
    shannon,
    von_neumann,
)
from qsfe.qstate import (
    DensityOperator,
    PureState,
    RegisterLayout,
    apply_unitary,
    purify,
    random_density,
    random_unitary,
    tensor,
)


# frozen from a 30-digit evaluation of the defining formulas
H_011 = 0.499915958164528
G_025 = 0.902410118609203


def test_binary_h():
    assert binary_h(0) == 0
    assert binary_h(0.5) == pytest.approx(1)
    assert binary_h(0.11) == pytest.approx(H_011, abs=1e-12)
    with pytest.raises(ValueError):
        binary_h(1.2)


def test_g_func():
    assert g_func(0) == 0
    assert g_func(1) == pytest.approx(2)
    assert g_func(0.25) == pytest.approx(G_025, abs=1e-12)


def test_afw_bound():
    assert afw_bound(0, 7) == 0
    assert afw_bound(0.25, 4) == pytest.approx(0.5 + G_025, abs=1e-12)
    assert afw_bound(1, 2) == pytest.approx(3)


def test_fano_bound():
    assert fano_bound(0, 8) == 0
    assert fano_bound(0.5, 2) == pytest.approx(1.5)
    assert fano_bound(0.1, 4) == pytest.approx(0.66900, abs=1e-4)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 0.5), st.floats(0, 0.5), st.integers(2, 64))
def test_bounds_monotone_in_eps(a, b, d):
    lo, hi = sorted((a, b))
    assert afw_bound(lo, d) <= afw_bound(hi, d) + 1e-12
    assert fano_bound(lo, d) <= fano_bound(hi, d) + 1e-12


def test_cond_shannon_examples():
    assert cond_shannon(BipartiteDistribution.from_table(np.full((4, 1), 0.25))) == pytest.approx(2)
    assert cond_shannon(BipartiteDistribution.from_table(np.eye(3) / 3)) == pytest.approx(0, abs=1e-12)
    tri = np.array([[1, 1], [1, 0]]) / 3
    assert cond_shannon(BipartiteDistribution.from_table(tri)) == pytest.approx(2 / 3)


def test_cond_max_entropy_examples():
    assert cond_max_entropy(BipartiteDistribution.from_table(np.full((8, 3), 1 / 24))) == pytest.approx(3)
    assert cond_max_entropy(BipartiteDistribution.from_table(np.eye(5) / 5)) == 0
    tri = np.array([[1, 1], [1, 0]]) / 3
    assert cond_max_entropy(BipartiteDistribution.from_table(tri)) == pytest.approx(1)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2 ** 32 - 1))
def test_max_entropy_dominates_shannon(nx, ny, seed):
    rng = np.random.default_rng(seed)
    table = rng.random((nx, ny)) * (rng.random((nx, ny)) < 0.7)
    if table.sum() == 0:
        table[0, 0] = 1
    P = BipartiteDistribution.from_table(table / table.sum())
    hmax = cond_max_entropy(P)
    assert 0 <= hmax <= math.log2(nx) + 1e-12
    assert cond_shannon(P) <= hmax + 1e-9


def test_von_neumann_examples():
    q = RegisterLayout.of(("A", 2))
    assert von_neumann(PureState(q, np.array([0.6, 0.8]))) == pytest.approx(0, abs=1e-12)
    assert von_neumann(DensityOperator.maximally_mixed(q)) == pytest.approx(1)
    assert von_neumann(DensityOperator(q, np.diag([0.25, 0.75]))) == pytest.approx(0.81128, abs=1e-4)


def test_von_neumann_unitary_invariance(rng):
    lay = RegisterLayout.of(("A", 3))
    for _ in range(20):
        rho = random_density(lay, rng)
        rot = apply_unitary(rho, random_unitary(3, rng), ["A"])
        assert von_neumann(rot) == pytest.approx(von_neumann(rho), abs=1e-9)


def test_cond_von_neumann_examples(rng):
    x = DensityOperator.maximally_mixed(RegisterLayout.of(("X", 4)))
    b = random_density(RegisterLayout.of(("B", 2)), rng)
    assert cond_von_neumann(tensor(x, b), ["X"], ["B"]) == pytest.approx(2)
    bell = PureState(RegisterLayout.of(("A", 2), ("B", 2)), np.array([1, 0, 0, 1]) / math.sqrt(2))
    assert cond_von_neumann(bell, ["A"], ["B"]) == pytest.approx(-1)
    psi = purify(DensityOperator(RegisterLayout.of(("X", 2)), np.diag([0.25, 0.75])), "Xp")
    assert cond_von_neumann(psi, ["X"], ["Xp"]) == pytest.approx(-0.81128, abs=1e-4)


def test_cond_von_neumann_rejects_overlap(rng):
    rho = random_density(RegisterLayout.of(("A", 2), ("B", 2)), rng)
    with pytest.raises(ValueError):
        cond_von_neumann(rho, ["A"], ["A", "B"])


def test_cond_von_neumann_lower_limits(rng):
    lay = RegisterLayout.of(("A", 2), ("B", 3))
    for _ in range(30):
        rho = random_density(lay, rng)
        assert cond_von_neumann(rho, ["A"], ["B"]) >= -1 - 1e-9
        # dephasing A makes it classical, where the conditional entropy is non-negative
        cq = dephase(rho, "A")
        assert cond_von_neumann(cq, ["A"], ["B"]) >= -1e-9


def test_concavity_slack_mixture(rng):
    lay = RegisterLayout.of(("A", 2), ("B", 2))
    states = [random_density(lay, rng) for _ in range(2)]
    assert concavity_slack([0.3, 0.7], states, ["A"], ["B"]) >= -1e-9


def test_suite_product_state(rng):
    lay = RegisterLayout.of(("A", 2), ("B", 2), ("C", 2))
    parts = [random_density(RegisterLayout.of((lb, 2)), rng) for lb in "AB"]
    c = DensityOperator(RegisterLayout.of(("C", 2)), np.diag([0.3, 0.7]))
    rho = tensor(tensor(parts[0], parts[1]), c)
    assert rho.layout == lay
    rep = inequality_suite(rho, InequalityConfig())
    assert rep.ok
    assert set(rep.worst_slack) == {"projective_measurement", "classical_chain", "concavity"}


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_random_battery(seed):
    rep = inequality_suite(trials=100, seed=seed)
    assert rep.ok, rep.violations
    assert set(rep.worst_slack) == {"concavity", "classical_chain", "projective_measurement", "continuity", "fano"}


def test_shannon_ignores_zeros():
    assert shannon([0.5, 0.5, 0.0]) == pytest.approx(1)
