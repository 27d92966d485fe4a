import math

import numpy as np
import pytest

from qsfe.qstate import (
    Branch,
    DensityOperator,
    Measurement,
    PureState,
    RegisterLayout,
    apply_unitary,
    conditioned_uhlmann,
    cq_distance,
    cq_state,
    detection_error,
    fidelity,
    gentle_post_state,
    measure,
    measurement_channel,
    partial_trace,
    purify,
    random_density,
    random_pure_state,
    random_unitary,
    rotation_overlap,
    tensor,
    trace_distance,
    uhlmann_rotation,
)

Q = RegisterLayout.of(("A", 2))
QB = RegisterLayout.of(("B", 2))
AB = RegisterLayout.of(("A", 2), ("B", 2))
PLUS = np.array([1, 1]) / math.sqrt(2)


def ket(layout, vec):
    return PureState(layout, np.asarray(vec, dtype=complex))


# -- layouts and construction ---------------------------------------------

def test_layout_rejects_duplicates_and_bad_dims():
    with pytest.raises(ValueError):
        RegisterLayout.of(("A", 2), ("A", 3))
    with pytest.raises(ValueError):
        RegisterLayout.of(("A", 0))


def test_layout_lookup():
    lay = RegisterLayout.of(("A", 2), ("B", 3), ("C", 5))
    assert lay.dim == 30
    assert lay.dim_of(["C", "A"]) == 10
    assert lay.ordered(["C", "A"]) == ("A", "C")
    with pytest.raises(KeyError):
        lay.index("Z")


def test_pure_state_must_be_normalized():
    with pytest.raises(ValueError):
        PureState(Q, np.array([1.0, 1.0]))


def test_density_must_be_valid():
    with pytest.raises(ValueError):
        DensityOperator(Q, np.diag([0.5, 0.6]))
    with pytest.raises(ValueError):
        DensityOperator(Q, np.diag([1.5, -0.5]))
    with pytest.raises(ValueError):
        DensityOperator(Q, np.array([[0.5, 0.1], [0.2, 0.5]]))


# -- tensor and partial trace ---------------------------------------------

def test_tensor_basis_states():
    s = tensor(PureState.basis(Q, [0]), PureState.basis(QB, [1]))
    assert np.allclose(s.amplitudes, [0, 1, 0, 0])


def test_tensor_plus_plus():
    s = tensor(ket(Q, PLUS), ket(QB, PLUS))
    assert np.allclose(s.amplitudes, 0.5)


def test_tensor_with_trivial_register(rng):
    rho = random_density(Q, rng)
    one = DensityOperator(RegisterLayout.of(("T", 1)), np.ones((1, 1)))
    assert np.allclose(tensor(rho, one).matrix, rho.matrix)


def test_partial_trace_product():
    s = PureState.basis(AB, [0, 1])
    assert np.allclose(partial_trace(s, ["A"]).matrix, np.diag([1, 0]))


def test_partial_trace_bell():
    bell = ket(AB, np.array([1, 0, 0, 1]) / math.sqrt(2))
    assert np.allclose(partial_trace(bell, ["A"]).matrix, np.eye(2) / 2)
    assert np.allclose(partial_trace(bell.density(), ["B"]).matrix, np.eye(2) / 2)


@pytest.mark.parametrize("seed", range(5))
def test_purify_round_trip(seed):
    rng = np.random.default_rng(seed)
    rho = random_density(RegisterLayout.of(("A", 3)), rng)
    psi = purify(rho)
    assert np.allclose(partial_trace(psi, ["A"]).matrix, rho.matrix, atol=1e-9)


def test_purify_diagonal_is_canonical():
    psi = purify(DensityOperator(Q, np.diag([0.25, 0.75])))
    expected = np.zeros(4)
    expected[0], expected[3] = 0.5, math.sqrt(0.75)
    assert np.allclose(psi.amplitudes, expected)


def test_purify_pure_input_is_product():
    psi = purify(DensityOperator(Q, np.diag([1.0, 0.0])))
    assert np.allclose(np.abs(psi.amplitudes), [1, 0, 0, 0])


def test_purify_maximally_mixed_is_maximally_entangled():
    psi = purify(DensityOperator.maximally_mixed(Q))
    assert np.allclose(partial_trace(psi, ["R"]).matrix, np.eye(2) / 2)
    assert np.allclose(psi.amplitudes, np.array([1, 0, 0, 1]) / math.sqrt(2))


# -- distances --------------------------------------------------------------

def test_trace_distance_examples(rng):
    zero, one, plus = (ket(Q, v) for v in ([1, 0], [0, 1], PLUS))
    rho = random_density(Q, rng)
    assert trace_distance(rho, rho) == pytest.approx(0, abs=1e-12)
    assert trace_distance(zero, one) == pytest.approx(1)
    assert trace_distance(zero.density(), plus.density()) == pytest.approx(0.7071068, abs=1e-6)
    assert trace_distance(zero, plus) == pytest.approx(0.7071068, abs=1e-6)


def test_fidelity_examples(rng):
    zero, one, plus = (ket(Q, v) for v in ([1, 0], [0, 1], PLUS))
    rho = random_density(Q, rng)
    assert fidelity(rho, rho) == pytest.approx(1, abs=1e-9)
    assert fidelity(zero, one) == pytest.approx(0, abs=1e-12)
    assert fidelity(zero, plus) == pytest.approx(0.7071068, abs=1e-6)


def test_trace_distance_metric(rng):
    lay = RegisterLayout.of(("A", 3))
    for _ in range(30):
        r, s, t = (random_density(lay, rng) for _ in range(3))
        assert trace_distance(r, s) == pytest.approx(trace_distance(s, r), abs=1e-12)
        assert trace_distance(r, s) >= 0
        assert trace_distance(r, t) <= trace_distance(r, s) + trace_distance(s, t) + 1e-9


def test_trace_distance_contracts_under_measurement(rng):
    lay = RegisterLayout.of(("A", 2), ("B", 3))
    for _ in range(30):
        r, s = random_density(lay, rng), random_density(lay, rng)
        v = random_unitary(6, rng)[:, :3]
        m = Measurement(("B",), (("0", v[:3]), ("1", v[3:])))
        assert trace_distance(measurement_channel(r, m), measurement_channel(s, m)) <= trace_distance(r, s) + 1e-9


def test_trace_distance_unitary_invariance(rng):
    lay = RegisterLayout.of(("A", 2), ("B", 2))
    for _ in range(20):
        r, s = random_density(lay, rng), random_density(lay, rng)
        u = random_unitary(4, rng)
        ur, us = apply_unitary(r, u, ["A", "B"]), apply_unitary(s, u, ["A", "B"])
        assert trace_distance(ur, us) == pytest.approx(trace_distance(r, s), abs=1e-9)


# -- Uhlmann ----------------------------------------------------------------

def test_uhlmann_identical_states(rng):
    psi = random_pure_state(AB, rng)
    u = uhlmann_rotation(psi, psi, ["B"])
    assert rotation_overlap(psi, psi, u, ["B"]) == pytest.approx(1, abs=1e-9)


def test_uhlmann_exact_case(rng):
    psi0 = random_pure_state(AB, rng)
    psi1 = apply_unitary(psi0, random_unitary(2, rng), ["B"])
    u = uhlmann_rotation(psi0, psi1, ["B"])
    assert rotation_overlap(psi0, psi1, u, ["B"]) == pytest.approx(1, abs=1e-9)


@pytest.mark.parametrize("dims", [(2, 2), (3, 3), (2, 4), (4, 4), (4, 2)])
def test_uhlmann_achieves_marginal_fidelity(dims):
    rng = np.random.default_rng(sum(dims))
    lay = RegisterLayout.of(("A", dims[0]), ("B", dims[1]))
    for _ in range(25):
        psi0, psi1 = random_pure_state(lay, rng), random_pure_state(lay, rng)
        u = uhlmann_rotation(psi0, psi1, ["B"])
        assert np.allclose(u @ u.conj().T, np.eye(dims[1]), atol=1e-10)
        target = fidelity(partial_trace(psi0, ["A"]), partial_trace(psi1, ["A"]))
        assert rotation_overlap(psi0, psi1, u, ["B"]) == pytest.approx(target, abs=1e-9)


def test_uhlmann_multi_register_cut(rng):
    lay = RegisterLayout.of(("A", 2), ("B", 2), ("C", 3))
    psi0, psi1 = random_pure_state(lay, rng), random_pure_state(lay, rng)
    u = uhlmann_rotation(psi0, psi1, ["C", "A"])
    target = fidelity(partial_trace(psi0, ["B"]), partial_trace(psi1, ["B"]))
    assert rotation_overlap(psi0, psi1, u, ["A", "C"]) == pytest.approx(target, abs=1e-9)


def test_uhlmann_rejects_trivial_cut(rng):
    psi = random_pure_state(AB, rng)
    with pytest.raises(ValueError):
        uhlmann_rotation(psi, psi, ["A", "B"])


def test_conditioned_uhlmann_single_transcript(rng):
    psi0, psi1 = random_pure_state(AB, rng), random_pure_state(AB, rng)
    block = conditioned_uhlmann([Branch("t", 1.0, psi0)], [Branch("t", 1.0, psi1)], ["B"])
    assert np.allclose(block["t"], uhlmann_rotation(psi0, psi1, ["B"]))


def test_conditioned_uhlmann_identical_families(rng):
    fam = [Branch(t, p, random_pure_state(AB, rng)) for t, p in (("a", 0.3), ("b", 0.7))]
    rot = conditioned_uhlmann(fam, fam, ["B"])
    for br in fam:
        assert rotation_overlap(br.state, br.state, rot[br.label], ["B"]) == pytest.approx(1, abs=1e-9)


def test_conditioned_uhlmann_label_mismatch(rng):
    psi = random_pure_state(AB, rng)
    with pytest.raises(ValueError):
        conditioned_uhlmann([Branch("a", 1.0, psi)], [Branch("b", 1.0, psi)], ["B"])


@pytest.mark.parametrize("seed", range(10))
def test_conditioned_uhlmann_distance_bound(seed):
    """Rotated family is within sqrt(2 eps) of the target, eps the distance on the unrotated side."""
    rng = np.random.default_rng(seed)
    lay = RegisterLayout.of(("A", 2), ("B", 3))
    base = [random_pure_state(lay, rng) for _ in range(2)]
    p0 = rng.dirichlet([1, 1])
    # second family: perturb weights and states slightly
    p1 = 0.9 * p0 + 0.1 * rng.dirichlet([1, 1])
    fam0 = [Branch(t, p, s) for t, p, s in zip("ab", p0, base)]
    fam1 = []
    for t, p, s in zip("ab", p1, base):
        v = s.amplitudes + 0.2 * (rng.normal(size=6) + 1j * rng.normal(size=6))
        fam1.append(Branch(t, p, PureState.normalized(lay, v)))
    eps = cq_distance(fam0, fam1, keep=["A"])
    rot = conditioned_uhlmann(fam0, fam1, ["B"])
    moved = [Branch(b.label, b.prob, rot.apply(b.label, b.state)) for b in fam0]
    assert cq_distance(moved, fam1) <= math.sqrt(2 * eps) + 1e-9


def test_cq_state_blocks(rng):
    fam = [Branch("a", 0.25, random_pure_state(AB, rng)), Branch("b", 0.75, random_pure_state(AB, rng))]
    rho = cq_state(fam, keep=["A"])
    assert rho.layout.labels == ("T", "A")
    assert np.trace(rho.matrix).real == pytest.approx(1)
    assert np.allclose(rho.matrix[:2, 2:], 0)


def test_cq_distance_matches_dense(rng):
    f0 = [Branch("a", 0.4, random_pure_state(AB, rng)), Branch("b", 0.6, random_pure_state(AB, rng))]
    f1 = [Branch("a", 0.5, random_pure_state(AB, rng)), Branch("b", 0.5, random_pure_state(AB, rng))]
    dense = trace_distance(cq_state(f0, keep=["A"]), cq_state(f1, keep=["A"]))
    assert cq_distance(f0, f1, keep=["A"]) == pytest.approx(dense, abs=1e-12)


# -- measurements -----------------------------------------------------------

def test_measure_plus():
    out = measure(ket(Q, PLUS), Measurement.computational("A", 2))
    assert {o.label: round(o.probability, 12) for o in out} == {"0": 0.5, "1": 0.5}


def test_measure_identity_single_outcome(rng):
    psi = random_pure_state(Q, rng)
    (o,) = measure(psi, Measurement(("A",), (("only", np.eye(2)),)))
    assert o.probability == pytest.approx(1)
    assert np.allclose(o.state.amplitudes, psi.amplitudes)


def test_measure_non_projective():
    m0 = np.array([[math.sqrt(0.7), 0], [0, math.sqrt(0.2)]])
    m1 = np.array([[math.sqrt(0.3), 0], [0, math.sqrt(0.8)]])
    out = measure(ket(Q, [1, 0]), Measurement(("A",), (("0", m0), ("1", m1))))
    assert [o.probability for o in out] == pytest.approx([0.7, 0.3])


def test_measurement_rejects_incomplete():
    with pytest.raises(ValueError):
        Measurement(("A",), (("0", np.diag([1, 0])),))


def _cq(eps: float) -> DensityOperator:
    lay = RegisterLayout.of(("X", 2), ("B", 2))
    mat = np.zeros((4, 4), dtype=complex)
    for x in range(2):
        phi = math.sqrt(1 - eps) * np.eye(2)[x] + math.sqrt(eps) * np.eye(2)[1 - x]
        mat[2 * x:2 * x + 2, 2 * x:2 * x + 2] = 0.5 * np.outer(phi, phi)
    return DensityOperator(lay, mat)


def test_gentle_perfect_detector():
    rho = _cq(0.0)
    pr, post = gentle_post_state(rho, Measurement.computational("B", 2), "X")
    assert pr == pytest.approx(1)
    assert np.allclose(post.matrix, rho.matrix)


def test_gentle_uninformative_detector():
    rho = _cq(0.0)
    half = np.eye(2) / math.sqrt(2)
    pr, _ = gentle_post_state(rho, Measurement(("B",), (("0", half), ("1", half))), "X")
    assert pr == pytest.approx(0.5)


@pytest.mark.parametrize("eps", [0.01, 0.04, 0.09, 0.2])
def test_gentle_measurement_bound(eps):
    rho = _cq(eps)
    m = Measurement.computational("B", 2)
    assert detection_error(rho, m, "X") == pytest.approx(eps)
    pr, post = gentle_post_state(rho, m, "X")
    assert pr >= 1 - eps - 1e-12
    # frozen: dephasing a qubit with coherence sqrt(eps(1-eps)) moves it by exactly that much
    assert trace_distance(post, rho) == pytest.approx(math.sqrt(eps * (1 - eps)), abs=1e-12)
    assert trace_distance(post, rho) <= math.sqrt(eps) + eps


def test_gentle_rejects_non_classical():
    bell = ket(AB, np.array([1, 0, 0, 1]) / math.sqrt(2)).density()
    with pytest.raises(ValueError):
        gentle_post_state(bell.relabel({"A": "X"}), Measurement.computational("B", 2), "X")
