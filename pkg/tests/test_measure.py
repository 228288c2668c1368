import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_complex, random_pair, random_trace_one
from doublestate.errors import (
    DimensionMismatch,
    IncompleteBasis,
    InvalidDensity,
    InvalidProjector,
    NotHermitian,
    NotTraceOne,
    OrthogonalPair,
)
from doublestate.linalg import (
    normalize,
    orthogonal_complement_basis,
    projector_from_state,
    random_hermitian,
    random_state,
    random_unitary,
)
from doublestate.measure import (
    DoubleState,
    affine_combine,
    born_measure,
    build_double_state,
    closed_form_lambda,
    complex_measure,
    contextual_average,
    expectation_single,
    is_pure_process,
    lambda_expectation,
    verify_consistency,
    weak_value,
)

S2 = 1 / np.sqrt(2)
Z = np.diag([1.0, -1.0])
Y = np.array([[0, -1j], [1j, 0]])
seeds = st.integers(0, 2**32 - 1)


# born measure / single states -------------------------------------------------

def test_born_pure_state(rng):
    psi = random_state(3, rng)
    rho = projector_from_state(psi)
    assert born_measure(rho, rho) == pytest.approx(1.0, abs=1e-12)
    for u in orthogonal_complement_basis(psi):
        assert born_measure(rho, projector_from_state(u)) == pytest.approx(0.0, abs=1e-12)


def test_born_maximally_mixed():
    assert born_measure(np.eye(2) / 2, projector_from_state([S2, 1j * S2])) == pytest.approx(0.5)


def test_born_rejects_bad_inputs():
    with pytest.raises(InvalidDensity):
        born_measure(np.diag([1.5, -0.5]), np.diag([1, 0]))
    with pytest.raises(InvalidProjector):
        born_measure(np.eye(2) / 2, np.diag([2, 0]))


def test_expectation_single_examples():
    assert expectation_single([1, 0], Z) == pytest.approx(1.0)
    assert expectation_single([S2, S2], Z) == pytest.approx(0.0, abs=1e-15)


def test_expectation_single_two_paths(rng):
    psi = random_state(5, rng)
    A = random_hermitian(5, rng)
    direct = np.vdot(psi.amplitudes, A @ psi.amplitudes).real
    assert abs(expectation_single(psi, A) - direct) < 1e-9


def test_expectation_single_non_hermitian():
    with pytest.raises(NotHermitian):
        expectation_single([1, 0], [[0, 1], [0, 0]])


# build_double_state -----------------------------------------------------------

def test_build_single_state_limit():
    W = build_double_state([1, 0], [1, 0], 0.3 + 2j)
    np.testing.assert_array_equal(W.W, np.diag([1, 0]))


def test_build_orthogonal_pair():
    with pytest.raises(OrthogonalPair):
        build_double_state([1, 0], [0, 1], 0.5)


def test_build_half_is_hermitian():
    W = build_double_state([1, 0], [S2, S2], 0.5)
    assert np.max(np.abs(W.W - W.W.conj().T)) < 1e-12
    assert abs(np.trace(W.W) - 1) < 1e-12


def test_build_matches_closed_form(rng):
    psi, phi = random_pair(4, rng)
    a = random_complex(rng)
    ov = np.vdot(phi.amplitudes, psi.amplitudes)
    expected = a * np.outer(psi.amplitudes, phi.amplitudes.conj()) / ov + (1 - a) * np.outer(
        phi.amplitudes, psi.amplitudes.conj()
    ) / np.conj(ov)
    W = build_double_state(psi, phi, a)
    assert np.max(np.abs(W.W - expected)) < 1e-12
    assert W.provenance.alpha == a


@given(seed=seeds, d=st.integers(2, 8))
@settings(max_examples=50)
def test_build_phase_invariance(seed, d):
    rng = np.random.default_rng(seed)
    psi, phi = random_pair(d, rng, min_overlap=0.05)
    a = random_complex(rng)
    t, c = rng.uniform(0, 2 * np.pi, 2)
    W1 = build_double_state(psi, phi, a).W
    W2 = build_double_state(np.exp(1j * t) * psi.amplitudes, np.exp(1j * c) * phi.amplitudes, a).W
    assert np.max(np.abs(W1 - W2)) < 1e-12 * max(1.0, np.max(np.abs(W1)))


@given(seed=seeds, d=st.integers(2, 8))
@settings(max_examples=50)
def test_half_alpha_hermitian(seed, d):
    rng = np.random.default_rng(seed)
    psi, phi = random_pair(d, rng, min_overlap=0.05)
    W = build_double_state(psi, phi, 0.5).W
    assert np.max(np.abs(W - W.conj().T)) < 1e-10


def test_double_state_requires_unit_trace():
    with pytest.raises(NotTraceOne):
        DoubleState(np.eye(2))
    assert DoubleState.from_matrix(np.eye(2), rescale=True).W[0, 0] == 0.5


def test_real_and_imag_parts(rng):
    W = random_trace_one(3, rng)
    np.testing.assert_allclose(W.real_part + 1j * W.imag_part, W.W, atol=1e-14)
    for H in (W.real_part, W.imag_part):
        np.testing.assert_allclose(H, H.conj().T, atol=1e-14)


# complex measure --------------------------------------------------------------

def test_complex_measure_identity_and_null(rng):
    W = random_trace_one(4, rng)
    assert abs(complex_measure(W, np.eye(4)) - 1) < 1e-12
    assert complex_measure(W, np.zeros((4, 4))) == 0


def test_complex_measure_consistency(rng):
    psi, phi = random_pair(3, rng)
    W = build_double_state(psi, phi, 0.3 - 0.4j)
    for v in (psi, phi):
        assert abs(complex_measure(W, projector_from_state(v)) - 1) < 1e-12
        for u in orthogonal_complement_basis(v):
            assert abs(complex_measure(W, projector_from_state(u))) < 1e-12


def test_complex_measure_errors(rng):
    W = random_trace_one(3, rng)
    with pytest.raises(DimensionMismatch):
        complex_measure(W, np.eye(2))
    with pytest.raises(InvalidProjector):
        complex_measure(W, 2 * np.eye(3))


@given(seed=seeds, d=st.integers(2, 8))
@settings(max_examples=50)
def test_partial_additivity(seed, d):
    rng = np.random.default_rng(seed)
    W = random_trace_one(d, rng)
    U = random_unitary(d, rng)
    cuts = np.sort(rng.choice(np.arange(1, d), size=rng.integers(0, d), replace=False))
    blocks = np.split(np.arange(d), cuts)
    projectors = [U[:, b] @ U[:, b].conj().T for b in blocks]
    total = sum(complex_measure(W, P) for P in projectors)
    assert abs(complex_measure(W, sum(projectors)) - total) < 1e-9


# lambda / weak value ----------------------------------------------------------

def test_weak_value_examples():
    assert weak_value([1, 0], [S2, S2], Z) == pytest.approx(1.0)
    assert abs(weak_value([1, 0], [S2, S2], Y) - 1j) < 1e-15


def test_weak_value_same_state(rng):
    psi = random_state(3, rng)
    A = random_hermitian(3, rng)
    assert abs(weak_value(psi, psi, A) - np.vdot(psi.amplitudes, A @ psi.amplitudes)) < 1e-12


@given(seed=seeds)
@settings(max_examples=30)
def test_weak_value_rescaling_invariance(seed):
    rng = np.random.default_rng(seed)
    psi, phi = random_pair(3, rng, min_overlap=0.05)
    A = random_hermitian(3, rng)
    c1, c2 = random_complex(rng) + 0.1, random_complex(rng) + 0.1
    w1 = weak_value(psi, phi, A)
    w2 = weak_value(c1 * psi.amplitudes, c2 * phi.amplitudes, A)
    assert abs(w1 - w2) < 1e-10 * max(1, abs(w1))


def test_weak_value_orthogonal():
    with pytest.raises(OrthogonalPair):
        weak_value([1, 0], [0, 1], Z)


def test_lambda_alpha_one_is_weak_value(rng):
    psi, phi = random_pair(4, rng)
    A = random_hermitian(4, rng)
    W = build_double_state(psi, phi, 1)
    assert abs(lambda_expectation(W, A) - weak_value(psi, phi, A)) < 1e-10


def test_lambda_alpha_half_is_real(rng):
    psi, phi = random_pair(4, rng)
    A = random_hermitian(4, rng)
    assert abs(lambda_expectation(build_double_state(psi, phi, 0.5), A).imag) < 1e-10


def test_lambda_single_state(rng):
    psi = random_state(3, rng)
    A = random_hermitian(3, rng)
    lam = lambda_expectation(build_double_state(psi, psi, 0.7j), A)
    assert abs(lam - np.vdot(psi.amplitudes, A @ psi.amplitudes)) < 1e-12


def test_lambda_rejects_non_hermitian(rng):
    W = random_trace_one(2, rng)
    with pytest.raises(NotHermitian):
        lambda_expectation(W, [[0, 1], [0, 0]])


@given(seed=seeds, d=st.integers(2, 8))
@settings(max_examples=50)
def test_lambda_paths_and_closed_form(seed, d):
    rng = np.random.default_rng(seed)
    psi, phi = random_pair(d, rng, min_overlap=0.05)
    a = random_complex(rng)
    A = random_hermitian(d, rng)
    W = build_double_state(psi, phi, a)
    lam = lambda_expectation(W, A)
    assert abs(lam - np.trace(W.W @ A)) < 1e-9 * max(1, abs(lam))
    assert abs(lam - closed_form_lambda(psi, phi, a, A)) < 1e-9 * max(1, abs(lam))


@given(seed=seeds, d=st.integers(2, 8))
@settings(max_examples=50)
def test_sum_rule(seed, d):
    rng = np.random.default_rng(seed)
    psi, phi = random_pair(d, rng, min_overlap=0.05)
    W = build_double_state(psi, phi, random_complex(rng))
    A, B = random_hermitian(d, rng), random_hermitian(d, rng)
    assert np.max(np.abs(A @ B - B @ A)) > 1e-3
    defect = lambda_expectation(W, A + B) - lambda_expectation(W, A) - lambda_expectation(W, B)
    assert abs(defect) < 1e-9 * max(1, np.max(np.abs(W.W)))


# contextual average -----------------------------------------------------------

def _basis(U):
    return [U[:, k] for k in range(U.shape[1])]


def test_contextual_identity_observable(rng):
    psi = random_state(3, rng)
    assert abs(contextual_average(psi, _basis(np.eye(3)), np.eye(3), 0.2 + 1j) - 1) < 1e-12


def test_contextual_hadamard_basis():
    H = np.array([[S2, S2], [S2, -S2]])
    assert abs(contextual_average([1, 0], _basis(H), Z, 0.4 - 0.9j) - 1) < 1e-12


def test_contextual_basis_independent(rng):
    psi = random_state(4, rng)
    A = random_hermitian(4, rng)
    a = 0.3 + 0.7j
    v1 = contextual_average(psi, _basis(random_unitary(4, rng)), A, a)
    v2 = contextual_average(psi, _basis(random_unitary(4, rng)), A, a)
    assert abs(v1 - v2) < 1e-8
    assert abs(v1 - np.vdot(psi.amplitudes, A @ psi.amplitudes)) < 1e-8


def test_contextual_basis_containing_state(rng):
    psi = random_state(3, rng)
    basis = [psi] + orthogonal_complement_basis(psi)
    A = random_hermitian(3, rng)
    got = contextual_average(psi, basis, A, 2 - 3j)
    assert abs(got - np.vdot(psi.amplitudes, A @ psi.amplitudes)) < 1e-8


def test_contextual_average_over_pre(rng):
    phi = random_state(4, rng)
    A = random_hermitian(4, rng)
    got = contextual_average(phi, _basis(random_unitary(4, rng)), A, 0.1 + 0.2j, vary="pre")
    assert abs(got - np.vdot(phi.amplitudes, A @ phi.amplitudes)) < 1e-8


def test_contextual_matches_weighted_lambda(rng):
    """The pole-free summand agrees with |<psi|phi>|^2 lambda(A) where both are defined."""
    psi = random_state(3, rng)
    A = random_hermitian(3, rng)
    a = 0.6 - 0.2j
    basis = _basis(random_unitary(3, rng))
    naive = sum(
        abs(np.vdot(psi.amplitudes, b)) ** 2 * lambda_expectation(build_double_state(psi, b, a), A)
        for b in basis
    )
    assert abs(naive - contextual_average(psi, basis, A, a)) < 1e-10


def test_contextual_incomplete_basis(rng):
    with pytest.raises(IncompleteBasis):
        contextual_average([1, 0, 0], [[1, 0, 0], [0, 1, 0]], np.eye(3), 0.5)
    with pytest.raises(IncompleteBasis):
        contextual_average([1, 0], [[1, 0], [S2, S2]], np.eye(2), 0.5)


# affine structure / purity ------------------------------------------------------

def test_affine_endpoints(rng):
    W1, W2 = random_trace_one(3, rng), random_trace_one(3, rng)
    np.testing.assert_allclose(affine_combine(W1, W2, 1).W, W1.W)
    np.testing.assert_allclose(affine_combine(W1, W2, 0).W, W2.W)


def test_affine_complex_weight_keeps_trace(rng):
    W = affine_combine(random_trace_one(4, rng), random_trace_one(4, rng), 2 + 1j)
    assert abs(np.trace(W.W) - 1) < 1e-10
    assert W.provenance is None


def test_affine_dimension_mismatch(rng):
    with pytest.raises(DimensionMismatch):
        affine_combine(random_trace_one(2, rng), random_trace_one(3, rng), 0.5)


@given(seed=seeds, d=st.integers(2, 6))
@settings(max_examples=40)
def test_affine_property(seed, d):
    rng = np.random.default_rng(seed)
    W1, W2 = random_trace_one(d, rng), random_trace_one(d, rng)
    b = random_complex(rng)
    P = projector_from_state(random_state(d, rng))
    lhs = complex_measure(affine_combine(W1, W2, b), P)
    rhs = b * complex_measure(W1, P) + (1 - b) * complex_measure(W2, P)
    assert abs(lhs - rhs) < 1e-10 * max(1, abs(b))


def test_pure_process_examples(rng):
    psi, phi = random_pair(3, rng, min_overlap=0.1)
    assert is_pure_process(build_double_state(psi, phi, 1))
    assert not is_pure_process(build_double_state(psi, phi, 0.5))
    assert is_pure_process(DoubleState(projector_from_state(psi)))


# verify_consistency -------------------------------------------------------------

def test_verify_constructed(rng):
    for d in (2, 3, 5):
        psi, phi = random_pair(d, rng)
        rep = verify_consistency(build_double_state(psi, phi, random_complex(rng)), psi, phi)
        assert rep.passed, rep.failures
        assert len(rep.checks) == 2 * (d + 1)


def test_verify_single_state_fails_phi(rng):
    psi, phi = random_pair(3, rng, min_overlap=0.1)
    rep = verify_consistency(DoubleState(projector_from_state(psi)), psi, phi)
    assert not rep.passed
    assert all(c.name.startswith(("mu(P_phi", "max|W on phi")) for c in rep.failures)


def test_verify_random_w_fails(rng):
    fails = 0
    for _ in range(20):
        psi, phi = random_pair(3, rng)
        fails += not verify_consistency(random_trace_one(3, rng), psi, phi).passed
    assert fails == 20
