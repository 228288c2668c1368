import math

import numpy as np
import pytest

from conftest import random_pair, random_plan, random_trace_one
from doublestate.decompose import ProcessMixture, decompose_processes, mixture_expectation
from doublestate.ensemble import (
    CHUNK_SIZE,
    convergence_study,
    derive_seed,
    log_schedule,
    loglog_slope,
    sample_counts,
    sample_ensemble,
)
from doublestate.errors import EmptyMixture, NotHermitian
from doublestate.linalg import random_hermitian


@pytest.fixture
def two_term(rng):
    psi, phi = random_pair(3, rng, min_overlap=0.2)
    return ProcessMixture.from_terms([(0.5, psi, phi), (0.5, phi, psi)]), random_hermitian(3, rng)


def test_single_term_exact(rng):
    psi, phi = random_pair(3, rng)
    A = random_hermitian(3, rng)
    mix = ProcessMixture.from_terms([(1, psi, phi)])
    est = sample_ensemble(mix, A, 1000, seed=3)
    wv = mix.terms[0].weak_value(A)
    assert est.mean == wv
    assert est.std_error == 0
    assert est.n_samples == 1000


def test_two_term_within_five_sigma(two_term):
    mix, A = two_term
    est = sample_ensemble(mix, A, 100_000, seed=11)
    assert abs(est.mean - mixture_expectation(mix, A)) < 5 * est.std_error


def test_real_average_has_vanishing_imaginary_part(two_term):
    mix, A = two_term
    assert abs(mixture_expectation(mix, A).imag) < 1e-12
    est = sample_ensemble(mix, A, 100_000, seed=5)
    assert abs(est.mean.imag) < 5 * est.std_error


def test_determinism(two_term):
    mix, A = two_term
    a = sample_ensemble(mix, A, 50_000, seed=42)
    b = sample_ensemble(mix, A, 50_000, seed=42)
    assert a == b
    assert sample_ensemble(mix, A, 50_000, seed=43) != a


def test_independent_of_worker_count(rng):
    W = random_trace_one(4, rng)
    mix = decompose_processes(W)
    A = random_hermitian(4, rng)
    n = 3 * CHUNK_SIZE + 17
    serial = sample_ensemble(mix, A, n, seed=9, workers=1)
    parallel = sample_ensemble(mix, A, n, seed=9, workers=4)
    assert serial == parallel


def test_counts_follow_probabilities():
    p = np.array([0.1, 0.0, 0.6, 0.3])
    counts = sample_counts(p, 200_000, seed=1)
    assert counts.sum() == 200_000
    assert counts[1] == 0
    sigma = np.sqrt(200_000 * p * (1 - p))
    assert np.all(np.abs(counts - 200_000 * p) < 5 * sigma + 1e-9)


def test_negative_and_large_seeds(two_term):
    mix, A = two_term
    assert sample_ensemble(mix, A, 100, seed=-1) == sample_ensemble(mix, A, 100, seed=-1)
    sample_ensemble(mix, A, 100, seed=2**63 + 5)


def test_errors(rng):
    with pytest.raises(NotHermitian):
        psi, phi = random_pair(2, rng)
        sample_ensemble(ProcessMixture.from_terms([(1, psi, phi)]), [[0, 1], [0, 0]], 10, 0)

    class Empty:
        terms = ()
        dim = 2

    with pytest.raises(EmptyMixture):
        sample_ensemble(Empty(), np.eye(2), 10, 0)


def test_unbiased_over_seeds(rng):
    W = random_trace_one(3, rng)
    mix = decompose_processes(W)
    A = random_hermitian(3, rng)
    exact = mixture_expectation(mix, A)
    means = np.array([sample_ensemble(mix, A, 1000, derive_seed(77, k)).mean for k in range(200)])
    grand = means.mean()
    se_re = means.real.std(ddof=1) / math.sqrt(len(means))
    se_im = means.imag.std(ddof=1) / math.sqrt(len(means))
    assert abs(grand.real - exact.real) < 4 * se_re
    assert abs(grand.imag - exact.imag) < 4 * se_im


def test_convergence_schedule(rng):
    mix = decompose_processes(random_trace_one(3, rng))
    A = random_hermitian(3, rng)
    schedule = log_schedule(100, 100_000, 40)
    ests = convergence_study(mix, A, schedule, seed=2)
    assert [e.n_samples for e in ests] == schedule
    assert len({e.seed for e in ests}) == len(schedule)
    # slope scatter over seeds is about 0.05 with 40 points
    slope = loglog_slope(ests, mixture_expectation(mix, A))
    assert -0.7 <= slope <= -0.3


def test_convergence_single_term(rng):
    psi, phi = random_pair(2, rng)
    mix = ProcessMixture.from_terms([(1, psi, phi)])
    A = random_hermitian(2, rng)
    ests = convergence_study(mix, A, [10, 100, 1000], seed=0)
    exact = mixture_expectation(mix, A)
    assert all(e.mean == exact for e in ests)
    assert math.isnan(loglog_slope(ests, exact))


def test_two_decompositions_same_limit(rng):
    W = random_trace_one(3, rng)
    A = random_hermitian(3, rng)
    exact = np.trace(W.W @ A)
    for mix in (decompose_processes(W), decompose_processes(W, random_plan(W, rng))):
        est = sample_ensemble(mix, A, 200_000, seed=4)
        assert abs(est.mean - exact) < 5 * est.std_error


def test_schedule_validation(two_term):
    mix, A = two_term
    with pytest.raises(ValueError):
        convergence_study(mix, A, [100, 100], seed=0)


def test_log_schedule():
    s = log_schedule(100, 100_000, 13)
    assert s[0] == 100 and s[-1] == 100_000
    assert all(b > a for a, b in zip(s, s[1:]))
