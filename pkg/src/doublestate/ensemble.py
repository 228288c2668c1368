"""Monte Carlo sampling of process mixtures.

Each draw picks a process with its mixture probability and records the
exact weak value of the observable in that process. Draws are generated in
fixed-size chunks; chunk ``k`` uses an independent Philox substream keyed by
``(seed, k)`` and contributes only integer per-process counts, so the result
is bit-identical for any number of workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike

from .decompose import ProcessMixture
from .errors import EmptyMixture, InputError
from .linalg import require_hermitian

CHUNK_SIZE = 1 << 16
_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class MonteCarloEstimate:
    """Sample mean of weak values over ``n_samples`` sampled processes.

    ``std_error`` is the larger of the real and imaginary standard errors;
    it is ``inf`` when ``n_samples == 1``.
    """

    mean: complex
    std_error: float
    n_samples: int
    seed: int
    counts: tuple[int, ...] = ()


def _generator(seed: int, chunk: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed & _SEED_MASK, spawn_key=(chunk,))
    return np.random.Generator(np.random.Philox(ss))


def _chunk_counts(cdf: np.ndarray, seed: int, chunk: int, size: int) -> np.ndarray:
    u = _generator(seed, chunk).random(size)
    idx = np.searchsorted(cdf, u, side="right")
    np.minimum(idx, len(cdf) - 1, out=idx)
    return np.bincount(idx, minlength=len(cdf))


def sample_counts(probabilities: ArrayLike, n: int, seed: int, workers: int = 1) -> np.ndarray:
    """How often each index is drawn in ``n`` inverse-CDF draws."""
    p = np.asarray(probabilities, dtype=float)
    cdf = np.cumsum(p) / p.sum()
    cdf[-1] = 1.0
    sizes = [CHUNK_SIZE] * (n // CHUNK_SIZE)
    if n % CHUNK_SIZE:
        sizes.append(n % CHUNK_SIZE)
    jobs = list(enumerate(sizes))
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: _chunk_counts(cdf, seed, *job), jobs))
    else:
        parts = [_chunk_counts(cdf, seed, k, size) for k, size in jobs]
    return np.sum(parts, axis=0, dtype=np.int64)


def _estimate(values: np.ndarray, counts: np.ndarray, n: int, seed: int) -> MonteCarloEstimate:
    weights = counts / n
    mean = complex(np.sum(weights * values))
    if n < 2:
        se = math.inf
    else:
        var_re = np.sum(counts * (values.real - mean.real) ** 2) / (n - 1)
        var_im = np.sum(counts * (values.imag - mean.imag) ** 2) / (n - 1)
        se = float(math.sqrt(max(var_re, var_im) / n))
    return MonteCarloEstimate(mean, se, n, seed, tuple(int(c) for c in counts))


def term_weak_values(mixture: ProcessMixture, A: ArrayLike) -> np.ndarray:
    a = require_hermitian(A, mixture.dim)
    return np.array([t.weak_value(a) for t in mixture.terms], dtype=np.complex128)


def sample_ensemble(
    mixture: ProcessMixture,
    A: ArrayLike,
    n: int,
    seed: int,
    workers: int = 1,
) -> MonteCarloEstimate:
    """Average the weak value of ``A`` over ``n`` processes drawn from ``mixture``.

    The mean converges to ``mixture_expectation(mixture, A)``.

    Raises
    ------
    NotHermitian
    EmptyMixture
    """
    if not getattr(mixture, "terms", None):
        raise EmptyMixture("cannot sample an empty mixture")
    n = int(n)
    if n < 1:
        raise InputError(f"number of samples must be positive, got {n}")
    values = term_weak_values(mixture, A)
    counts = sample_counts(mixture.probabilities, n, seed, workers)
    return _estimate(values, counts, n, int(seed))


def derive_seed(seed: int, index: int) -> int:
    """Independent 64-bit seed for the ``index``-th run of a study."""
    ss = np.random.SeedSequence([seed & _SEED_MASK, index])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def convergence_study(
    mixture: ProcessMixture,
    A: ArrayLike,
    n_schedule: Sequence[int],
    seed: int,
    workers: int = 1,
) -> list[MonteCarloEstimate]:
    """One independent estimate per sample size in the strictly increasing ``n_schedule``."""
    ns = [int(n) for n in n_schedule]
    if not ns or any(b <= a for a, b in zip(ns, ns[1:])):
        raise InputError("n_schedule must be non-empty and strictly increasing")
    return [sample_ensemble(mixture, A, n, derive_seed(seed, k), workers) for k, n in enumerate(ns)]


def loglog_slope(estimates: Sequence[MonteCarloEstimate], exact: complex) -> float:
    """Least-squares slope of log|mean - exact| against log n.

    Points with zero error (an exact hit, which discrete sampling can
    produce) have no logarithm and are left out. Returns ``nan`` when fewer
    than two points remain, e.g. for a single-process mixture.
    """
    n = np.array([e.n_samples for e in estimates], dtype=float)
    err = np.array([abs(e.mean - exact) for e in estimates])
    keep = err > 0
    n, err = n[keep], err[keep]
    if len(n) < 2:
        return math.nan
    slope, _ = np.polyfit(np.log(n), np.log(err), 1)
    return float(slope)


def log_schedule(n_min: int, n_max: int, points: int) -> list[int]:
    """Roughly log-spaced strictly increasing integer schedule."""
    ns = np.unique(np.round(np.geomspace(n_min, n_max, points)).astype(int))
    return [int(x) for x in ns]
