"""Dense complex linear algebra in small dimension.

Operators are plain ``complex128`` numpy arrays of shape ``(d, d)``; state
vectors are wrapped in :class:`StateVector` so that normalization is checked
once at construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import (
    DimensionMismatch,
    DimensionTooLarge,
    InputError,
    NonFinite,
    NotHermitian,
    ZeroVector,
)

#: Largest supported Hilbert space dimension. Dense routines are O(d^3).
MAX_DIM = 64

ZERO_NORM = 1e-14
HERMITIAN_TOL = 1e-10
DEGENERACY_TOL = 1e-9
NORM_TOL = 1e-10

ComplexArray = NDArray[np.complex128]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


def _check_dim(d: int) -> None:
    if d < 2:
        raise InputError(f"dimension must be at least 2, got {d}")
    if d > MAX_DIM:
        raise DimensionTooLarge(f"dimension {d} exceeds MAX_DIM={MAX_DIM}")


@dataclass(frozen=True, eq=False)
class StateVector:
    """A unit-norm vector in C^d.

    Build one with :func:`normalize`; the constructor only validates.
    The global phase supplied by the caller is preserved.
    """

    amplitudes: ComplexArray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=np.complex128)
        if a.ndim != 1:
            raise InputError("state amplitudes must be one-dimensional")
        if not np.all(np.isfinite(a)):
            raise NonFinite("state amplitudes must be finite")
        _check_dim(a.shape[0])
        norm = np.linalg.norm(a)
        if abs(norm - 1.0) > NORM_TOL:
            raise InputError(f"state is not normalized (norm={norm!r}); use normalize()")
        object.__setattr__(self, "amplitudes", _frozen(a))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.amplitudes
        return self.amplitudes.astype(dtype)

    def __len__(self) -> int:
        return self.dim

    def __repr__(self) -> str:
        return f"StateVector({np.array2string(self.amplitudes, precision=6)})"


StateLike = Union[StateVector, ArrayLike]


def normalize(v: ArrayLike) -> StateVector:
    """Scale ``v`` to unit norm without touching its phase."""
    a = np.asarray(v, dtype=np.complex128)
    if a.ndim != 1:
        raise InputError("expected a one-dimensional vector")
    if not np.all(np.isfinite(a)):
        raise NonFinite("vector entries must be finite")
    norm = np.linalg.norm(a)
    if norm < ZERO_NORM:
        raise ZeroVector(f"cannot normalize a vector of norm {norm:.3g}")
    return StateVector(a / norm)


def as_state(v: StateLike) -> StateVector:
    """Return ``v`` as a :class:`StateVector`, normalizing raw input."""
    if isinstance(v, StateVector):
        return v
    return normalize(v)


def as_operator(a: ArrayLike, dim: int | None = None) -> ComplexArray:
    """Validate and convert ``a`` to a square complex matrix."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InputError(f"operator must be a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFinite("operator entries must be finite")
    _check_dim(m.shape[0])
    if dim is not None and m.shape[0] != dim:
        raise DimensionMismatch(f"operator has dimension {m.shape[0]}, expected {dim}")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def max_abs(a: ArrayLike) -> float:
    """Entrywise max norm; 0.0 for an empty array."""
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def is_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return max_abs(a - dagger(a)) <= tol


def require_hermitian(a: ArrayLike, dim: int | None = None) -> ComplexArray:
    m = as_operator(a, dim)
    err = max_abs(m - dagger(m))
    if err > HERMITIAN_TOL:
        raise NotHermitian(f"operator is not Hermitian (max |A - A^dag| = {err:.3g})")
    return m


def is_projector(p: np.ndarray, tol: float = 1e-9) -> bool:
    return is_hermitian(p, tol) and max_abs(p @ p - p) <= tol


def projector_from_state(v: StateLike) -> ComplexArray:
    """Rank-one projector |v><v|."""
    a = as_state(v).amplitudes
    return np.outer(a, a.conj())


def projector_onto(vectors: Sequence[StateLike]) -> ComplexArray:
    """Projector onto the span of mutually orthonormal ``vectors``."""
    cols = np.column_stack([as_state(v).amplitudes for v in vectors])
    return cols @ dagger(cols)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Hermitian operator written as ``sum_i eigenvalues[i] * projectors[i]``.

    Eigenvalues are distinct (after grouping) and sorted in descending order.
    """

    eigenvalues: tuple[float, ...]
    projectors: tuple[ComplexArray, ...]

    def reconstruct(self) -> ComplexArray:
        return sum(a * p for a, p in zip(self.eigenvalues, self.projectors))

    def __len__(self) -> int:
        return len(self.eigenvalues)


def spectral_decomposition(a: ArrayLike, degeneracy_tol: float = DEGENERACY_TOL) -> SpectralDecomposition:
    """Spectral decomposition with numerically degenerate eigenvalues merged.

    Parameters
    ----------
    a : array_like
        Hermitian matrix (within 1e-10 in max norm).
    degeneracy_tol : float
        Neighbouring eigenvalues closer than ``degeneracy_tol`` times the
        largest ``|eigenvalue|`` share one projector. The merged eigenvalue is
        the mean of the group.

    Raises
    ------
    NotHermitian
    """
    m = require_hermitian(a)
    m = 0.5 * (m + dagger(m))
    evals, evecs = np.linalg.eigh(m)
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]

    scale = float(np.max(np.abs(evals)))
    gap = degeneracy_tol * scale
    groups: list[list[int]] = [[0]]
    for k in range(1, len(evals)):
        if evals[groups[-1][-1]] - evals[k] <= gap:
            groups[-1].append(k)
        else:
            groups.append([k])

    eigenvalues = []
    projectors = []
    for g in groups:
        v = evecs[:, g]
        eigenvalues.append(float(np.mean(evals[g])))
        projectors.append(_frozen(v @ dagger(v)))
    return SpectralDecomposition(tuple(eigenvalues), tuple(projectors))


def orthogonal_complement_basis(v: StateLike) -> list[StateVector]:
    """Orthonormal basis (d - 1 vectors) of the complement of span{v}."""
    a = as_state(v).amplitudes
    d = a.shape[0]
    # Householder QR always returns a unitary Q whose first column spans v.
    q, _ = np.linalg.qr(np.column_stack([a, np.eye(d, dtype=np.complex128)]))
    return [StateVector(q[:, k] / np.linalg.norm(q[:, k])) for k in range(1, d)]


def basis_matrix(basis: Sequence[StateLike]) -> ComplexArray:
    """Stack basis vectors as the columns of a matrix."""
    return np.column_stack([as_state(b).amplitudes for b in basis])


def is_orthonormal_basis(basis: Sequence[StateLike], dim: int, tol: float = NORM_TOL) -> bool:
    if len(basis) != dim:
        return False
    b = basis_matrix(basis)
    if b.shape[0] != dim:
        return False
    return max_abs(dagger(b) @ b - np.eye(dim)) <= tol


def random_state(d: int, rng: np.random.Generator) -> StateVector:
    """Haar-random state (normalized complex Gaussian vector)."""
    return normalize(rng.standard_normal(d) + 1j * rng.standard_normal(d))


def random_unitary(d: int, rng: np.random.Generator) -> ComplexArray:
    """Haar-random unitary via phase-corrected QR of a Ginibre matrix."""
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_hermitian(d: int, rng: np.random.Generator) -> ComplexArray:
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return 0.5 * (z + dagger(z))
