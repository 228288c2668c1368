"""Born measure, the complex double-state measure and its expectations.

A double state is a unit-trace operator ``W``. For a pre-selected ``psi``
and post-selected ``phi`` the consistent family is::

    W = alpha |psi><phi| / <phi|psi> + (1 - alpha) |phi><psi| / <psi|phi>

and ``P -> tr(W P)`` is the associated complex measure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, NamedTuple, Sequence

import numpy as np
from numpy.typing import ArrayLike

from .errors import (
    DimensionMismatch,
    IncompleteBasis,
    InvalidDensity,
    InvalidProjector,
    NotTraceOne,
    OrthogonalPair,
)
from .linalg import (
    ComplexArray,
    StateLike,
    StateVector,
    _frozen,
    as_operator,
    as_state,
    basis_matrix,
    dagger,
    is_projector,
    max_abs,
    orthogonal_complement_basis,
    projector_from_state,
    require_hermitian,
    spectral_decomposition,
)

OVERLAP_FLOOR = 1e-8
IDENTICAL_TOL = 1e-12
TRACE_TOL = 1e-10
REPORT_TOL = 1e-9
PATH_TOL = 1e-9


class Provenance(NamedTuple):
    psi: StateVector
    phi: StateVector
    alpha: complex


@dataclass(frozen=True, eq=False)
class DoubleState:
    """A (generalized) double state: any operator with unit trace.

    ``provenance`` is set only when ``W`` was built from a state pair and a
    weight ``alpha``; derived operators drop it.
    """

    W: ComplexArray
    provenance: Provenance | None = None

    def __post_init__(self):
        w = as_operator(self.W)
        tr = np.trace(w)
        # Entries of size ~1/|<phi|psi>| carry proportional rounding in the trace.
        if abs(tr - 1.0) > TRACE_TOL * max(1.0, max_abs(w)):
            raise NotTraceOne(f"double state must have unit trace, got {tr:.12g}")
        object.__setattr__(self, "W", _frozen(w))

    @property
    def dim(self) -> int:
        return self.W.shape[0]

    @classmethod
    def from_matrix(cls, w: ArrayLike, rescale: bool = False) -> "DoubleState":
        """Wrap a matrix; with ``rescale`` divide it by its trace first."""
        m = as_operator(w)
        if rescale:
            tr = np.trace(m)
            if abs(tr) < 1e-14:
                raise NotTraceOne("cannot rescale a traceless operator to unit trace")
            m = m / tr
        return cls(m)

    @property
    def real_part(self) -> ComplexArray:
        """Self-adjoint operator carrying the real part of the measure."""
        return 0.5 * (self.W + dagger(self.W))

    @property
    def imag_part(self) -> ComplexArray:
        """Self-adjoint operator carrying the imaginary part of the measure."""
        return -0.5j * (self.W - dagger(self.W))


class Check(NamedTuple):
    name: str
    expected: complex
    actual: complex
    passed: bool


@dataclass(frozen=True)
class MeasureReport:
    checks: tuple[Check, ...]
    tolerance: float
    notes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    @property
    def residual(self) -> float:
        """Largest |expected - actual| over all checks."""
        return max((abs(c.expected - c.actual) for c in self.checks), default=0.0)


def make_check(name: str, expected: complex, actual: complex, tol: float) -> Check:
    return Check(name, complex(expected), complex(actual), bool(abs(expected - actual) <= tol))


def _overlap(phi: StateVector, psi: StateVector) -> complex:
    """<phi|psi>."""
    return complex(np.vdot(phi.amplitudes, psi.amplitudes))


def _require_overlap(phi: StateVector, psi: StateVector, floor: float) -> complex:
    ov = _overlap(phi, psi)
    if abs(ov) <= floor:
        raise OrthogonalPair(f"|<phi|psi>| = {abs(ov):.3g} is below the overlap floor {floor:g}")
    return ov


def _require_projector(p: ArrayLike, dim: int) -> ComplexArray:
    m = as_operator(p)
    if m.shape[0] != dim:
        raise DimensionMismatch(f"projector has dimension {m.shape[0]}, expected {dim}")
    if not is_projector(m):
        raise InvalidProjector("operator is not an orthogonal projector")
    return m


def born_measure(rho: ArrayLike, P: ArrayLike) -> float:
    """Probability ``Re tr(rho P)`` for a density operator ``rho``."""
    r = as_operator(rho)
    if max_abs(r - dagger(r)) > 1e-9 or abs(np.trace(r) - 1) > 1e-9:
        raise InvalidDensity("density operator must be Hermitian with unit trace")
    if np.linalg.eigvalsh(0.5 * (r + dagger(r)))[0] < -1e-9:
        raise InvalidDensity("density operator must be positive semidefinite")
    p = _require_projector(P, r.shape[0])
    return float(np.real(np.trace(r @ p)))


def expectation_single(psi: StateLike, A: ArrayLike) -> float:
    """Expectation of Hermitian ``A`` as ``sum_i a_i mu(P_i)`` in the pure state ``psi``."""
    s = as_state(psi)
    a = require_hermitian(A, s.dim)
    rho = projector_from_state(s)
    spectral = sum(ev * born_measure(rho, p) for ev, p in zip(*_spectrum(a)))
    direct = float(np.real(np.vdot(s.amplitudes, a @ s.amplitudes)))
    _check_paths(spectral, direct, a)
    return spectral


def _spectrum(a: ComplexArray):
    sd = spectral_decomposition(a)
    return sd.eigenvalues, sd.projectors


def _check_paths(spectral: complex, direct: complex, a: ComplexArray, w_norm: float = 1.0) -> None:
    tol = PATH_TOL * max(1.0, float(np.linalg.norm(a, 2))) * max(1.0, w_norm)
    if abs(spectral - direct) > tol:
        raise ArithmeticError(
            f"spectral and direct evaluation disagree by {abs(spectral - direct):.3g}"
        )


def double_state_matrix(psi: StateVector, phi: StateVector, alpha: complex) -> ComplexArray:
    ov = _overlap(phi, psi)
    forward = np.outer(psi.amplitudes, phi.amplitudes.conj()) / ov
    backward = np.outer(phi.amplitudes, psi.amplitudes.conj()) / np.conj(ov)
    return alpha * forward + (1 - alpha) * backward


def build_double_state(
    psi: StateLike,
    phi: StateLike,
    alpha: complex,
    overlap_floor: float = OVERLAP_FLOOR,
) -> DoubleState:
    """Double state for pre-selection ``psi``, post-selection ``phi`` and weight ``alpha``.

    When ``psi`` and ``phi`` coincide up to phase the weight is irrelevant and
    the pure density operator ``|psi><psi|`` is returned.

    Raises
    ------
    OrthogonalPair
        If ``|<phi|psi>| <= overlap_floor``.
    """
    s, f = as_state(psi), as_state(phi)
    if s.dim != f.dim:
        raise DimensionMismatch("psi and phi must have the same dimension")
    alpha = complex(alpha)
    ov = _require_overlap(f, s, overlap_floor)
    if abs(ov) >= 1 - IDENTICAL_TOL:
        w = projector_from_state(s)
    else:
        w = double_state_matrix(s, f, alpha)
    return DoubleState(w, Provenance(s, f, alpha))


def complex_measure(W: DoubleState, P: ArrayLike) -> complex:
    """``tr(W P)`` for an orthogonal projector ``P``."""
    p = _require_projector(P, W.dim)
    return complex(np.trace(W.W @ p))


def _require_double(W: DoubleState | ArrayLike) -> DoubleState:
    return W if isinstance(W, DoubleState) else DoubleState(W)


def lambda_expectation(W: DoubleState, A: ArrayLike) -> complex:
    """Expectation ``sum_i a_i mu_C(P_i)`` of a Hermitian observable.

    The spectral sum is cross-checked against ``tr(W A)``.
    """
    W = _require_double(W)
    a = require_hermitian(A, W.dim)
    evals, projs = _spectrum(a)
    spectral = complex(sum(ev * complex(np.trace(W.W @ p)) for ev, p in zip(evals, projs)))
    direct = complex(np.trace(W.W @ a))
    _check_paths(spectral, direct, a, float(np.linalg.norm(W.W, 2)))
    return spectral


def closed_form_lambda(psi: StateLike, phi: StateLike, alpha: complex, A: ArrayLike) -> complex:
    """``alpha <phi|A|psi>/<phi|psi> + (1-alpha) <psi|A|phi>/<psi|phi>``."""
    s, f = as_state(psi), as_state(phi)
    a = as_operator(A, s.dim)
    ov = _require_overlap(f, s, OVERLAP_FLOOR)
    fwd = np.vdot(f.amplitudes, a @ s.amplitudes) / ov
    bwd = np.vdot(s.amplitudes, a @ f.amplitudes) / np.conj(ov)
    return complex(alpha * fwd + (1 - alpha) * bwd)


def weak_value(psi: StateLike, phi: StateLike, A: ArrayLike, overlap_floor: float = OVERLAP_FLOOR) -> complex:
    """Weak value ``<phi|A|psi> / <phi|psi>`` of ``A`` in the process psi -> phi."""
    s, f = as_state(psi), as_state(phi)
    a = as_operator(A, s.dim)
    ov = _require_overlap(f, s, overlap_floor)
    return complex(np.vdot(f.amplitudes, a @ s.amplitudes) / ov)


def contextual_average(
    state: StateLike,
    basis: Sequence[StateLike],
    A: ArrayLike,
    alpha: complex,
    vary: Literal["post", "pre"] = "post",
) -> complex:
    """Compatibility-weighted average of ``lambda(A)`` over a complete basis.

    With ``vary="post"`` the pre-selected state is fixed to ``state`` and the
    post-selection runs over ``basis``; the result is ``<state|A|state>``.
    ``vary="pre"`` swaps the roles.

    Each summand is evaluated in the pole-free form
    ``alpha <f|A|s><s|f> + (1 - alpha) <s|A|f><f|s>``, so basis elements
    orthogonal to ``state`` contribute nothing instead of dividing by zero.
    """
    fixed = as_state(state)
    a = require_hermitian(A, fixed.dim)
    basis = [as_state(b) for b in basis]
    if len(basis) != fixed.dim or any(b.dim != fixed.dim for b in basis):
        raise IncompleteBasis(f"need {fixed.dim} basis vectors of dimension {fixed.dim}")
    B = basis_matrix(basis)
    if max_abs(dagger(B) @ B - np.eye(fixed.dim)) > 1e-10:
        raise IncompleteBasis("basis is not orthonormal")
    if vary not in ("post", "pre"):
        raise ValueError("vary must be 'post' or 'pre'")

    x = fixed.amplitudes
    total = 0j
    for k in range(fixed.dim):
        b = B[:, k]
        if vary == "post":
            s, f = x, b
        else:
            s, f = b, x
        fs = np.vdot(f, s)
        total += alpha * np.vdot(f, a @ s) * np.conj(fs) + (1 - alpha) * np.vdot(s, a @ f) * fs
    return complex(total)


def affine_combine(W: DoubleState, W2: DoubleState, beta: complex) -> DoubleState:
    """``beta W + (1 - beta) W2``; the result carries no provenance."""
    if W.dim != W2.dim:
        raise DimensionMismatch(f"dimensions differ: {W.dim} vs {W2.dim}")
    beta = complex(beta)
    return DoubleState(beta * W.W + (1 - beta) * W2.W)


def is_pure_process(W: DoubleState, tol: float = 1e-9) -> bool:
    """True if ``W`` is idempotent, i.e. a single process |psi><phi|/<phi|psi>."""
    W = _require_double(W)
    return max_abs(W.W @ W.W - W.W) <= tol


def verify_consistency(
    W: DoubleState,
    psi: StateLike,
    phi: StateLike,
    tol: float = REPORT_TOL,
) -> MeasureReport:
    """Check that ``W`` gives certainty to ``psi`` and ``phi`` and nothing to their complements.

    Besides the rank-one checks on an orthonormal basis of each complement,
    the compression of ``W`` onto each complement is checked to vanish,
    which covers every vector of the complement at once.
    """
    W = _require_double(W)
    s, f = as_state(psi), as_state(phi)
    if s.dim != W.dim or f.dim != W.dim:
        raise DimensionMismatch("states and double state must share a dimension")
    checks: list[Check] = []
    for label, v in (("psi", s), ("phi", f)):
        checks.append(make_check(f"mu(P_{label})", 1.0, complex_measure(W, projector_from_state(v)), tol))
        comp = orthogonal_complement_basis(v)
        for k, u in enumerate(comp):
            checks.append(
                make_check(f"mu(P_{label}_perp[{k}])", 0.0, complex_measure(W, projector_from_state(u)), tol)
            )
        Q = basis_matrix(comp)
        checks.append(make_check(f"max|W on {label}_perp|", 0.0, max_abs(dagger(Q) @ W.W @ Q), tol))
    return MeasureReport(tuple(checks), tol)
