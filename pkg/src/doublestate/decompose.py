"""Decomposition of double states into classical mixtures of processes.

Any unit-trace ``W`` on C^d can be written as::

    W = sum_i p_i |psi_i><phi_i| / <phi_i|psi_i>,   p_i >= 0, sum_i p_i = 1

with at most d + 1 terms. Given an orthonormal basis ``{w_i}`` and
probabilities ``p_1 .. p_{d+1}``, the pairs are::

    psi_i     = w_i                    phi_i     = w_i + sum_{j != i} conj(beta_ij) w_j
    psi_{d+1} = w_1 + sum_i alpha_i w_i  phi_{d+1} = sum_{i>=2} w_i + (1 - sum_j conj(alpha_j)) w_1

with all overlaps ``<phi_i|psi_i>`` equal to one and

    alpha_i = (w_ii - p_i) / p_{d+1}
    beta_1j = (w_1j - p_{d+1}) / p_1
    beta_ij = (w_ij - p_{d+1} alpha_i) / p_i                        (i, j >= 2)
    beta_i1 = (w_i1 - p_{d+1} alpha_i (1 - sum_{j>=2} alpha_j)) / p_i

where ``w_ij`` are the matrix elements of ``W`` in the chosen basis and
indices run from 1 to d.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal, NamedTuple, Sequence

import numpy as np
from numpy.typing import ArrayLike

from .errors import (
    DegenerateRow1,
    DimensionMismatch,
    EmptyMixture,
    InvalidMixture,
    OrthogonalTerm,
    PlanInvalid,
)
from .linalg import (
    ComplexArray,
    StateLike,
    StateVector,
    _frozen,
    as_state,
    basis_matrix,
    dagger,
    max_abs,
    normalize,
    require_hermitian,
)
from .measure import (
    Check,
    DoubleState,
    MeasureReport,
    build_double_state,
    make_check,
)

#: The beta_i1 coefficient uses the sum of alpha_j over j = 2..d, and phi_i
#: carries the complex conjugates of beta_ij. This is the reading under which
#: the reconstruction identity holds for arbitrary W.
COEFFICIENT_READING = (
    "beta_i1 = (w_i1 - p_{d+1} alpha_i (1 - sum_{j=2..d} alpha_j)) / p_i; "
    "phi_i = w_i + sum_{j!=i} conj(beta_ij) w_j"
)

ROW_ZERO_TOL = 1e-13
PROB_TOL = 1e-10
TERM_OVERLAP_FLOOR = 1e-12


class ProcessTerm(NamedTuple):
    """One process psi -> phi of a mixture, drawn with probability ``p``."""

    p: float
    psi: StateVector
    phi: StateVector

    @classmethod
    def make(cls, p: float, psi: StateLike, phi: StateLike) -> "ProcessTerm":
        p = float(p)
        if not np.isfinite(p) or p < 0 or p > 1:
            raise InvalidMixture(f"term probability must lie in [0, 1], got {p}")
        s, f = as_state(psi), as_state(phi)
        if s.dim != f.dim:
            raise DimensionMismatch("psi and phi of a term must share a dimension")
        if np.vdot(f.amplitudes, s.amplitudes) == 0:
            raise OrthogonalTerm("term states are orthogonal")
        return cls(p, s, f)

    @property
    def overlap(self) -> complex:
        return complex(np.vdot(self.phi.amplitudes, self.psi.amplitudes))

    def operator(self) -> ComplexArray:
        """``|psi><phi| / <phi|psi>``."""
        ov = self.overlap
        if abs(ov) <= TERM_OVERLAP_FLOOR:
            raise OrthogonalTerm(f"|<phi|psi>| = {abs(ov):.3g}: not a physical process")
        return np.outer(self.psi.amplitudes, self.phi.amplitudes.conj()) / ov

    def weak_value(self, A: np.ndarray) -> complex:
        ov = self.overlap
        if abs(ov) <= TERM_OVERLAP_FLOOR:
            raise OrthogonalTerm(f"|<phi|psi>| = {abs(ov):.3g}: not a physical process")
        return complex(np.vdot(self.phi.amplitudes, A @ self.psi.amplitudes) / ov)


@dataclass(frozen=True)
class ProcessMixture:
    terms: tuple[ProcessTerm, ...]
    dim: int

    def __post_init__(self):
        terms = tuple(self.terms)
        if not terms:
            raise EmptyMixture("a mixture needs at least one term")
        if any(t.psi.dim != self.dim or t.phi.dim != self.dim for t in terms):
            raise DimensionMismatch(f"all terms must have dimension {self.dim}")
        total = sum(t.p for t in terms)
        if abs(total - 1.0) > PROB_TOL:
            raise InvalidMixture(f"term probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_terms(cls, terms: Sequence[tuple[float, StateLike, StateLike]]) -> "ProcessMixture":
        built = tuple(t if isinstance(t, ProcessTerm) else ProcessTerm.make(*t) for t in terms)
        if not built:
            raise EmptyMixture("a mixture needs at least one term")
        return cls(built, built[0].psi.dim)

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([t.p for t in self.terms])

    def __len__(self) -> int:
        return len(self.terms)


@dataclass(frozen=True, eq=False)
class DecompositionPlan:
    """Basis and probabilities for the mixture construction.

    ``basis`` holds the basis vectors as matrix columns; ``probabilities``
    has length d + 1 with the last entry belonging to the extra process.
    ``alphas`` (length d - 1, for i = 2..d) and ``betas`` (d x d, zero
    diagonal) are filled in by :func:`solve_plan`.
    """

    basis: ComplexArray
    probabilities: np.ndarray
    alphas: ComplexArray | None = None
    betas: ComplexArray | None = None

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @classmethod
    def from_vectors(cls, basis: Sequence[StateLike], probabilities: ArrayLike) -> "DecompositionPlan":
        return cls(basis_matrix(basis), np.asarray(probabilities, dtype=float))

    def basis_vectors(self) -> list[StateVector]:
        return [StateVector(self.basis[:, k]) for k in range(self.dim)]


def _coefficients(W: DoubleState, basis: np.ndarray) -> ComplexArray:
    """Matrix elements ``<w_i|W|w_j>``."""
    return dagger(basis) @ W.W @ basis


def _zero_rows(w: np.ndarray, tol: float = ROW_ZERO_TOL) -> np.ndarray:
    return np.max(np.abs(w), axis=1) <= tol


def check_plan_structure(plan: DecompositionPlan, d: int | None = None) -> None:
    """Checks that do not involve ``W``: orthonormal basis and a probability vector."""
    B = np.asarray(plan.basis, dtype=np.complex128)
    p = np.asarray(plan.probabilities, dtype=float)
    d = B.shape[0] if d is None else d
    if B.shape != (d, d):
        raise PlanInvalid(f"plan basis must be {d}x{d}, got {B.shape}")
    if max_abs(dagger(B) @ B - np.eye(d)) > 1e-10:
        raise PlanInvalid("plan basis is not orthonormal")
    if p.shape != (d + 1,):
        raise PlanInvalid(f"plan needs {d + 1} probabilities, got {p.shape[0] if p.ndim else 0}")
    if not np.all(np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise PlanInvalid("probabilities must lie in [0, 1]")
    if abs(p.sum() - 1.0) > PROB_TOL:
        raise PlanInvalid(f"probabilities sum to {p.sum()!r}, not 1")
    if p[d] <= 0:
        raise PlanInvalid("the extra process must have nonzero probability")


def validate_plan(W: DoubleState, plan: DecompositionPlan) -> None:
    """Raise :class:`PlanInvalid` unless ``plan`` satisfies every constraint for ``W``."""
    d = W.dim
    check_plan_structure(plan, d)
    B = np.asarray(plan.basis, dtype=np.complex128)
    p = np.asarray(plan.probabilities, dtype=float)
    zero = _zero_rows(_coefficients(W, B))
    if zero[0]:
        raise PlanInvalid("the first basis row of W vanishes; reorder the basis")
    bad = np.flatnonzero(zero != (p[:d] == 0))
    if bad.size:
        raise PlanInvalid(
            f"p_i must vanish exactly on the zero rows of W; violated at rows {[int(i) + 1 for i in bad]}"
        )


def default_plan(W: DoubleState) -> DecompositionPlan:
    """Computational basis (first nonzero row moved to the front), p_{d+1} = 1/2.

    The other half of the probability is shared equally by the nonzero rows.
    """
    d = W.dim
    zero = _zero_rows(W.W)
    nonzero = np.flatnonzero(~zero)
    if nonzero.size == 0:
        raise DegenerateRow1("W has no nonzero row in any ordering of the basis")
    first = int(nonzero[0])
    order = [first] + [k for k in range(d) if k != first]
    B = np.eye(d, dtype=np.complex128)[:, order]
    p = np.zeros(d + 1)
    rows = ~zero[order]
    p[:d][rows] = 0.5 / rows.sum()
    p[d] = 0.5
    return DecompositionPlan(B, p)


def solve_plan(
    W: DoubleState,
    plan: DecompositionPlan,
    reading: Literal["alpha_j", "literal"] = "alpha_j",
) -> DecompositionPlan:
    """Fill in the alpha and beta coefficients of ``plan`` for ``W``.

    ``reading="literal"`` evaluates the inner sum of ``beta_i1`` with the
    outer index (``(d - 1) alpha_i``); it exists so the two readings can be
    compared and does not reconstruct ``W`` in general.
    """
    validate_plan(W, plan)
    d = W.dim
    w = _coefficients(W, plan.basis)
    p = np.asarray(plan.probabilities, dtype=float)
    q = p[d]
    alphas = (np.diag(w)[1:] - p[1:d]) / q
    betas = np.zeros((d, d), dtype=np.complex128)
    betas[0, 1:] = (w[0, 1:] - q) / p[0]
    for i in range(1, d):
        if p[i] == 0:
            continue
        a_i = alphas[i - 1]
        betas[i, 1:] = (w[i, 1:] - q * a_i) / p[i]
        inner = alphas.sum() if reading == "alpha_j" else (d - 1) * a_i
        betas[i, 0] = (w[i, 0] - q * a_i * (1 - inner)) / p[i]
        betas[i, i] = 0
    return replace(plan, alphas=alphas, betas=betas)


class RawPair(NamedTuple):
    p: float
    psi: ComplexArray
    phi: ComplexArray


def raw_pairs(W: DoubleState, plan: DecompositionPlan | None = None, **kw) -> list[RawPair]:
    """Unnormalized state pairs of the construction, one per basis row plus the extra one.

    Each pair has ``<phi|psi> = 1``. Rows with zero probability are included
    with ``p = 0``; :func:`decompose_processes` drops them.
    """
    plan = default_plan(W) if plan is None else plan
    if plan.alphas is None or plan.betas is None:
        plan = solve_plan(W, plan, **kw)
    d = W.dim
    B = plan.basis
    p = plan.probabilities
    pairs = []
    for i in range(d):
        coords_phi = plan.betas[i].conj().copy()
        coords_phi[i] = 1.0
        pairs.append(RawPair(float(p[i]), B[:, i].copy(), B @ coords_phi))
    a = plan.alphas
    psi_coords = np.concatenate([[1.0], a])
    phi_coords = np.concatenate([[1 - np.sum(a.conj())], np.ones(d - 1)])
    pairs.append(RawPair(float(p[d]), B @ psi_coords, B @ phi_coords))
    return pairs


def decompose_processes(W: DoubleState, plan: DecompositionPlan | None = None) -> ProcessMixture:
    """Write ``W`` as a mixture of at most d + 1 processes.

    Parameters
    ----------
    W : DoubleState
    plan : DecompositionPlan, optional
        Basis and probabilities; :func:`default_plan` when omitted.

    Raises
    ------
    PlanInvalid
        If the plan violates its constraints for this ``W``.
    DegenerateRow1
        If ``W`` has no nonzero row (cannot happen for unit trace).
    """
    pairs = raw_pairs(W, plan)
    terms = tuple(ProcessTerm.make(pr.p, normalize(pr.psi), normalize(pr.phi)) for pr in pairs if pr.p > 0)
    return ProcessMixture(terms, W.dim)


def reconstruct(mixture: ProcessMixture) -> DoubleState:
    """``sum_i p_i |psi_i><phi_i| / <phi_i|psi_i>``."""
    w = sum(t.p * t.operator() for t in mixture.terms)
    return DoubleState(w)


def mixture_expectation(mixture: ProcessMixture, A: ArrayLike) -> complex:
    """Probability-weighted average of the per-process weak values of ``A``."""
    a = require_hermitian(A, mixture.dim)
    return complex(sum(t.p * t.weak_value(a) for t in mixture.terms))


class SvdTerm(NamedTuple):
    r: float
    u: StateVector
    v: StateVector
    physical: bool


def svd_decompose(W: DoubleState, rank_tol: float = 1e-12, overlap_tol: float = 1e-10) -> list[SvdTerm]:
    """Singular value expansion ``W = sum_i r_i |u_i><v_i|``.

    Terms with ``|<u_i|v_i>| <= overlap_tol`` are flagged unphysical: such a
    pair cannot be the preparation and post-selection of one process.
    Singular values below ``rank_tol * r_max`` are dropped.
    """
    U, s, Vh = np.linalg.svd(W.W)
    cutoff = rank_tol * s[0]
    terms = []
    for k in range(len(s)):
        if s[k] <= cutoff:
            continue
        u = StateVector(U[:, k] / np.linalg.norm(U[:, k]))
        v = StateVector(Vh[k].conj() / np.linalg.norm(Vh[k]))
        physical = abs(np.vdot(u.amplitudes, v.amplitudes)) > overlap_tol
        terms.append(SvdTerm(float(s[k]), u, v, bool(physical)))
    return terms


def svd_reconstruct(terms: Sequence[SvdTerm]) -> ComplexArray:
    return sum(t.r * np.outer(t.u.amplitudes, t.v.amplitudes.conj()) for t in terms)


# Spin-1 example -------------------------------------------------------------

SPIN1_CAVEAT_TOL = 1e-8


def spin1_states() -> dict[str, StateVector]:
    """``z+``, ``z0``, ``z-``, ``x+`` and ``omega`` in the S_z eigenbasis.

    ``x+`` is the +1 eigenvector of ``S_x = tridiag(1, 0, 1) / sqrt(2)``.
    """
    e = np.eye(3, dtype=np.complex128)
    sx = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=np.complex128) / np.sqrt(2)
    evals, evecs = np.linalg.eigh(sx)
    xp = evecs[:, int(np.argmax(evals))]
    xp = xp * np.exp(-1j * np.angle(xp[0]))  # cosmetic: real positive first entry
    return {
        "z+": StateVector(e[0]),
        "z0": StateVector(e[1]),
        "z-": StateVector(e[2]),
        "x+": normalize(xp),
        "omega": normalize(e[0] - e[1] - e[2]),
    }


def spin1_mixture(alpha: complex) -> ProcessMixture:
    """The four equally weighted processes listed for the spin-1 double state."""
    st = spin1_states()
    zp, z0, zm, om = (st[k].amplitudes for k in ("z+", "z0", "z-", "omega"))
    ac = np.conj(complex(alpha))
    c = np.sqrt(3) / 4
    pairs = [
        (zp, (1 - ac) * (np.sqrt(2) * z0 + zm) + c * om),
        (z0, (1 + np.sqrt(2) * ac) * zp - c * om),
        (zm, (1 + ac) * zp - c * om),
        (om, zp - c * om),
    ]
    return ProcessMixture.from_terms([(0.25, normalize(s), normalize(f)) for s, f in pairs])


def spin1_example(alpha: complex) -> tuple[DoubleState, ProcessMixture, MeasureReport]:
    """Spin-1 double state from ``x+ -> z+`` and its four-process decomposition.

    The report lists the trace, the hermiticity defect (expected zero only at
    ``alpha = 1/2``) and the entrywise distance between the reconstructed
    mixture and ``W``. A residual above ``SPIN1_CAVEAT_TOL`` is flagged in
    ``notes["caveat"]`` rather than raised.
    """
    alpha = complex(alpha)
    st = spin1_states()
    W = build_double_state(st["x+"], st["z+"], alpha)
    mix = spin1_mixture(alpha)
    residual = max_abs(reconstruct(mix).W - W.W)
    tol = 1e-10
    checks: list[Check] = [
        make_check("trace", 1.0, np.trace(W.W), tol),
        make_check("reconstruction_residual", 0.0, residual, SPIN1_CAVEAT_TOL),
    ]
    herm = max_abs(W.W - dagger(W.W))
    if alpha == 0.5:
        checks.append(make_check("hermiticity_defect", 0.0, herm, tol))
    notes = {
        "alpha": alpha,
        "overlap_z+_x+": complex(np.vdot(st["z+"].amplitudes, st["x+"].amplitudes)),
        "hermiticity_defect": herm,
        "reconstruction_residual": residual,
        "coefficient_reading": COEFFICIENT_READING,
        "caveat": residual > SPIN1_CAVEAT_TOL,
    }
    return W, mix, MeasureReport(tuple(checks), tol, notes)
