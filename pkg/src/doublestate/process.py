"""Double states attached to a unitary process between two times.

Time is a bare real number and hbar = 1. The pre-selected state is evolved
forward from ``t_i`` and the post-selected state backward from ``t_f``;
the double state at an intermediate time is built from those two.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike

from .errors import InvalidWindow, NotUnitary, OrthogonalPair, TimeOutOfWindow
from .linalg import (
    ComplexArray,
    StateLike,
    StateVector,
    _frozen,
    as_operator,
    as_state,
    dagger,
    max_abs,
    require_hermitian,
)
from .measure import OVERLAP_FLOOR, DoubleState, Provenance

UNITARY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ProcessWindow:
    """Closed-system time window ``[t_i, t_f]`` with evolution ``U(t) = exp(-i H t)``.

    Construct with :meth:`from_hamiltonian` or :meth:`from_unitary`. The
    eigendecomposition of the generator is computed once here, so instances
    are immutable and safe to share.
    """

    t_i: float
    t_f: float
    matrix: ComplexArray
    kind: Literal["hamiltonian", "unitary"] = "hamiltonian"
    _evals: np.ndarray = field(init=False, repr=False)
    _evecs: ComplexArray = field(init=False, repr=False)

    def __post_init__(self):
        t_i, t_f = float(self.t_i), float(self.t_f)
        if not (np.isfinite(t_i) and np.isfinite(t_f)) or not t_i < t_f:
            raise InvalidWindow(f"need finite t_i < t_f, got [{t_i}, {t_f}]")
        object.__setattr__(self, "t_i", t_i)
        object.__setattr__(self, "t_f", t_f)
        if self.kind == "hamiltonian":
            h = require_hermitian(self.matrix)
            evals, evecs = np.linalg.eigh(0.5 * (h + dagger(h)))
        elif self.kind == "unitary":
            u = as_operator(self.matrix)
            err = max_abs(dagger(u) @ u - np.eye(u.shape[0]))
            if err > UNITARY_TOL:
                raise NotUnitary(f"U^dag U deviates from identity by {err:.3g}")
            # Complex Schur form of a normal matrix is diagonal with unitary Z.
            t, evecs = scipy.linalg.schur(u, output="complex")
            evals = -np.angle(np.diag(t))
            h = u
        else:
            raise InvalidWindow(f"unknown window kind {self.kind!r}")
        object.__setattr__(self, "matrix", _frozen(h))
        object.__setattr__(self, "_evals", evals)
        object.__setattr__(self, "_evecs", _frozen(evecs))

    @classmethod
    def from_hamiltonian(cls, H: ArrayLike, t_i: float, t_f: float) -> "ProcessWindow":
        return cls(t_i, t_f, as_operator(H), "hamiltonian")

    @classmethod
    def from_unitary(cls, U: ArrayLike, t_i: float, t_f: float) -> "ProcessWindow":
        """Window whose evolution over one time unit is ``U``.

        ``U(t)`` is ``U`` raised to the real power ``t`` on the principal
        branch of the logarithm.
        """
        return cls(t_i, t_f, as_operator(U), "unitary")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def duration(self) -> float:
        return self.t_f - self.t_i

    @property
    def hamiltonian(self) -> ComplexArray:
        """Hermitian generator (for unitary windows, the principal-branch one)."""
        v = self._evecs
        return (v * self._evals) @ dagger(v)

    def U(self, t: float) -> ComplexArray:
        """Evolution operator over a (possibly negative) time span ``t``."""
        v = self._evecs
        return (v * np.exp(-1j * self._evals * t)) @ dagger(v)


def _check_time(win: ProcessWindow, t: float) -> float:
    t = float(t)
    if not win.t_i <= t <= win.t_f:
        raise TimeOutOfWindow(f"t={t} lies outside [{win.t_i}, {win.t_f}]")
    return t


def _transition_amplitude(psi: StateVector, phi: StateVector, win: ProcessWindow) -> complex:
    """``<phi|U(t_f - t_i)|psi>``, rejected when below the overlap floor."""
    amp = complex(np.vdot(phi.amplitudes, win.U(win.duration) @ psi.amplitudes))
    if abs(amp) <= OVERLAP_FLOOR:
        raise OrthogonalPair(
            f"|<phi|U(t_f - t_i)|psi>| = {abs(amp):.3g}: post-selection unreachable under this dynamics"
        )
    return amp


def _states(psi, phi, win):
    s, f = as_state(psi), as_state(phi)
    if s.dim != win.dim or f.dim != win.dim:
        raise InvalidWindow("state and window dimensions differ")
    return s, f


def evolved_pair(psi: StateLike, phi: StateLike, win: ProcessWindow, t: float) -> tuple[StateVector, StateVector]:
    """Forward-evolved ``U(t - t_i)|psi>`` and backward-evolved ``U(t - t_f)|phi>``."""
    s, f = _states(psi, phi, win)
    t = _check_time(win, t)
    fwd = win.U(t - win.t_i) @ s.amplitudes
    bwd = win.U(t - win.t_f) @ f.amplitudes
    return StateVector(fwd / np.linalg.norm(fwd)), StateVector(bwd / np.linalg.norm(bwd))


def evolve_double_state(
    psi: StateLike,
    phi: StateLike,
    alpha: complex,
    win: ProcessWindow,
    t: float,
) -> DoubleState:
    """Double state ``W_C(t)`` for the process psi -> phi observed at time ``t``.

    Raises
    ------
    OrthogonalPair
        If ``phi`` cannot be reached from ``psi`` (``<phi|U(t_f-t_i)|psi> ~ 0``).
    TimeOutOfWindow
    """
    s, f = _states(psi, phi, win)
    amp = _transition_amplitude(s, f, win)
    fwd, bwd = evolved_pair(s, f, win, t)
    alpha = complex(alpha)
    a, b = fwd.amplitudes, bwd.amplitudes
    w = alpha * np.outer(a, b.conj()) / amp + (1 - alpha) * np.outer(b, a.conj()) / np.conj(amp)
    return DoubleState(w, Provenance(fwd, bwd, alpha))


def dual_process(psi: StateLike, phi: StateLike, win: ProcessWindow) -> tuple[StateVector, StateVector]:
    """Initial and final states ``(U(t_i - t_f)|phi>, U(t_f - t_i)|psi>)`` of the dual process."""
    s, f = _states(psi, phi, win)
    _transition_amplitude(s, f, win)
    T = win.duration
    new_psi = win.U(-T) @ f.amplitudes
    new_phi = win.U(T) @ s.amplitudes
    return (
        StateVector(new_psi / np.linalg.norm(new_psi)),
        StateVector(new_phi / np.linalg.norm(new_phi)),
    )


def verify_dual_equivalence(
    psi: StateLike,
    phi: StateLike,
    alpha: complex,
    win: ProcessWindow,
    t: float,
    tol: float = 1e-9,
) -> bool:
    """Whether the dual process with weight ``1 - alpha`` yields the same ``W_C(t)``."""
    w = evolve_double_state(psi, phi, alpha, win, t).W
    dpsi, dphi = dual_process(psi, phi, win)
    w_dual = evolve_double_state(dpsi, dphi, 1 - complex(alpha), win, t).W
    return max_abs(w - w_dual) <= tol
