"""Exception hierarchy shared by all modules.

Every error carries a stable ``name`` (the class name) so the command line
front end can report it in structured diagnostics.
"""

from __future__ import annotations


class DoubleStateError(Exception):
    """Base class for all library errors."""

    @property
    def name(self) -> str:
        return type(self).__name__


class ComputationError(DoubleStateError):
    """A well-formed input for which the requested quantity does not exist."""


class InputError(DoubleStateError, ValueError):
    """Malformed, inconsistent or out-of-range input."""


# linalg
class ZeroVector(ComputationError):
    pass


class NotHermitian(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class DimensionTooLarge(InputError):
    pass


class NonFinite(InputError):
    pass


# measure
class InvalidDensity(InputError):
    pass


class InvalidProjector(InputError):
    pass


class NotTraceOne(InputError):
    pass


class OrthogonalPair(ComputationError):
    pass


class IncompleteBasis(InputError):
    pass


# process
class TimeOutOfWindow(InputError):
    pass


class InvalidWindow(InputError):
    pass


class NotUnitary(InputError):
    pass


# decompose
class DegenerateRow1(ComputationError):
    pass


class PlanInvalid(InputError):
    pass


class OrthogonalTerm(ComputationError):
    pass


class InvalidMixture(InputError):
    pass


# ensemble
class EmptyMixture(InputError):
    pass


# documents
class DocumentError(InputError):
    """Parse or schema error in a JSON document; ``where`` locates the field."""

    def __init__(self, message: str, where: str | None = None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)
