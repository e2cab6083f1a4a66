"""Exception hierarchy shared by all rqmkit modules."""


class RqmError(Exception):
    """Base class for every error raised by rqmkit."""


class InvalidAlgebraError(RqmError):
    """Malformed algebra description (empty or nonpositive block list)."""


class AlgebraMismatchError(RqmError):
    """Operands live in different algebras or have incompatible shapes."""


class InvalidStateError(RqmError):
    """Density blocks are not PSD or do not have unit total trace."""


class NotAMorphismError(RqmError):
    """A map failed *-homomorphism validation.

    The message names the first violated identity (multiplicativity,
    adjoint preservation, or unit preservation).
    """


class NotCompletelyPositiveError(RqmError):
    """A Choi block has a negative eigenvalue beyond tolerance."""

    def __init__(self, message, worst_block=None, min_eigenvalue=None):
        super().__init__(message)
        self.worst_block = worst_block
        self.min_eigenvalue = min_eigenvalue


class NotUnitalError(RqmError):
    """The image of the unit differs from the unit beyond tolerance."""


class UnsupportedShapeError(RqmError):
    """The operation requires a different algebra shape (e.g. single block)."""


class DimensionCapError(RqmError):
    """A construction would exceed the configured dimension cap."""

    def __init__(self, required, allowed):
        super().__init__(
            f"dimension cap exceeded: construction needs {required} complex "
            f"entries, cap is {allowed}"
        )
        self.required = required
        self.allowed = allowed


class DepthError(RqmError):
    """A time index or shift exceeds the truncation depth of a chain."""


class NumericalFailureError(RqmError):
    """An iterative solver failed to converge within its budget."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class SpecFormatError(RqmError):
    """A problem-description file is malformed or references unknown objects."""
