"""Exception hierarchy shared by every module.

The CLI maps each family to an exit status, so new error types should
subclass one of the four families below rather than ``DampwaveError``
directly.
"""


class DampwaveError(Exception):
    """Base class for all library errors."""


class InvalidArgument(DampwaveError, ValueError):
    """An argument violates an operation's precondition."""


class NumericalFailure(DampwaveError, ArithmeticError):
    """A numerical routine failed or produced an unusable result."""


class ResourceLimit(DampwaveError):
    """A configured budget (enumeration size, depth, integer width) was exceeded."""


class RefusedPrecondition(DampwaveError):
    """The inputs are valid but the requested analysis does not apply to them."""


class InsufficientData(InvalidArgument):
    pass


class PoleError(InvalidArgument):
    pass


class Unsupported(RefusedPrecondition):
    pass


class AccuracyRefused(RefusedPrecondition):
    pass


class DegenerateDamping(RefusedPrecondition):
    """Some eigenspace contains a vector invisible to the damping form."""


class SpectralPositivityError(RefusedPrecondition):
    pass


class ResonanceError(NumericalFailure):
    """The resolvent does not exist: i*omega is an eigenvalue of the generator."""


class Diverged(NumericalFailure):
    pass
