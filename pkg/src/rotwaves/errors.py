"""Exception hierarchy shared by all solver modules."""


class RotWavesError(Exception):
    """Base class for every error raised by the package."""


class DomainError(RotWavesError, ValueError):
    """A pressure coordinate lies outside [p0, 0]."""


class ParameterRangeError(RotWavesError, ValueError):
    """lambda is not admissible (lambda <= 2 max Gamma) or similar."""


class IntegrationError(RotWavesError, ArithmeticError):
    pass


class RootBracketError(RotWavesError, ArithmeticError):
    """No sign change found where one was required."""


class NotApplicableError(RotWavesError):
    """Quantity undefined for the given data (e.g. lambda_0 when g = 0)."""


class InvalidStateError(RotWavesError, ValueError):
    """Discrete state left the regime min h_p > 0 or broke an invariant."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class LinearSolveError(RotWavesError, ArithmeticError):
    pass


class CorrectorFailure(RotWavesError, ArithmeticError):
    pass


class ConfigError(RotWavesError, ValueError):
    """Configuration could not be parsed or validated."""

    def __init__(self, message, field=None, line=None):
        super().__init__(message)
        self.field = field
        self.line = line


class SnapshotError(RotWavesError, ValueError):
    """A state snapshot is malformed; ``offset`` is the byte position if known."""

    def __init__(self, message, offset=None):
        super().__init__(message)
        self.offset = offset
