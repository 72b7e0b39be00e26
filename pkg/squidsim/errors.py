"""
Exception hierarchy for squidsim.

Every error raised by the physics modules derives from SquidSimError so the
command layer can map it to an exit code and, on request, a JSON error line.
"""


class SquidSimError(Exception):
    """Base class for all squidsim errors."""

    def __init__(self, message: str, **context) -> None:
        super().__init__(message)
        self.message = message
        self.context = context

    def to_dict(self) -> dict:
        """Machine-readable form used by --json-errors."""
        payload = {"error": self.__class__.__name__, "message": self.message}
        payload.update(self.context)
        return payload


class NoDoubleWell(SquidSimError):
    """The potential has fewer than two minima at this bias."""


class GridTooCoarse(SquidSimError):
    """Doubling the grid shifted a requested level by more than the tolerance."""


class ConvergenceFailure(SquidSimError):
    """The eigensolver did not converge."""


class LevelSolveError(SquidSimError):
    """A per-bias solve inside a level diagram failed; carries the bias."""

    def __init__(self, message: str, bias: float, cause: Exception | None = None) -> None:
        super().__init__(message, bias=bias)
        self.bias = bias
        self.cause = cause


class NoCrossingFound(SquidSimError):
    """A requested avoided crossing has no interior gap minimum in range."""


class BranchAmbiguity(SquidSimError):
    """Diabatic branches could not be identified from well localization."""


class StepUnstable(SquidSimError):
    """The integrator lost trace preservation; the step is too large."""


class InvalidInitialState(SquidSimError):
    """The initial density matrix violates Hermiticity, trace or positivity bounds."""


class InvalidOrder(SquidSimError, ValueError):
    """A photon order below 1 was requested."""


class SingularRateMatrix(SquidSimError):
    """The rate equation has no unique stationary distribution."""


class ParseError(SquidSimError):
    """The configuration file is missing or is not well-formed."""

    def __init__(self, message: str, path: str, line: int | None = None) -> None:
        super().__init__(message, path=path, line=line)
        self.path = path
        self.line = line


class ValidationError(SquidSimError):
    """The configuration parsed but violates an invariant."""

    def __init__(self, message: str, field: str) -> None:
        super().__init__(message, field=field)
        self.field = field
