"""Exception hierarchy.

Every error raised by the library derives from :class:`DegenControlError`, so
callers (and the CLI) can catch one base class.  Warnings that do not stop a
computation use :class:`DegenControlWarning` through :mod:`warnings`.
"""


class DegenControlError(Exception):
    """Base class for all library errors."""


class DegenControlWarning(UserWarning):
    """Base class for all library warnings."""


# coefficient
class NonPositiveInterior(DegenControlError):
    pass


class BadTable(DegenControlError):
    pass


class InconclusiveIntegrability(DegenControlError):
    pass


# discretization
class TooFewCells(DegenControlError):
    pass


class GridMismatch(DegenControlError):
    pass


class EmptyTrace(DegenControlError):
    pass


# spectral
class ConvergenceFailure(DegenControlError):
    pass


class GapTooSmall(DegenControlWarning):
    pass


# control
class NegativeTarget(DegenControlError):
    pass


class DegenerateTarget(DegenControlError):
    pass


class NotNonnegative(DegenControlError):
    pass


class ZeroInitialState(DegenControlError):
    pass


class NonpositiveOverlap(DegenControlError):
    pass


class NonpositiveGap(DegenControlError):
    pass


class ZeroHorizon(DegenControlError):
    pass


class GroundModeMismatch(DegenControlError):
    pass


class HorizonClamped(DegenControlWarning):
    """Tolerance is so loose that the horizon formula gives T <= 0."""


# evolution
class StepTooLarge(DegenControlError):
    pass


class SolverBreakdown(DegenControlError):
    pass


# cli
class ScenarioError(DegenControlError):
    """Malformed scenario file; message carries the offending line."""


class BadInsolationFile(DegenControlError):
    pass
