"""Exception and warning types shared across the package."""


class CocycleError(Exception):
    """Base class for every structured failure raised by this package."""


class RationalInput(CocycleError):
    """The frequency is rational at the first two partial quotients."""


class NonFinite(CocycleError, ValueError):
    pass


class BandwidthOverflow(CocycleError):
    """Adaptive resampling needed more Fourier modes than the configured cap."""


class SingularMatrix(CocycleError):
    pass


class DegenerateNorm(CocycleError):
    pass


class NotNearRotation(CocycleError):
    """det(A - Q(A)) fell below the floor somewhere on the grid."""


class NonConvergent(CocycleError):
    pass


class PreconditionFailed(CocycleError):
    """A quantitative hypothesis of a conjugation step does not hold.

    ``details`` carries the measured quantities so callers can report them.
    """

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details


class LogDiverges(PreconditionFailed):
    pass


class ResonantAngle(PreconditionFailed):
    pass


class NoContraction(CocycleError):
    pass


class ResonanceBlocked(CocycleError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NumericalFailure(CocycleError):
    pass


class SmallDivisorWarning(RuntimeWarning):
    pass
