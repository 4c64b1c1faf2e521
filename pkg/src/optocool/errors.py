"""Exception hierarchy shared by all modules."""


class OptoCoolError(Exception):
    """Base class for every error raised by this package."""


class InvalidParams(OptoCoolError, ValueError):
    pass


class NonConvergence(OptoCoolError):
    """Classical steady state did not converge (bistable or marginal drive)."""


class UnknownPreset(OptoCoolError, KeyError):
    pass


class SingularPropagation(OptoCoolError):
    pass


class ScheduleGap(InvalidParams):
    """A kappa(t) schedule does not cover the requested times or has kappa <= 0."""


class UnstableSystem(OptoCoolError):
    pass


class WeakCoupling(InvalidParams):
    pass


class BackactionDivergence(InvalidParams):
    """|G| too close to omega_m / 2: the analytic denominators vanish."""


class WindowEmpty(InvalidParams):
    pass


class TruncationLeak(OptoCoolError):
    pass


class CapExceeded(InvalidParams):
    pass


class SweepError(OptoCoolError):
    """A sweep cell failed; message carries the offending parameters."""
