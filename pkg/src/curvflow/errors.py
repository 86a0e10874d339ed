"""Exception hierarchy shared by all curvflow modules."""


class CurvFlowError(Exception):
    """Base class; the CLI maps any subclass to exit code 2."""


class ConeViolation(CurvFlowError, ValueError):
    """A curvature vector lies outside the cone a function is defined on."""


class DomainError(CurvFlowError, ValueError):
    pass


class StiffFailure(CurvFlowError, RuntimeError):
    """Adaptive step size underflowed before the target was reached."""


class ConvexityLost(CurvFlowError, RuntimeError):
    """A principal radius of curvature of a support profile became non-positive."""


class StepTooLarge(CurvFlowError, ValueError):
    pass


class NotAchievable(CurvFlowError, RuntimeError):
    """No pinching ratio in (0, 1] makes the absorption constant non-positive."""


class Unclassified(CurvFlowError, ValueError):
    """The speed function is neither convex nor concave on the sampled cone."""


class ConfigInvalid(CurvFlowError, ValueError):
    def __init__(self, key, message=""):
        self.key = key
        super().__init__(f"invalid config key {key!r}" + (f": {message}" if message else ""))
