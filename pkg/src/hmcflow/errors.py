"""Exception types shared across the package."""


class HMCFError(Exception):
    """Base class for all package errors."""


class ContractViolation(HMCFError, ValueError):
    """A caller broke an operation's precondition (shape, order, grid)."""


class InvalidConfig(HMCFError, ValueError):
    """Initial data or run configuration is not admissible."""


class HyperbolicityLost(HMCFError):
    """S_thth + S <= 0 somewhere: curvature is no longer finite and positive.

    ``stage`` is the Runge-Kutta stage (1-4) whose input failed, or 5 for
    the post-step validation; ``index`` is the offending grid node.
    """

    def __init__(self, message, stage=None, index=None):
        super().__init__(message)
        self.stage = stage
        self.index = index


class NumericalFailure(HMCFError):
    """NaN or Inf appeared in the state."""

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage


class NotApplicable(HMCFError):
    """The operation does not apply to this input (e.g. no collapse)."""


class TooFewRecords(HMCFError):
    """A trajectory has too few records for time differencing."""


class TimelikeViolation(HMCFError, ValueError):
    """String data violates 1 - |X_t|^2 > 0."""


class DegenerateParametrization(HMCFError):
    """|X_u| vanished at some node of a string."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index
