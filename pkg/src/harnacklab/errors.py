"""Exception types shared across the package."""


class HarnackLabError(Exception):
    """Base class for all errors raised by harnacklab."""


class ConfigError(HarnackLabError, ValueError):
    """Invalid user input: bad geometry parameters, malformed config, forbidden coefficients."""


class SingularTimeError(ConfigError):
    """Evaluation requested at or beyond the first singular time of a flow."""


class NumericalFailure(HarnackLabError):
    """The integrator lost positivity or produced non-finite values.

    ``t`` is the time at which the failure was detected.
    """

    def __init__(self, message, t):
        super().__init__(f"{message} (t={t:.6g})")
        self.t = t


class HypothesisViolation(HarnackLabError):
    """A theorem's hypotheses fail on the given scenario, so its conclusion is not monitored."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
