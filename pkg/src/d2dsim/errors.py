"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A function argument is outside its documented domain."""


class ConfigError(ValueError):
    """An experiment config file is missing, malformed, or inconsistent."""


class NumericalError(RuntimeError):
    """A numerical routine failed to converge or hit a singular input."""


class InfeasibleError(NumericalError):
    """No operating point satisfies the requested constraint."""


class ApproximationWarning(UserWarning):
    """An input is outside the regime where an analytic approximation is tight."""
