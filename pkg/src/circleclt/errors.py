"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError exits with 2,
NumericalError with 3. Library callers can catch them separately to tell
bad inputs apart from numerical breakdowns.
"""


class ConfigError(ValueError):
    """Invalid configuration, argument, or precondition violation."""


class NumericalError(RuntimeError):
    """Numerical failure: non-convergence, degenerate data, loss of positivity."""
