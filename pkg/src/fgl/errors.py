"""Exception and warning types shared across the package."""


class DomainError(ValueError):
    """A parameter lies outside the range where a formula is defined."""


class ContractError(ValueError):
    """An argument violates a shape or regularity precondition."""


class InputError(ValueError):
    """User-supplied data (initial conditions, grids, configs) is unusable."""


class ConfigError(InputError):
    """Configuration could not be parsed or failed validation.

    ``problems`` lists every violation found, not only the first.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class NonConvergenceError(RuntimeError):
    """The fixed-point iteration hit ``max_iter`` without meeting ``tol``."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class LossOfPrecisionWarning(RuntimeWarning):
    """Cancellation in a summation may have destroyed significant digits."""
