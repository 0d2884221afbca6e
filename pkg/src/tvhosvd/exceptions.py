"""Exception types shared across the package."""


class ConvergenceError(RuntimeError):
    """An iterative routine failed to converge or hit a degenerate state.

    ``last_value`` carries the final iterate statistic (e.g. the last Rayleigh
    quotient) when one is available.
    """

    def __init__(self, message, last_value=None):
        super().__init__(message)
        self.last_value = last_value
