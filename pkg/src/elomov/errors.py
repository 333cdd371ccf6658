"""Exception hierarchy shared across the package."""


class EloMovError(Exception):
    """Base class for all package errors."""


class DataError(EloMovError):
    """Malformed or inconsistent match data."""

    def __init__(self, message, rows=None):
        super().__init__(message)
        self.rows = list(rows or [])


class EstimationError(EloMovError):
    """Coefficients cannot be estimated from the supplied data."""


class ZeroFrequencyError(EstimationError):
    """A discretization category was never observed."""

    def __init__(self, categories):
        self.categories = list(categories)
        super().__init__(
            f"categories {self.categories} have zero frequency; use a coarser "
            "scheme, more seasons, or additive smoothing"
        )


class DegenerateHFAError(EstimationError):
    """Home and away extreme categories are equally frequent (eta == 0)."""


class NonMonotoneDeltaError(EstimationError):
    """Estimated delta coefficients are not strictly increasing."""
