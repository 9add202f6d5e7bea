"""Exception types shared across the package."""


class MimoError(Exception):
    """Base class for numerical / detection failures."""


class RankDeficient(MimoError):
    """A factorization pivot fell below the rank tolerance."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class SingularPivot(MimoError):
    """A triangular solve or elimination hit a zero diagonal pivot."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class InvalidPower(MimoError):
    """Symbol energy or noise power is not strictly positive."""


class GuardExceeded(MimoError):
    """A search-space or combinatorial guard was exceeded."""
