"""Exception hierarchy shared by all modules."""


class CVMDIError(Exception):
    """Base class for every error raised by this package."""


class DomainError(CVMDIError, ValueError):
    """An input lies outside the domain of the requested quantity."""


class TruncationError(DomainError):
    """The Fock cutoff cannot hold the state within the requested tolerance."""

    def __init__(self, message, required_cutoff=None):
        super().__init__(message)
        self.required_cutoff = required_cutoff


class ModelError(CVMDIError):
    """The model produced an unphysical covariance matrix."""


class InfeasibleError(CVMDIError):
    """A finder could not bracket a root or maximum."""
