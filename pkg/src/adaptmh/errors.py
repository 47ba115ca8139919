"""Exception types shared across the package."""


class AdaptmhError(Exception):
    """Base class for all errors raised by this package."""


class NotSymmetric(AdaptmhError):
    """Matrix is not symmetric within the required entrywise tolerance."""


class NotPositiveDefinite(AdaptmhError):
    """Matrix has a non-positive pivot; Cholesky factorization failed."""


class DimensionMismatch(AdaptmhError):
    """Operands have incompatible shapes."""


class DomainError(AdaptmhError):
    """Scalar parameter is outside its admissible range."""


class InvalidState(AdaptmhError):
    """Chain state has zero target density (log-density is -inf)."""


class InsufficientHistory(AdaptmhError):
    """Too few samples to form the requested estimate."""


class InsufficientTraces(AdaptmhError):
    """Too few chain traces for a cross-chain diagnostic."""


class InsufficientSamples(AdaptmhError):
    """Too few post-burn-in samples for a stable estimate."""


class EmptyWindow(AdaptmhError):
    """Requested iteration window contains no trace rows."""


class ConfigError(AdaptmhError):
    """Experiment configuration is missing, malformed, or inconsistent."""


class Unavailable(AdaptmhError):
    """Requested analytic quantity has no closed form for this target."""


class BackendUnavailable(AdaptmhError):
    """Requested chain-loop backend is not importable on this system."""
