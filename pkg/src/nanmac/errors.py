"""Exception types shared across the package."""


class NanmacError(Exception):
    """Base class for all package errors."""


class DomainError(NanmacError, ValueError):
    """Argument outside the domain of a model formula."""


class DecodeInfeasible(NanmacError):
    """Noise alone already violates the SINR threshold at this distance."""


class InvalidRoot(NanmacError, ValueError):
    pass


class InvalidLength(NanmacError, ValueError):
    pass


class LengthMismatch(NanmacError, ValueError):
    pass


class EmptyCodebook(NanmacError, ValueError):
    pass


class PastEvent(NanmacError):
    """An event was scheduled before the current simulation clock."""


class UnknownNode(NanmacError, KeyError):
    pass


class NotAssociated(NanmacError):
    pass


class MeterFailed(NanmacError):
    pass


class OutOfOrder(NanmacError):
    """Metrics event timestamp went backwards."""


class AllZero(NanmacError, ValueError):
    pass


class UnknownPreset(NanmacError, KeyError):
    pass


class ConfigError(NanmacError, ValueError):
    """Invalid scenario or command-line configuration (exit code 2)."""


class InvariantViolation(NanmacError):
    """A runtime protocol invariant failed (exit code 3)."""
