from django.core.exceptions import PermissionDenied


class PoseDeckError(Exception):
    """Base class for every error raised by the harness."""


class InvalidArgument(PoseDeckError, ValueError):
    pass


class ConfigError(PoseDeckError):
    """A config file or flag set failed validation."""

    def __init__(self, message, errors=None):
        super().__init__(message)
        self.errors = errors or {}


class OrderingError(PoseDeckError):
    """A frame arrived with a sequence number at or below the last one applied."""


class DecodeError(PoseDeckError):
    pass


class TraceFormatError(PoseDeckError):
    pass


class TraceVersionError(TraceFormatError):
    pass


class ConnectionRejected(PoseDeckError):
    pass


class PlayerPermissionDenied(PoseDeckError, PermissionDenied):
    pass


class TransitionError(PoseDeckError):
    pass


class BallotError(PoseDeckError):
    pass


class GraphError(PoseDeckError):
    def __init__(self, message, errors=None):
        super().__init__(message)
        self.errors = errors or {}


class FusionInitError(PoseDeckError):
    pass


class MeasurementError(PoseDeckError):
    pass


class ReportError(PoseDeckError):
    pass
