"""Exception hierarchy shared across the engine."""


class ToneLutError(Exception):
    """Base class for all engine errors."""


class DimensionError(ToneLutError):
    """Shape or size mismatch between arguments."""


class InvalidCoordinatesError(ToneLutError):
    """Sampling coordinates violate the monotone/endpoint contract."""


class UnknownTextError(ToneLutError):
    """Text token not resolvable by the embedding provider."""

    def __init__(self, text, available=()):
        self.text = text
        self.available = tuple(available)
        msg = f"unknown text {text!r}"
        if self.available:
            msg += "; available: " + ", ".join(sorted(self.available))
        super().__init__(msg)


class FormatError(ToneLutError):
    """Malformed file content; carries a position when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TrainingError(ToneLutError):
    """Non-finite loss/gradient or invalid training configuration."""
