"""Shared exception hierarchy.

Everything user-visible derives from SstkitError so the CLI can map domain
failures to exit code 1 without catching unrelated bugs.
"""


class SstkitError(Exception):
    """Base class for all domain errors raised by this package."""


class EncodingError(SstkitError):
    """Input bytes are not valid UTF-8."""


class ConfigError(SstkitError):
    """A configuration value or referenced file is invalid or missing."""


class AudioFormatError(SstkitError):
    """Audio payload is not mono 16-bit PCM RIFF WAVE at a supported rate."""


class UnsupportedSymbolError(SstkitError):
    """Text contains a symbol outside the tone codec alphabet."""

    def __init__(self, symbol: str):
        super().__init__(f"symbol not in codec alphabet: {symbol!r}")
        self.symbol = symbol


class StageError(SstkitError):
    """A pipeline stage failed; carries the stage name for error propagation."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage '{stage}' failed: {message}")
        self.stage = stage


class BackendError(SstkitError):
    """Remote embedding backend unreachable or failing; carries batch index."""

    def __init__(self, message: str, batch_index: int | None = None):
        super().__init__(message)
        self.batch_index = batch_index


class ProtocolError(SstkitError):
    """Remote embedding backend violated the wire contract (e.g. dim change)."""


class SizeError(SstkitError):
    """An input exceeds a configured size cap."""


class StartupError(SstkitError):
    """A service component failed to start."""


class UnavailableError(SstkitError):
    """The replica pool has been shut down."""
