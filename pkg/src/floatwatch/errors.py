"""Exception hierarchy. Every error raised on purpose derives from FloatwatchError."""

from __future__ import annotations


class FloatwatchError(Exception):
    pass


# imaging / features
class ChannelMismatch(FloatwatchError, ValueError):
    pass


class OutOfBounds(FloatwatchError, ValueError):
    pass


class EmptyRegion(FloatwatchError, ValueError):
    pass


class DegenerateInput(FloatwatchError, ValueError):
    pass


# motion
class DimensionMismatch(FloatwatchError, ValueError):
    pass


class SequenceOrder(FloatwatchError, ValueError):
    pass


class BadThreshold(FloatwatchError, ValueError):
    pass


class UninitializedModel(FloatwatchError, RuntimeError):
    pass


# detect / service
class BackendUnavailable(FloatwatchError, ConnectionError):
    pass


class BackendProtocol(FloatwatchError, ValueError):
    pass


class ConfigError(FloatwatchError, ValueError):
    pass


# ingest
class EndOfStream(FloatwatchError):
    """Raised by ``FrameSource.next_frame`` once the stream is exhausted."""


class SourceNotFound(FloatwatchError, FileNotFoundError):
    pass


class BindFailed(FloatwatchError, OSError):
    pass


class ConnectFailed(FloatwatchError, ConnectionError):
    pass


class FormatUnrecognized(FloatwatchError, ValueError):
    pass


class DecodeError(FloatwatchError, ValueError):
    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ProtocolError(FloatwatchError, ValueError):
    pass


# synth
class BadScenario(FloatwatchError, ValueError):
    pass
