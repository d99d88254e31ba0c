"""Frame ingestion: file formats, the FWP wire protocol and frame sources."""

from .queue import Closed, FrameQueue
from .sources import (
    DirSource,
    FrameSource,
    MemorySource,
    SourceSpec,
    TcpConnectSource,
    TcpListenSource,
    Y4MSource,
    open_source,
    parse_source_uri,
)

__all__ = [
    "Closed",
    "DirSource",
    "FrameQueue",
    "FrameSource",
    "MemorySource",
    "SourceSpec",
    "TcpConnectSource",
    "TcpListenSource",
    "Y4MSource",
    "open_source",
    "parse_source_uri",
]
