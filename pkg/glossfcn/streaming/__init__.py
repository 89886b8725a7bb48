# Streaming Package
# Incremental recognition with bounded buffers

from .session import Emission, StreamSession, stream_decode

__all__ = ["Emission", "StreamSession", "stream_decode"]
