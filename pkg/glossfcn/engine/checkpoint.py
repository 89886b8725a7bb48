"""
Parameter checkpoint file (little-endian):

    magic "GFW1", u32 array count, then per array
    u16 name length, UTF-8 name, u8 rank, u32 extents, raw float32 values
"""

import struct
from pathlib import Path
from typing import Dict, Mapping, Union

import numpy as np

from ..errors import FormatError

MAGIC = b"GFW1"


def save_checkpoint(path: Union[str, Path], arrays: Mapping[str, np.ndarray]) -> None:
    """Write named arrays in the given order"""
    chunks = [MAGIC, struct.pack("<I", len(arrays))]
    for name, value in arrays.items():
        encoded = name.encode("utf-8")
        value = np.asarray(value)
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<B", value.ndim))
        chunks.append(struct.pack(f"<{value.ndim}I", *value.shape))
        chunks.append(np.ascontiguousarray(value, dtype="<f4").tobytes())
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_bytes(b"".join(chunks))


class ByteReader:
    """Bounds-checked cursor over a byte buffer"""

    def __init__(self, buffer: bytes, path: str):
        self.buffer = buffer
        self.path = path
        self.offset = 0

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.buffer):
            raise FormatError("Unexpected end of file", self.path, self.offset)
        chunk = self.buffer[self.offset : self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def load_checkpoint(path: Union[str, Path]) -> Dict[str, np.ndarray]:
    """Read a checkpoint back into float32 arrays keyed by name"""
    path = str(path)
    reader = ByteReader(Path(path).read_bytes(), path)
    if reader.take(4) != MAGIC:
        raise FormatError("Bad checkpoint magic, expected GFW1", path, 0)

    (count,) = reader.unpack("<I")
    arrays: Dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = reader.unpack("<H")
        start = reader.offset
        try:
            name = reader.take(name_len).decode("utf-8")
        except UnicodeDecodeError:
            raise FormatError("Array name is not valid UTF-8", path, start)
        (rank,) = reader.unpack("<B")
        shape = reader.unpack(f"<{rank}I") if rank else ()
        size = int(np.prod(shape)) if rank else 1
        data = np.frombuffer(reader.take(4 * size), dtype="<f4").astype(np.float32)
        arrays[name] = data.reshape(shape)

    if reader.offset != len(reader.buffer):
        raise FormatError("Trailing bytes after last array", path, reader.offset)
    return arrays
