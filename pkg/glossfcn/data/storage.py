"""
Frame files, the JSON Lines manifest and a lazy sample store.

Frame file (little-endian): magic "GLS1", u32 t, c, h, w, then t*c*h*w
float32 values in row-major (t, c, h, w) order.
"""

import json
import struct
from pathlib import Path
from typing import BinaryIO, Iterator, List, Optional, Tuple, Union

import numpy as np
from loguru import logger

from ..errors import FormatError
from .models import DatasetManifest, SampleRecord, VideoSample

MAGIC = b"GLS1"
HEADER = struct.Struct("<4I")
HEADER_SIZE = len(MAGIC) + HEADER.size

PathLike = Union[str, Path]


# =============================================================================
# Frame files
# =============================================================================


def encode_frames(frames: np.ndarray) -> bytes:
    frames = np.asarray(frames)
    if frames.ndim != 4:
        raise FormatError(f"Frames must be (t, c, h, w), got shape {frames.shape}")
    return MAGIC + HEADER.pack(*frames.shape) + np.ascontiguousarray(frames, dtype="<f4").tobytes()


def write_sample(path: PathLike, sample: Union[VideoSample, np.ndarray]) -> None:
    """Write the frames of a sample (or a bare frame array) as a GLS1 file"""
    frames = sample.frames if isinstance(sample, VideoSample) else sample
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_bytes(encode_frames(frames))


def decode_frames(buffer: bytes, path: str = "<bytes>") -> np.ndarray:
    if len(buffer) < len(MAGIC) or buffer[: len(MAGIC)] != MAGIC:
        raise FormatError("Bad frame file magic, expected GLS1", path, 0)
    if len(buffer) < HEADER_SIZE:
        raise FormatError("Frame file header is truncated", path, len(buffer))
    shape = HEADER.unpack_from(buffer, len(MAGIC))
    expected = HEADER_SIZE + 4 * int(np.prod(shape))
    if len(buffer) < expected:
        raise FormatError(f"Frame data truncated, expected {expected} bytes", path, len(buffer))
    if len(buffer) > expected:
        raise FormatError("Trailing bytes after frame data", path, expected)
    data = np.frombuffer(buffer, dtype="<f4", offset=HEADER_SIZE)
    return data.astype(np.float32).reshape(shape)


def read_frames(path: PathLike) -> np.ndarray:
    return decode_frames(Path(path).read_bytes(), str(path))


def read_sample(path: PathLike, record: Optional[SampleRecord] = None) -> VideoSample:
    """Frames from disk, with targets and spans from the manifest record when given"""
    frames = read_frames(path)
    if record is None:
        return VideoSample(sample_id=Path(path).stem, frames=frames, y=[])
    if frames.shape[0] != record.num_frames:
        raise FormatError(f"Manifest says {record.num_frames} frames, file holds {frames.shape[0]}", str(path))
    return VideoSample(
        sample_id=record.sample_id,
        frames=frames,
        y=list(record.y),
        boundaries=list(record.boundaries),
        signer_id=record.signer_id,
        speed=record.speed,
    )


class FrameStreamReader:
    """Reads a GLS1 stream one frame at a time from a binary file object"""

    def __init__(self, stream: BinaryIO, name: str = "<stream>"):
        self.stream = stream
        self.name = name
        self.offset = 0
        self.shape: Optional[Tuple[int, int, int, int]] = None

    def _read_exact(self, size: int, what: str) -> bytes:
        chunk = self.stream.read(size)
        if chunk is None:
            chunk = b""
        if len(chunk) != size:
            raise FormatError(f"Stream ended inside {what}", self.name, self.offset + len(chunk))
        self.offset += size
        return chunk

    def read_header(self) -> Tuple[int, int, int, int]:
        if self.shape is None:
            if self._read_exact(len(MAGIC), "magic") != MAGIC:
                raise FormatError("Bad frame stream magic, expected GLS1", self.name, 0)
            self.shape = HEADER.unpack(self._read_exact(HEADER.size, "header"))
        return self.shape

    def __iter__(self) -> Iterator[np.ndarray]:
        t, c, h, w = self.read_header()
        frame_bytes = 4 * c * h * w
        for index in range(t):
            chunk = self._read_exact(frame_bytes, f"frame {index}")
            yield np.frombuffer(chunk, dtype="<f4").astype(np.float32).reshape(c, h, w)


# =============================================================================
# Manifest
# =============================================================================


def write_manifest(path: PathLike, manifest: DatasetManifest) -> None:
    lines = [json.dumps(manifest.header(), sort_keys=True)]
    lines.extend(json.dumps(record.to_dict(), sort_keys=True) for record in manifest.samples)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_manifest(path: PathLike) -> DatasetManifest:
    """Parse a manifest; relative frame paths resolve against its directory"""
    path = Path(path)
    header = None
    records: List[SampleRecord] = []
    offset = 0
    for line in path.read_bytes().splitlines(keepends=True):
        text = line.decode("utf-8", errors="replace").strip()
        if text:
            try:
                entry = json.loads(text)
                if header is None:
                    if entry.get("type") != "header":
                        raise FormatError("Manifest must start with a header line", str(path), offset)
                    header = entry
                else:
                    records.append(SampleRecord.from_dict(entry))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                if isinstance(e, FormatError):
                    raise
                raise FormatError(f"Malformed manifest line: {e}", str(path), offset)
        offset += len(line)

    if header is None:
        raise FormatError("Manifest is empty", str(path), 0)
    return DatasetManifest(
        vocab=list(header["vocab"]),
        samples=records,
        seed=int(header["seed"]),
        policy=header.get("policy", ""),
        version=header.get("version", ""),
        name=header.get("name", ""),
        root=path.parent,
    )


# =============================================================================
# Lazy store
# =============================================================================


class SampleStore:
    """Manifest-backed access that reads frames from disk only when asked"""

    def __init__(self, manifest: DatasetManifest):
        self.manifest = manifest
        self._by_id = {record.sample_id: record for record in manifest.samples}

    @classmethod
    def open(cls, manifest_path: PathLike) -> "SampleStore":
        manifest = read_manifest(manifest_path)
        logger.info(f"Opened {manifest.name}/{manifest.policy}: {len(manifest.samples)} samples")
        return cls(manifest)

    def __len__(self) -> int:
        return len(self.manifest.samples)

    def records(self, split: Optional[str] = None) -> List[SampleRecord]:
        return self.manifest.samples if split is None else self.manifest.split(split)

    def record(self, sample_id: str) -> SampleRecord:
        return self._by_id[sample_id]

    def load(self, record: Union[SampleRecord, str]) -> VideoSample:
        if isinstance(record, str):
            record = self._by_id[record]
        return read_sample(self.manifest.resolve(record), record)

    def iter_samples(self, split: Optional[str] = None) -> Iterator[VideoSample]:
        for record in self.records(split):
            yield self.load(record)
