"""
On-disk store of alignment proposals for one dataset split.

File layout (little-endian):

    magic "GFA1", u32 entry count, then per entry
    u16 id length, UTF-8 sample id, u32 epoch stamp, u32 k, k x u16 labels
"""

import struct
from pathlib import Path
from typing import Dict, Iterator, Optional, Union

import numpy as np
from loguru import logger

from ..engine.checkpoint import ByteReader
from ..errors import FormatError
from .models import AlignmentProposal

MAGIC = b"GFA1"


class ProposalCache:
    """Sample id -> latest alignment proposal, with epoch-stamp invalidation"""

    def __init__(self, path: Optional[Union[str, Path]] = None):
        self.path = Path(path) if path is not None else None
        self._entries: Dict[str, AlignmentProposal] = {}

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, sample_id: str) -> bool:
        return sample_id in self._entries

    def __iter__(self) -> Iterator[AlignmentProposal]:
        return iter(self._entries.values())

    def put(self, sample_id: str, path: np.ndarray, epoch: int) -> AlignmentProposal:
        proposal = AlignmentProposal(sample_id=sample_id, path=np.asarray(path, dtype=np.int64), epoch=epoch)
        self._entries[sample_id] = proposal
        return proposal

    def get(self, sample_id: str, since_epoch: Optional[int] = None) -> Optional[AlignmentProposal]:
        """Proposal for sample_id, or None if absent or stamped before since_epoch"""
        proposal = self._entries.get(sample_id)
        if proposal is None:
            return None
        if since_epoch is not None and proposal.epoch < since_epoch:
            return None
        return proposal

    def invalidate(self, before_epoch: int) -> int:
        """Drop entries stamped before before_epoch, returns how many were dropped"""
        stale = [sid for sid, p in self._entries.items() if p.epoch < before_epoch]
        for sid in stale:
            del self._entries[sid]
        return len(stale)

    def clear(self) -> None:
        self._entries.clear()

    # ── persistence ──

    def to_bytes(self) -> bytes:
        chunks = [MAGIC, struct.pack("<I", len(self._entries))]
        for proposal in self._entries.values():
            encoded = proposal.sample_id.encode("utf-8")
            chunks.append(struct.pack("<H", len(encoded)))
            chunks.append(encoded)
            chunks.append(struct.pack("<II", proposal.epoch, proposal.steps))
            chunks.append(np.ascontiguousarray(proposal.path, dtype="<u2").tobytes())
        return b"".join(chunks)

    def save(self, path: Optional[Union[str, Path]] = None) -> Path:
        target = Path(path) if path is not None else self.path
        if target is None:
            raise ValueError("No proposal cache path configured")
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(self.to_bytes())
        logger.debug(f"Saved {len(self)} proposals to {target}")
        return target

    @classmethod
    def from_bytes(cls, buffer: bytes, path: str = "<bytes>") -> "ProposalCache":
        reader = ByteReader(buffer, path)
        if reader.take(4) != MAGIC:
            raise FormatError("Bad proposal cache magic, expected GFA1", path, 0)
        cache = cls(None if path == "<bytes>" else path)
        (count,) = reader.unpack("<I")
        for _ in range(count):
            (id_len,) = reader.unpack("<H")
            start = reader.offset
            try:
                sample_id = reader.take(id_len).decode("utf-8")
            except UnicodeDecodeError:
                raise FormatError("Sample id is not valid UTF-8", path, start)
            epoch, steps = reader.unpack("<II")
            labels = np.frombuffer(reader.take(2 * steps), dtype="<u2").astype(np.int64)
            cache.put(sample_id, labels, epoch)
        if reader.offset != len(buffer):
            raise FormatError("Trailing bytes after last proposal", path, reader.offset)
        return cache

    @classmethod
    def load(cls, path: Union[str, Path]) -> "ProposalCache":
        cache = cls.from_bytes(Path(path).read_bytes(), str(path))
        logger.debug(f"Loaded {len(cache)} proposals from {path}")
        return cache
