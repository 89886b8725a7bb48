"""
Dataset data structures: samples, manifest records and the generator configuration
"""

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..errors import ConfigError

GENERATOR_VERSION = "synth-v2"

SPLIT_POLICIES = ("unseen-sentences", "unseen-signers")

Span = Tuple[int, int]


@dataclass
class VideoSample:
    """Frames (t, c, h, w) in [0, 1] plus the target glosses and their frame spans"""

    sample_id: str
    frames: np.ndarray
    y: List[int]
    boundaries: List[Span] = field(default_factory=list)
    signer_id: int = 0
    speed: float = 1.0

    @property
    def num_frames(self) -> int:
        return int(self.frames.shape[0])

    def boundaries_valid(self) -> bool:
        """Sorted, disjoint, covering [0, t), one span per gloss"""
        if len(self.boundaries) != len(self.y):
            return False
        cursor = 0
        for start, end in self.boundaries:
            if start != cursor or end <= start:
                return False
            cursor = end
        return cursor == self.num_frames


@dataclass
class SampleRecord:
    """One manifest line: where a sample's frames live and what they show"""

    sample_id: str
    path: str
    y: List[int]
    boundaries: List[Span]
    signer_id: int
    speed: float
    split: str
    num_frames: int
    sentence_id: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "type": "sample",
            "sample_id": self.sample_id,
            "path": self.path,
            "y": list(self.y),
            "boundaries": [list(span) for span in self.boundaries],
            "signer_id": self.signer_id,
            "speed": self.speed,
            "split": self.split,
            "num_frames": self.num_frames,
            "sentence_id": self.sentence_id,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SampleRecord":
        return cls(
            sample_id=data["sample_id"],
            path=data["path"],
            y=[int(v) for v in data["y"]],
            boundaries=[(int(a), int(b)) for a, b in data["boundaries"]],
            signer_id=int(data["signer_id"]),
            speed=float(data["speed"]),
            split=data["split"],
            num_frames=int(data["num_frames"]),
            sentence_id=int(data.get("sentence_id", 0)),
        )


@dataclass
class DatasetManifest:
    """Vocabulary, generator provenance and the sample records of one split policy"""

    vocab: List[str]
    samples: List[SampleRecord]
    seed: int
    policy: str
    version: str = GENERATOR_VERSION
    name: str = "synth-v1"
    root: Optional[Path] = None

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def split(self, tag: str) -> List[SampleRecord]:
        return [record for record in self.samples if record.split == tag]

    @property
    def splits(self) -> List[str]:
        return sorted({record.split for record in self.samples})

    def header(self) -> Dict[str, Any]:
        return {
            "type": "header",
            "name": self.name,
            "version": self.version,
            "seed": self.seed,
            "policy": self.policy,
            "vocab": list(self.vocab),
        }

    def gloss_names(self, labels: List[int]) -> List[str]:
        return [self.vocab[label] for label in labels]

    def digest(self) -> str:
        """sha256 of the header and records, independent of where the files live"""
        h = hashlib.sha256()
        h.update(json.dumps(self.header(), sort_keys=True).encode("utf-8"))
        for record in self.samples:
            h.update(json.dumps(record.to_dict(), sort_keys=True).encode("utf-8"))
        return h.hexdigest()

    def resolve(self, record: SampleRecord) -> Path:
        return (self.root or Path(".")) / record.path


class DatasetConfig(BaseModel):
    """Size and randomness of a generated benchmark"""

    model_config = ConfigDict(frozen=True)

    name: str = "synth-v1"
    vocab_size: int = Field(default=12, ge=2)
    train_sentences: int = Field(default=300, ge=1)
    test_sentences: int = Field(default=60, ge=1)
    signer_sentences: int = Field(default=60, ge=1)
    train_signers: List[int] = Field(default_factory=lambda: [0, 1, 2, 3, 4])
    test_signers: List[int] = Field(default_factory=lambda: [5])
    min_length: int = Field(default=2, ge=1)
    max_length: int = Field(default=5, ge=1)
    min_speed: float = Field(default=0.8, gt=0.0)
    max_speed: float = Field(default=1.2, gt=0.0)
    channels: int = 3
    height: int = 32
    width: int = 32
    window: int = 16
    stride: int = 4
    policies: List[str] = Field(default_factory=lambda: list(SPLIT_POLICIES))
    seed: int = Field(default=1, ge=0)

    @model_validator(mode="after")
    def _check(self) -> "DatasetConfig":
        if self.min_length > self.max_length:
            raise ValueError("min_length must not exceed max_length")
        if self.min_speed > self.max_speed:
            raise ValueError("min_speed must not exceed max_speed")
        unknown = [p for p in self.policies if p not in SPLIT_POLICIES]
        if unknown:
            raise ValueError(f"Unknown split policies {unknown}, expected {SPLIT_POLICIES}")
        if set(self.train_signers) & set(self.test_signers):
            raise ValueError("Train and test signers must be disjoint")
        if not self.train_signers or not self.test_signers:
            raise ValueError("Both splits need at least one signer")
        return self

    @classmethod
    def create(cls, **fields: Any) -> "DatasetConfig":
        try:
            return cls(**fields)
        except ValidationError as e:
            raise ConfigError(f"Invalid dataset configuration: {e}") from e
