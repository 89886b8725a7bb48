"""
Real-world simulation scenarios built from samples with known gloss spans:
concatenation, even splits, frame replication and a half-sequence shuffle.
"""

from dataclasses import dataclass, field
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..data import VideoSample
from ..engine import make_rng
from ..errors import ConfigError, SequenceTooShortError

ScenarioKind = Literal["original", "split", "concat", "concat_all", "rand_repli", "shuffle"]


class ScenarioSpec(BaseModel):
    """Which scenario to build and its parameters"""

    model_config = ConfigDict(frozen=True)

    kind: ScenarioKind = "original"
    k: Optional[int] = None
    repli_frames: int = Field(default=5, ge=1)
    repli_copies: int = Field(default=12, ge=1)
    min_span: int = Field(default=16, ge=1)
    seed: int = Field(default=1, ge=0)

    @model_validator(mode="after")
    def _check(self) -> "ScenarioSpec":
        if self.kind in ("split", "concat") and (self.k is None or self.k < 2):
            raise ValueError(f"{self.kind} needs k >= 2")
        return self

    @classmethod
    def create(cls, **fields) -> "ScenarioSpec":
        try:
            return cls(**fields)
        except ValidationError as e:
            raise ConfigError(f"Invalid scenario: {e}") from e

    @property
    def name(self) -> str:
        if self.kind in ("split", "concat"):
            return f"{self.kind}-{self.k}"
        return self.kind


@dataclass
class ScenarioItem:
    """A frame sequence to recognize and the reference it should produce"""

    item_id: str
    frames: np.ndarray
    reference: List[int]
    sources: List[str] = field(default_factory=list)

    @classmethod
    def from_sample(cls, sample: VideoSample) -> "ScenarioItem":
        return cls(sample.sample_id, sample.frames, list(sample.y), [sample.sample_id])


def _midpoints(sample: VideoSample) -> np.ndarray:
    return np.array([(start + end) / 2.0 for start, end in sample.boundaries])


# =============================================================================
# Builders
# =============================================================================


def concat_samples(samples: Sequence[VideoSample], item_id: str) -> ScenarioItem:
    frames = np.concatenate([s.frames for s in samples], axis=0)
    reference = [label for s in samples for label in s.y]
    return ScenarioItem(item_id, frames, reference, [s.sample_id for s in samples])


def split_at(frames: np.ndarray, cut: int) -> Tuple[np.ndarray, np.ndarray]:
    return frames[:cut], frames[cut:]


def split_spans(length: int, k: int, min_span: int) -> List[Tuple[int, int]]:
    """k even cuts; spans shorter than min_span are merged into their left neighbour"""
    cuts = [int(round(j * length / k)) for j in range(k + 1)]
    spans = [(a, b) for a, b in zip(cuts, cuts[1:]) if b > a]
    merged: List[Tuple[int, int]] = []
    for span in spans:
        if merged and span[1] - span[0] < min_span:
            merged[-1] = (merged[-1][0], span[1])
        else:
            merged.append(span)
    # a short first span joins the one after it
    if len(merged) > 1 and merged[0][1] - merged[0][0] < min_span:
        merged[1] = (merged[0][0], merged[1][1])
        merged.pop(0)
    return merged


def split_sample(sample: VideoSample, k: int, min_span: int) -> List[ScenarioItem]:
    """Even split; each piece is scored against the glosses whose span midpoint it contains"""
    t = sample.num_frames
    spans = split_spans(t, k, min_span)
    if len(spans) < k:
        logger.warning(f"{sample.sample_id}: split-{k} merged into {len(spans)} pieces of at least {min_span} frames")

    mids = _midpoints(sample)
    pieces: List[Tuple[Tuple[int, int], List[int]]] = []
    for start, end in spans:
        inside = (mids >= start) & (mids < end)
        reference = [label for label, hit in zip(sample.y, inside) if hit]
        if not reference and pieces:
            # no gloss centred here, fold into the previous piece
            (p_start, _), p_ref = pieces[-1]
            pieces[-1] = ((p_start, end), p_ref)
            logger.warning(f"{sample.sample_id}: piece [{start}, {end}) holds no gloss centre, merged")
        else:
            pieces.append(((start, end), reference))
    if len(pieces) > 1 and not pieces[0][1]:
        (start, _), _ = pieces[0]
        (_, end), ref = pieces[1]
        pieces[1] = ((start, end), ref)
        pieces.pop(0)

    return [
        ScenarioItem(f"{sample.sample_id}/split{k}.{j}", sample.frames[start:end], reference, [sample.sample_id])
        for j, ((start, end), reference) in enumerate(pieces)
    ]


def replicate_frames(sample: VideoSample, frames: int, copies: int, seed: int, index: int) -> ScenarioItem:
    """Replace `frames` seeded positions by `copies` copies each; the reference is unchanged"""
    t = sample.num_frames
    if t < frames:
        raise SequenceTooShortError(t, frames)
    rng = make_rng(seed, "repli", index)
    positions = np.sort(rng.choice(t, size=frames, replace=False))
    repeats = np.ones(t, dtype=np.int64)
    repeats[positions] = copies
    return ScenarioItem(
        f"{sample.sample_id}/repli",
        np.repeat(sample.frames, repeats, axis=0),
        list(sample.y),
        [sample.sample_id],
    )


def shuffle_sample(sample: VideoSample) -> ScenarioItem:
    """Cut at t/2 and insert the second half at the middle of the first half"""
    t = sample.num_frames
    half = t // 2
    middle = half // 2
    order = np.concatenate([np.arange(0, middle), np.arange(half, t), np.arange(middle, half)])

    position = np.empty(t, dtype=np.int64)
    position[order] = np.arange(t)
    mids = np.minimum(np.floor(_midpoints(sample)).astype(np.int64), t - 1)
    ranked = sorted(range(len(sample.y)), key=lambda g: (position[mids[g]], g))
    return ScenarioItem(
        f"{sample.sample_id}/shuffle",
        sample.frames[order],
        [sample.y[g] for g in ranked],
        [sample.sample_id],
    )


def make_scenario(samples: Sequence[VideoSample], spec: ScenarioSpec) -> List[ScenarioItem]:
    """Scenario items from samples in the given order"""
    samples = list(samples)
    if spec.kind == "original":
        return [ScenarioItem.from_sample(s) for s in samples]
    if spec.kind == "concat":
        return [
            concat_samples(samples[i : i + spec.k], f"concat{spec.k}.{i // spec.k:05d}")
            for i in range(0, len(samples), spec.k)
        ]
    if spec.kind == "concat_all":
        return [concat_samples(samples, "concat_all")] if samples else []
    if spec.kind == "split":
        return [item for s in samples for item in split_sample(s, spec.k, spec.min_span)]
    if spec.kind == "rand_repli":
        return [
            replicate_frames(s, spec.repli_frames, spec.repli_copies, spec.seed, i) for i, s in enumerate(samples)
        ]
    if spec.kind == "shuffle":
        return [shuffle_sample(s) for s in samples]
    raise ConfigError(f"Unknown scenario kind '{spec.kind}'")


BATTERY: Tuple[ScenarioSpec, ...] = (
    ScenarioSpec(kind="original"),
    ScenarioSpec(kind="split", k=2),
    ScenarioSpec(kind="split", k=3),
    ScenarioSpec(kind="concat", k=2),
    ScenarioSpec(kind="concat", k=3),
    ScenarioSpec(kind="rand_repli"),
    ScenarioSpec(kind="shuffle"),
    ScenarioSpec(kind="concat_all"),
)
