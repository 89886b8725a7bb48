"""
Deterministic synthetic gloss-video benchmark.

Each gloss is a procedural glyph with its own colour and trajectory; a
signer changes background brightness, glyph gain, position offset and
noise level. Every number drawn comes from a Philox stream keyed by the
dataset seed and what is being drawn, so generation is a pure function of
(config, seed).
"""

import colorsys
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from ..ctc import required_steps
from ..engine import make_rng
from ..errors import ConfigError, LabelError, UnsupportedVocabularyError
from .models import DatasetConfig, DatasetManifest, SampleRecord, VideoSample
from .storage import write_manifest, write_sample

MAX_VOCAB = 64
GLYPH_CELLS = 6

GLOSS_NAMES = (
    "HELLO", "THANKS", "PLEASE", "SORRY", "YES", "NO", "GOOD", "BAD",
    "WEATHER", "TODAY", "TOMORROW", "RAIN", "SUN", "WIND", "COLD", "WARM",
    "NORTH", "SOUTH", "EAST", "WEST", "MORNING", "EVENING", "NIGHT", "CLOUD",
    "SNOW", "STORM", "CLEAR", "FOG", "HOUSE", "SCHOOL", "WORK", "FRIEND",
    "FAMILY", "MOTHER", "FATHER", "CHILD", "EAT", "DRINK", "SLEEP", "GO",
    "COME", "SEE", "KNOW", "WANT", "HAVE", "NEED", "LIKE", "HELP",
    "BIG", "SMALL", "MANY", "FEW", "NEW", "OLD", "FAST", "SLOW",
    "WHERE", "WHAT", "WHO", "WHY", "WHEN", "HOW", "HERE", "THERE",
)


@dataclass(frozen=True)
class Glyph:
    label: int
    pattern: np.ndarray
    color: np.ndarray
    angle: float


@dataclass(frozen=True)
class SignerStyle:
    background: float
    gain: float
    offset: Tuple[int, int]
    noise: float


class GlyphBank:
    """Fixed procedural glyph set, independent of the dataset seed"""

    def __init__(self, vocab_size: int, channels: int = 3):
        if vocab_size > MAX_VOCAB:
            raise UnsupportedVocabularyError(
                f"Vocabulary of {vocab_size} glosses exceeds the {MAX_VOCAB} procedural glyphs"
            )
        self.channels = channels
        self.glyphs = [self._make_glyph(label, channels) for label in range(vocab_size)]

    @staticmethod
    def _make_glyph(label: int, channels: int) -> Glyph:
        rng = make_rng(0, "glyph", label)
        pattern = rng.random((GLYPH_CELLS, GLYPH_CELLS)) < 0.5
        # keep every glyph visibly inked
        pattern[GLYPH_CELLS // 2, :] |= label % 2 == 0
        pattern[:, GLYPH_CELLS // 2] |= label % 2 == 1
        hue = (label * 0.618033988749895) % 1.0
        rgb = np.array(colorsys.hsv_to_rgb(hue, 0.85, 0.95))
        color = rgb if channels == 3 else np.resize(rgb, channels)
        angle = 2.0 * np.pi * ((label * 0.37) % 1.0)
        return Glyph(label=label, pattern=pattern, color=color, angle=angle)

    def __len__(self) -> int:
        return len(self.glyphs)

    def render(self, label: int, phase: float, style: SignerStyle, height: int, width: int) -> np.ndarray:
        """Noise-free (c, h, w) frame of one gloss at trajectory phase in [0, 1)"""
        glyph = self.glyphs[label]
        cell = max(1, int(round(min(height, width) * 0.125)))
        mask = np.kron(glyph.pattern, np.ones((cell, cell), dtype=bool))
        size = mask.shape[0]
        radius = min(height, width) * 0.12

        theta = glyph.angle + np.pi * phase
        cy = height / 2 + radius * np.sin(theta) + style.offset[0]
        cx = width / 2 + radius * np.cos(theta) + style.offset[1]
        top = int(np.clip(round(cy - size / 2), 0, max(0, height - size)))
        left = int(np.clip(round(cx - size / 2), 0, max(0, width - size)))
        mask = mask[: height - top, : width - left]

        frame = np.full((self.channels, height, width), style.background)
        region = frame[:, top : top + mask.shape[0], left : left + mask.shape[1]]
        ink = (glyph.color * style.gain)[:, None, None]
        region[...] = np.where(mask[None], ink, region)
        return frame


def signer_style(seed: int, signer_id: int, height: int = 32, width: int = 32) -> SignerStyle:
    rng = make_rng(seed, "signer", signer_id)
    reach = max(1, int(round(min(height, width) * 0.06)))
    return SignerStyle(
        background=float(rng.uniform(0.05, 0.25)),
        gain=float(rng.uniform(0.8, 1.0)),
        offset=(int(rng.integers(-reach, reach + 1)), int(rng.integers(-reach, reach + 1))),
        noise=float(rng.uniform(0.01, 0.03)),
    )


def sentence_key(sentence: Sequence[int]) -> str:
    return "-".join(str(int(label)) for label in sentence)


def gloss_steps(num_frames: int, config: DatasetConfig) -> int:
    if num_frames < config.window:
        return 0
    return (num_frames - config.window) // config.stride + 1


def _pad_for_alignment(durations: List[int], needed: int, config: DatasetConfig) -> int:
    """Lengthen glosses round-robin until the clip has `needed` gloss steps; returns frames added"""
    added = 0
    while gloss_steps(sum(durations), config) < needed:
        durations[added % len(durations)] += 1
        added += 1
    return added


def gen_sample(
    vocab_size: int,
    sentence: Sequence[int],
    signer_id: int,
    speed: float,
    seed: int,
    sample_id: str = "",
    config: Optional[DatasetConfig] = None,
    bank: Optional[GlyphBank] = None,
) -> VideoSample:
    """Render one sentence as signed by signer_id at the given speed"""
    config = config or DatasetConfig()
    bank = bank or GlyphBank(vocab_size, config.channels)
    if vocab_size > MAX_VOCAB:
        raise UnsupportedVocabularyError(f"Vocabulary of {vocab_size} glosses exceeds {MAX_VOCAB} glyphs")
    sentence = [int(label) for label in sentence]
    if not config.min_length <= len(sentence) <= config.max_length:
        raise ConfigError(
            f"Sentence length {len(sentence)} outside [{config.min_length}, {config.max_length}]"
        )
    if min(sentence) < 0 or max(sentence) >= vocab_size:
        raise LabelError(f"Sentence {sentence} has labels outside [0, {vocab_size})")
    if speed <= 0:
        raise ConfigError(f"Speed must be positive, got {speed}")

    rng = make_rng(seed, "sample", signer_id, sentence_key(sentence))
    base = rng.integers(8, 25, size=len(sentence))
    durations = [max(1, int(np.rint(b * speed))) for b in base]
    shortfall = config.window - sum(durations)
    if shortfall > 0:
        durations[-1] += shortfall
        logger.debug(f"Extended last gloss of {sentence_key(sentence)} by {shortfall} frames")
    added = _pad_for_alignment(durations, required_steps(sentence), config)
    if added:
        logger.debug(f"Padded {sentence_key(sentence)} by {added} frames for {required_steps(sentence)} steps")

    style = signer_style(seed, signer_id, config.height, config.width)
    boundaries = []
    frames = []
    start = 0
    for label, duration in zip(sentence, durations):
        for f in range(duration):
            phase = (f + 0.5) / duration
            frames.append(bank.render(label, phase, style, config.height, config.width))
        boundaries.append((start, start + duration))
        start += duration

    clean = np.stack(frames)
    noisy = clean + rng.normal(0.0, style.noise, size=clean.shape)
    return VideoSample(
        sample_id=sample_id or f"s{signer_id}-{sentence_key(sentence)}",
        frames=np.clip(noisy, 0.0, 1.0).astype(np.float32),
        y=sentence,
        boundaries=boundaries,
        signer_id=signer_id,
        speed=float(speed),
    )


def _draw_sentences(rng: np.random.Generator, count: int, config: DatasetConfig) -> List[List[int]]:
    """count distinct sentences in draw order"""
    seen = set()
    sentences = []
    attempts = 0
    while len(sentences) < count:
        attempts += 1
        if attempts > 100 * count + 1000:
            raise ConfigError(f"Cannot draw {count} distinct sentences from {config.vocab_size} glosses")
        length = int(rng.integers(config.min_length, config.max_length + 1))
        sentence = [int(v) for v in rng.integers(0, config.vocab_size, size=length)]
        key = tuple(sentence)
        if key not in seen:
            seen.add(key)
            sentences.append(sentence)
    return sentences


def _draw_speed(rng: np.random.Generator, config: DatasetConfig) -> float:
    return round(float(rng.uniform(config.min_speed, config.max_speed)), 2)


def plan_policy(config: DatasetConfig, policy: str) -> List[Tuple[str, str, List[int], int, float, int]]:
    """(sample_id, split, sentence, signer, speed, sentence_id) for every sample of a policy"""
    plan_rng = make_rng(config.seed, "plan", policy)
    sentence_rng = make_rng(config.seed, "sentences", policy)
    plan = []

    if policy == "unseen-sentences":
        sentences = _draw_sentences(sentence_rng, config.train_sentences + config.test_sentences, config)
        signers = sorted(config.train_signers + config.test_signers)
        for index, sentence in enumerate(sentences):
            split = "train" if index < config.train_sentences else "test"
            signer = signers[int(plan_rng.integers(0, len(signers)))]
            plan.append((f"us-{split}-{index:05d}", split, sentence, signer, _draw_speed(plan_rng, config), index))

    elif policy == "unseen-signers":
        sentences = _draw_sentences(sentence_rng, config.signer_sentences, config)
        for split, signers in (("train", config.train_signers), ("test", config.test_signers)):
            for signer in signers:
                for index, sentence in enumerate(sentences):
                    sample_id = f"ss-{split}-s{signer}-{index:05d}"
                    plan.append((sample_id, split, sentence, signer, _draw_speed(plan_rng, config), index))
    else:
        raise ConfigError(f"Unknown split policy '{policy}'")
    return plan


def gen_dataset(config: DatasetConfig, out_dir: Union[str, Path]) -> Dict[str, DatasetManifest]:
    """Render every split policy of config under out_dir/<policy>/ and write its manifest"""
    out_dir = Path(out_dir)
    bank = GlyphBank(config.vocab_size, config.channels)
    vocab = list(GLOSS_NAMES[: config.vocab_size])
    manifests = {}

    for policy in config.policies:
        root = out_dir / policy
        logger.info(f"Generating {config.name} / {policy} into {root}")
        records = []
        for sample_id, split, sentence, signer, speed, sentence_id in plan_policy(config, policy):
            sample = gen_sample(config.vocab_size, sentence, signer, speed, config.seed, sample_id, config, bank)
            relative = f"frames/{sample_id}.gls"
            write_sample(root / relative, sample)
            records.append(
                SampleRecord(
                    sample_id=sample_id,
                    path=relative,
                    y=sample.y,
                    boundaries=sample.boundaries,
                    signer_id=signer,
                    speed=speed,
                    split=split,
                    num_frames=sample.num_frames,
                    sentence_id=sentence_id,
                )
            )

        manifest = DatasetManifest(
            vocab=vocab, samples=records, seed=config.seed, policy=policy, name=config.name, root=root
        )
        write_manifest(root / "manifest.jsonl", manifest)
        counts = {split: len(manifest.split(split)) for split in manifest.splits}
        logger.info(f"{policy}: {counts}, digest {manifest.digest()[:12]}")
        manifests[policy] = manifest
    return manifests
