"""
Temporal and spatial data augmentation.

Temporal resampling returns the source frame index of every output frame
so cached alignment proposals can be carried onto the resampled view.
"""

from typing import Optional, Tuple

import numpy as np
from loguru import logger
from PIL import Image

from ..errors import DimensionError

TEMPORAL_CHOICES = (1, -1, 0)


def temporal_index_map(length: int, new_length: int) -> np.ndarray:
    """Evenly spaced source indices: duplicates when stretching, drops when shrinking"""
    positions = (np.arange(new_length) + 0.5) * (length / new_length)
    return np.minimum(np.floor(positions).astype(np.int64), length - 1)


def choose_temporal_factor(rng: np.random.Generator, magnitude: float) -> float:
    """+magnitude, -magnitude or 0 with equal probability"""
    return float(TEMPORAL_CHOICES[int(rng.integers(0, len(TEMPORAL_CHOICES)))] * magnitude)


def temporal_augment(frames: np.ndarray, factor: float, window: int = 16) -> Tuple[np.ndarray, np.ndarray]:
    """Rescale the sequence to round(t * (1 + factor)) frames.

    Falls back to the identity when the rescaled length would drop below
    one window.
    """
    t = frames.shape[0]
    new_length = int(round(t * (1.0 + factor)))
    if factor == 0.0 or new_length == t:
        return frames, np.arange(t)
    if new_length < window:
        logger.debug(f"Temporal factor {factor:+.2f} would leave {new_length} < {window} frames, skipped")
        return frames, np.arange(t)
    index_map = temporal_index_map(t, new_length)
    return frames[index_map], index_map


def _resize_frames(frames: np.ndarray, size: int) -> np.ndarray:
    """Bilinear resize of every (t, c) plane to size x size"""
    t, c, h, w = frames.shape
    if (h, w) == (size, size):
        return frames
    out = np.empty((t, c, size, size), dtype=np.float32)
    for i in range(t):
        for ch in range(c):
            plane = Image.fromarray(np.ascontiguousarray(frames[i, ch], dtype=np.float32))
            out[i, ch] = np.asarray(plane.resize((size, size), Image.Resampling.BILINEAR), dtype=np.float32)
    return out


def spatial_augment(
    frames: np.ndarray,
    train: bool,
    rng: Optional[np.random.Generator] = None,
    resize: int = 36,
    crop: int = 32,
) -> np.ndarray:
    """Resize to resize x resize, then crop crop x crop.

    Training takes one random crop position for the whole sample, evaluation
    takes the centre. resize=0 skips the resize and only crops.
    """
    if frames.ndim != 4:
        raise DimensionError(f"Frames must be (t, c, h, w), got {frames.shape}")
    if resize:
        frames = _resize_frames(frames, resize)
    h, w = frames.shape[2:]
    if crop > h or crop > w:
        raise DimensionError(f"Crop {crop} larger than frames {h}x{w}")

    if train:
        if rng is None:
            raise ValueError("Random crop needs a generator")
        top = int(rng.integers(0, h - crop + 1))
        left = int(rng.integers(0, w - crop + 1))
    else:
        top, left = (h - crop) // 2, (w - crop) // 2
    return np.ascontiguousarray(frames[:, :, top : top + crop, left : left + crop])


def eval_view(frames: np.ndarray, resize: int, crop: int) -> np.ndarray:
    """Deterministic centre view used for proposals, evaluation and streaming"""
    return spatial_augment(frames, train=False, resize=resize, crop=crop)
