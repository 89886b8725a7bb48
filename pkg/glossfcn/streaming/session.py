"""
Constant-memory online recognition.

Frames are encoded one at a time. The last `window` frame features are
kept; each time a first-level window completes, G1 runs on exactly that
window and its output joins a ring of 2 * context + 1 gloss features. A
gloss step is emitted once its right-hand context has arrived, and the
rest are flushed by finish() with zero context, as the offline "same"
padding does.
"""

from collections import deque
from dataclasses import dataclass
from typing import Deque, Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from ..ctc import CollapseState
from ..engine import Tensor, conv1d, no_grad, relu
from ..engine.functional import batchnorm
from ..errors import DimensionError, UsageError
from ..model import Mode, Recognizer, decode_head, encode_frames, encode_gloss_level1
from ..training.augment import eval_view


@dataclass
class Emission:
    """One prediction row released by the session"""

    step: int
    frame: int
    row: np.ndarray
    label: Optional[int] = None
    word: Optional[str] = None


class StreamSession:
    """Incremental greedy recognition over a pushed frame stream"""

    def __init__(
        self,
        model: Recognizer,
        vocab: Optional[Sequence[str]] = None,
        preprocess: bool = True,
        keep_rows: bool = False,
    ):
        self.model = model
        self.config = model.config
        self.vocab = list(vocab) if vocab is not None else None
        self.preprocess = preprocess
        self.keep_rows = keep_rows

        self.context = self.config.g2_context
        self._features: Deque[np.ndarray] = deque(maxlen=self.config.window)
        self._gloss: Deque[Tuple[int, np.ndarray]] = deque(maxlen=2 * self.context + 1)
        self._collapse = CollapseState(self.config.blank)

        self.frames_seen = 0
        self.steps_encoded = 0
        self.emitted_steps = 0
        self.partial_hypothesis: List[int] = []
        self.rows: List[np.ndarray] = []
        self.finished = False
        self.high_water = {"frames": 0, "gloss": 0}

    # ── capacity ──

    @property
    def frame_capacity(self) -> int:
        return self._features.maxlen

    @property
    def gloss_capacity(self) -> int:
        return self._gloss.maxlen

    def _track(self) -> None:
        self.high_water["frames"] = max(self.high_water["frames"], len(self._features))
        self.high_water["gloss"] = max(self.high_water["gloss"], len(self._gloss))

    # ── stages ──

    def _encode_frame(self, frame: np.ndarray) -> np.ndarray:
        c, h, w = self.config.input_channels, self.config.input_height, self.config.input_width
        batch = frame[None]
        if self.preprocess:
            batch = eval_view(batch, self.config.view_resize, h)
        if batch.shape[1:] != (c, h, w):
            raise DimensionError(f"Stream frame must be ({c}, {h}, {w}) after preprocessing, got {batch.shape[1:]}")
        s = encode_frames(self.model.as_tensor(batch), self.model.params, self.config, Mode.INFER)
        return s.data[0]

    def _encode_window(self) -> np.ndarray:
        window = Tensor(np.stack(self._features))
        g = encode_gloss_level1(window, self.model.params, self.config, Mode.INFER)
        return g.data[0]

    def _head_row(self, step: int, last_step: int) -> np.ndarray:
        """Second level and CTC head for one step, zero slots outside [0, last_step]"""
        params = self.model.params
        if not self.config.use_g2:
            g2 = Tensor(self._slot(step)[None])
        else:
            zero = np.zeros(self.config.f_g, dtype=self._dtype)
            span = range(step - self.context, step + self.context + 1)
            window = np.stack([self._slot(j) if 0 <= j <= last_step else zero for j in span])
            x = conv1d(
                Tensor(window).transpose(), params["g2.conv0.weight"], params["g2.conv0.bias"], 1, self.context
            )
            x = relu(
                batchnorm(
                    x,
                    params["g2.bn0.gamma"],
                    params["g2.bn0.beta"],
                    params["g2.bn0.running_mean"],
                    params["g2.bn0.running_var"],
                    training=False,
                    eps=self.config.bn_eps,
                    channel_axis=0,
                )
            )
            g2 = x.transpose()[self.context : self.context + 1]
        return decode_head(g2, params).log_probs.data[0]

    @property
    def _dtype(self):
        return self.model.params["d_fc.weight"].dtype

    def _slot(self, step: int) -> np.ndarray:
        for index, row in self._gloss:
            if index == step:
                return row
        raise UsageError(f"Gloss step {step} is no longer buffered")

    def _emit(self, step: int, last_step: int) -> Emission:
        row = self._head_row(step, last_step)
        cls = int(np.argmax(row))
        label = self._collapse.feed(cls)
        emission = Emission(step=step, frame=self.frames_seen - 1, row=row, label=label)
        if label is not None:
            self.partial_hypothesis.append(label)
            emission.word = self.vocab[label] if self.vocab else str(label)
        if self.keep_rows:
            self.rows.append(row)
        self.emitted_steps += 1
        return emission

    # ── public API ──

    def push(self, frame: np.ndarray) -> List[Emission]:
        """Add one (c, h, w) frame; returns the steps that became decidable"""
        if self.finished:
            raise UsageError("push() after finish()")
        frame = np.asarray(frame)
        if frame.ndim != 3:
            raise DimensionError(f"Stream frames must be (c, h, w), got {frame.shape}")

        emissions = []
        with no_grad():
            self._features.append(self._encode_frame(frame))
            self.frames_seen += 1
            window, stride = self.config.window, self.config.stride
            if self.frames_seen >= window and (self.frames_seen - window) % stride == 0:
                step = self.steps_encoded
                self._gloss.append((step, self._encode_window()))
                self.steps_encoded += 1
                ready = step - self.context
                if ready >= 0:
                    emissions.append(self._emit(ready, step))
        self._track()
        return emissions

    def push_many(self, frames: np.ndarray) -> List[Emission]:
        emissions = []
        for frame in frames:
            emissions.extend(self.push(frame))
        return emissions

    def finish(self) -> List[Emission]:
        """Flush the steps still waiting for right context"""
        if self.finished:
            raise UsageError("finish() called twice")
        emissions = []
        last_step = self.steps_encoded - 1
        with no_grad():
            for step in range(self.emitted_steps, self.steps_encoded):
                emissions.append(self._emit(step, last_step))
        self.finished = True
        logger.debug(
            f"Stream finished: {self.frames_seen} frames, {self.emitted_steps} steps, "
            f"hypothesis {self.partial_hypothesis}"
        )
        return emissions

    @property
    def hypothesis(self) -> List[int]:
        return list(self.partial_hypothesis)

    def memory_report(self) -> Dict[str, int]:
        return {
            "frame_capacity": self.frame_capacity,
            "gloss_capacity": self.gloss_capacity,
            **{f"high_water_{k}": v for k, v in self.high_water.items()},
        }


def stream_decode(model: Recognizer, frames: np.ndarray, vocab: Optional[Sequence[str]] = None) -> List[int]:
    """Run a whole sequence through a fresh session and return the final hypothesis"""
    session = StreamSession(model, vocab)
    session.push_many(frames)
    session.finish()
    return session.hypothesis
