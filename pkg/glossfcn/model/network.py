"""
Fully convolutional recognizer: frame encoder S, two-level gloss encoder
G = G2 . G1, CTC head D and the gloss feature enhancement head F.
"""

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, Iterator, Mapping, Tuple, Union

import numpy as np
from loguru import logger

from ..engine import (
    Tensor,
    batchnorm,
    conv1d,
    conv2d,
    get_default_dtype,
    global_avg_pool,
    linear,
    load_checkpoint,
    log_softmax,
    make_rng,
    maxpool1d,
    maxpool2d,
    no_grad,
    relu,
    save_checkpoint,
)
from ..errors import DimensionError, FormatError, SequenceTooShortError
from .config import ModelConfig

RUNNING_STATS = (".running_mean", ".running_var")


class Mode(str, Enum):
    """Batch norm behaviour: batch statistics or running statistics"""

    TRAIN = "train"
    INFER = "infer"


@dataclass
class PredictionMap:
    """Per-step class distribution over vocabulary plus blank"""

    log_probs: Tensor

    @property
    def probs(self) -> np.ndarray:
        return np.exp(self.log_probs.data)

    @property
    def steps(self) -> int:
        return self.log_probs.shape[0]

    @property
    def num_classes(self) -> int:
        return self.log_probs.shape[1]


class ModelParams:
    """Named learned weights plus batch norm running statistics"""

    def __init__(self, tensors: Mapping[str, Tensor]):
        self.tensors: Dict[str, Tensor] = dict(tensors)

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.tensors)

    def __len__(self) -> int:
        return len(self.tensors)

    def items(self):
        return self.tensors.items()

    @staticmethod
    def is_running_stat(name: str) -> bool:
        return name.endswith(RUNNING_STATS)

    def trainable(self) -> Dict[str, Tensor]:
        """Every tensor that takes part in the l2 regularizer and the optimizer"""
        return {n: t for n, t in self.tensors.items() if not self.is_running_stat(n)}

    def zero_grad(self) -> None:
        for t in self.tensors.values():
            t.zero_grad()

    def to_arrays(self) -> Dict[str, np.ndarray]:
        return {n: t.data.copy() for n, t in self.tensors.items()}

    @classmethod
    def from_arrays(cls, arrays: Mapping[str, np.ndarray], dtype=None) -> "ModelParams":
        dtype = dtype or get_default_dtype()
        tensors = {}
        for name, value in arrays.items():
            tensors[name] = Tensor(np.asarray(value, dtype=dtype), requires_grad=not cls.is_running_stat(name))
        return cls(tensors)

    def astype(self, dtype) -> "ModelParams":
        return ModelParams.from_arrays(self.to_arrays(), dtype=dtype)

    def squared_norm(self) -> Tensor:
        """Sum of squared entries over the trainable tensors"""
        total = None
        for t in self.trainable().values():
            term = (t * t).sum()
            total = term if total is None else total + term
        return total


# =============================================================================
# Initialization
# =============================================================================


def _layer_shapes(config: ModelConfig) -> Iterator[Tuple[str, Tuple[int, ...], str]]:
    """(name, shape, kind) for every parameter in a fixed order"""
    pattern = config.s_channel_pattern
    k = config.s_filter
    for i, (c_in, c_out) in enumerate(zip(pattern, pattern[1:])):
        yield f"s.conv{i}.weight", (c_out, c_in, k, k), "weight"
        yield f"s.conv{i}.bias", (c_out,), "bias"
        yield from _bn_shapes(f"s.bn{i}", c_out)

    c_in = config.f_s
    for i, layer in enumerate(config.g1_layers):
        yield f"g1.conv{i}.weight", (config.f_g, c_in, layer.filter), "weight"
        yield f"g1.conv{i}.bias", (config.f_g,), "bias"
        yield from _bn_shapes(f"g1.bn{i}", config.f_g)
        c_in = config.f_g

    if config.use_g2:
        yield "g2.conv0.weight", (config.f_g2, config.f_g, config.g2_filter), "weight"
        yield "g2.conv0.bias", (config.f_g2,), "bias"
        yield from _bn_shapes("g2.bn0", config.f_g2)

    yield "d_fc.weight", (config.num_classes, config.head_features), "weight"
    yield "d_fc.bias", (config.num_classes,), "bias"
    yield "f_fc.weight", (config.num_classes, config.f_g), "weight"
    yield "f_fc.bias", (config.num_classes,), "bias"


def _bn_shapes(prefix: str, channels: int):
    yield f"{prefix}.gamma", (channels,), "ones"
    yield f"{prefix}.beta", (channels,), "bias"
    yield f"{prefix}.running_mean", (channels,), "zeros"
    yield f"{prefix}.running_var", (channels,), "ones"


def init_params(config: ModelConfig, seed: int = 0, dtype=None) -> ModelParams:
    """He-uniform weights, zero biases, gamma 1, beta 0, running stats (0, 1).

    Each weight draws from its own Philox stream keyed by (seed, name), so
    adding a layer does not reshuffle the others.
    """
    dtype = dtype or get_default_dtype()
    arrays = {}
    for name, shape, kind in _layer_shapes(config):
        if kind == "weight":
            fan_in = int(np.prod(shape[1:]))
            bound = np.sqrt(6.0 / fan_in)
            arrays[name] = make_rng(seed, "init", name).uniform(-bound, bound, size=shape)
        elif kind == "ones":
            arrays[name] = np.ones(shape)
        else:
            arrays[name] = np.zeros(shape)
    return ModelParams.from_arrays(arrays, dtype=dtype)


# =============================================================================
# Forward pass
# =============================================================================


def _bn(x: Tensor, params: ModelParams, prefix: str, config: ModelConfig, mode: Mode, channel_axis: int) -> Tensor:
    return batchnorm(
        x,
        params[f"{prefix}.gamma"],
        params[f"{prefix}.beta"],
        params[f"{prefix}.running_mean"],
        params[f"{prefix}.running_var"],
        training=Mode(mode) is Mode.TRAIN,
        momentum=config.bn_momentum,
        eps=config.bn_eps,
        channel_axis=channel_axis,
    )


def encode_frames(frames: Tensor, params: ModelParams, config: ModelConfig, mode: Mode = Mode.INFER) -> Tensor:
    """S: every frame through S_cnn then S_gap, (t, c, h, w) -> (t, f_s)"""
    expected = (config.input_channels, config.input_height, config.input_width)
    if frames.ndim != 4 or tuple(frames.shape[1:]) != expected or frames.shape[0] < 1:
        raise DimensionError(f"Frames must be (t, {', '.join(map(str, expected))}) with t >= 1, got {frames.shape}")

    x = frames
    pattern = config.s_channel_pattern
    for i, (c_in, c_out) in enumerate(zip(pattern, pattern[1:])):
        x = conv2d(x, params[f"s.conv{i}.weight"], params[f"s.conv{i}.bias"], stride=1, pad=config.s_pad)
        x = relu(_bn(x, params, f"s.bn{i}", config, mode, channel_axis=1))
        if c_out > c_in:
            x = maxpool2d(x, config.s_pool)
    return global_avg_pool(x)


def encode_gloss_level1(s: Tensor, params: ModelParams, config: ModelConfig, mode: Mode = Mode.INFER) -> Tensor:
    """G1: valid 1D convs and pools over time, (t, f_s) -> (k, f_g)"""
    t = s.shape[0]
    if t < config.window:
        raise SequenceTooShortError(t, config.window)

    x = s.transpose()
    for i, layer in enumerate(config.g1_layers):
        x = conv1d(x, params[f"g1.conv{i}.weight"], params[f"g1.conv{i}.bias"], stride=layer.stride, pad=layer.pad)
        x = relu(_bn(x, params, f"g1.bn{i}", config, mode, channel_axis=0))
        if layer.pool > 1:
            x = maxpool1d(x, layer.pool)

    g = x.transpose()
    assert g.shape[0] == config.steps_for(t), f"G1 produced {g.shape[0]} steps for t={t}"
    return g


def encode_gloss_level2(g: Tensor, params: ModelParams, config: ModelConfig, mode: Mode = Mode.INFER) -> Tensor:
    """G2: one 'same' padded 1D conv over neighbouring gloss steps, k is preserved"""
    if g.shape[0] < 1:
        raise DimensionError("Second level needs at least one gloss step")
    if not config.use_g2:
        return g
    x = conv1d(g.transpose(), params["g2.conv0.weight"], params["g2.conv0.bias"], stride=1, pad=config.g2_context)
    x = relu(_bn(x, params, "g2.bn0", config, mode, channel_axis=0))
    return x.transpose()


def decode_head(g2: Tensor, params: ModelParams) -> PredictionMap:
    """D: fully connected cast to u classes then softmax"""
    return PredictionMap(log_softmax(linear(g2, params["d_fc.weight"], params["d_fc.bias"])))


def gfe_head(g: Tensor, params: ModelParams) -> PredictionMap:
    """F: fully connected cast of the first level features to u classes then softmax"""
    return PredictionMap(log_softmax(linear(g, params["f_fc.weight"], params["f_fc.bias"])))


def forward_full(
    frames: Tensor, params: ModelParams, config: ModelConfig, mode: Mode = Mode.INFER
) -> Tuple[PredictionMap, Tensor]:
    """Main stream forward; also returns the G1 output for GFE pairing"""
    s = encode_frames(frames, params, config, mode)
    g = encode_gloss_level1(s, params, config, mode)
    return decode_head(encode_gloss_level2(g, params, config, mode), params), g


# =============================================================================
# Recognizer
# =============================================================================


class Recognizer:
    """A model configuration bound to its parameters"""

    def __init__(self, config: ModelConfig, params: ModelParams):
        self.config = config
        self.params = params

    @classmethod
    def create(cls, config: ModelConfig, seed: int = 0, dtype=None) -> "Recognizer":
        logger.info(
            f"Initializing {config.preset} model: window {config.window}, stride {config.stride}, "
            f"{config.num_classes} classes"
        )
        return cls(config, init_params(config, seed, dtype))

    def as_tensor(self, frames: Union[np.ndarray, Tensor]) -> Tensor:
        if isinstance(frames, Tensor):
            return frames
        dtype = self.params["d_fc.weight"].dtype
        return Tensor(np.asarray(frames, dtype=dtype))

    def forward(self, frames: Union[np.ndarray, Tensor], mode: Mode = Mode.TRAIN) -> Tuple[PredictionMap, Tensor]:
        return forward_full(self.as_tensor(frames), self.params, self.config, mode)

    def predict(self, frames: Union[np.ndarray, Tensor]) -> PredictionMap:
        """Inference-mode prediction map without recording the tape"""
        with no_grad():
            prediction, _ = forward_full(self.as_tensor(frames), self.params, self.config, Mode.INFER)
        return prediction

    # ── persistence ──

    @staticmethod
    def config_path(checkpoint: Union[str, Path]) -> Path:
        return Path(checkpoint).with_suffix(".cfg")

    def save(self, checkpoint: Union[str, Path]) -> None:
        save_checkpoint(checkpoint, self.params.to_arrays())
        self.config.write(self.config_path(checkpoint))
        logger.info(f"Saved checkpoint to {checkpoint}")

    @classmethod
    def load(cls, checkpoint: Union[str, Path]) -> "Recognizer":
        config = ModelConfig.read(cls.config_path(checkpoint))
        arrays = load_checkpoint(checkpoint)
        expected = {name: shape for name, shape, _ in _layer_shapes(config)}
        for name, shape in expected.items():
            if name not in arrays or arrays[name].shape != shape:
                raise FormatError(f"Checkpoint does not match configuration at '{name}'", str(checkpoint))
        logger.info(f"Loaded checkpoint {checkpoint}")
        return cls(config, ModelParams.from_arrays({n: arrays[n] for n in expected}))
