# Model Package
# Configuration and forward pass of the fully convolutional recognizer

from .config import ModelConfig, TemporalLayer, RESERVED_PRESETS
from .network import (
    Mode,
    ModelParams,
    PredictionMap,
    Recognizer,
    init_params,
    encode_frames,
    encode_gloss_level1,
    encode_gloss_level2,
    decode_head,
    gfe_head,
    forward_full,
)

__all__ = [
    "ModelConfig",
    "TemporalLayer",
    "RESERVED_PRESETS",
    "Mode",
    "ModelParams",
    "PredictionMap",
    "Recognizer",
    "init_params",
    "encode_frames",
    "encode_gloss_level1",
    "encode_gloss_level2",
    "decode_head",
    "gfe_head",
    "forward_full",
]
