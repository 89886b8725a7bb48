"""
Builders shared by the test modules.
"""

import itertools
from typing import List, Sequence

import numpy as np

from glossfcn.ctc import collapse
from glossfcn.data import DatasetConfig
from glossfcn.model import ModelConfig, TemporalLayer


def micro_config(**overrides) -> ModelConfig:
    """8x8 frames, two frame encoder layers, window 16 / stride 4, three glosses"""
    fields = dict(
        preset="custom",
        input_channels=3,
        input_height=8,
        input_width=8,
        s_channel_pattern=[3, 4, 8],
        g1_layers=[TemporalLayer(filter=5, pool=2), TemporalLayer(filter=5, pool=2)],
        f_s=8,
        f_g=8,
        f_g2=8,
        vocab_size=3,
        window=16,
        stride=4,
    )
    fields.update(overrides)
    return ModelConfig.create(**fields)


def micro_dataset_config(**overrides) -> DatasetConfig:
    fields = dict(
        vocab_size=3,
        train_sentences=6,
        test_sentences=3,
        signer_sentences=3,
        train_signers=[0, 1],
        test_signers=[2],
        min_length=1,
        max_length=3,
        height=8,
        width=8,
        policies=["unseen-sentences"],
        seed=3,
    )
    fields.update(overrides)
    return DatasetConfig.create(**fields)


def random_log_probs(rng: np.random.Generator, k: int, u: int) -> np.ndarray:
    logits = rng.normal(size=(k, u))
    logits -= logits.max(axis=1, keepdims=True)
    return logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))


def valid_paths(k: int, u: int, y: Sequence[int]) -> List[tuple]:
    """Every length-k path over u classes (blank u-1) collapsing to y"""
    return [p for p in itertools.product(range(u), repeat=k) if collapse(p, u - 1) == list(y)]
