"""
Shared fixtures: a micro model and a small generated benchmark on disk.
"""

import numpy as np
import pytest

from glossfcn.data import SampleStore, gen_dataset
from glossfcn.model import Recognizer

from .helpers import micro_config, micro_dataset_config


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def micro():
    return micro_config()


@pytest.fixture
def micro_model(micro):
    return Recognizer.create(micro, seed=7, dtype=np.float64)


@pytest.fixture(scope="session")
def micro_data_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    gen_dataset(micro_dataset_config(), out)
    return out


@pytest.fixture
def micro_store(micro_data_dir):
    return SampleStore.open(micro_data_dir / "unseen-sentences" / "manifest.jsonl")
