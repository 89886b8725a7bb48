"""
Regression bounds of the tiny preset on the default synthetic benchmark.

Trains three recognizers for the full desk schedule, so these take hours on
CPU; run them with `pytest -m acceptance`. The bounds are listed in
docs/pipeline.md.
"""

import pytest

from glossfcn.data import DatasetConfig, SampleStore, gen_dataset
from glossfcn.evaluation import evaluate, run_battery
from glossfcn.model import ModelConfig, Recognizer
from glossfcn.training import TrainConfig, train

pytestmark = [pytest.mark.slow, pytest.mark.acceptance]

MAX_TEST_WER = 0.15
MIN_GFE_GAIN = 0.02
MAX_DEGRADATION = 0.08
MAX_CONCAT_ALL_GAP = 0.03

VARIANTS = {
    "no-gfe": dict(use_gfe=False),
    "gfe-no-br": dict(use_gfe=True, use_balance_ratio=False),
    "gfe-br": dict(use_gfe=True, use_balance_ratio=True),
}


@pytest.fixture(scope="module")
def store(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    gen_dataset(DatasetConfig(seed=1, policies=["unseen-sentences"]), out)
    return SampleStore.open(out / "unseen-sentences" / "manifest.jsonl")


@pytest.fixture(scope="module")
def variants(store, tmp_path_factory):
    """(model, test WER) per ablation variant, all from the same seeds"""
    runs = tmp_path_factory.mktemp("runs")
    test = list(store.iter_samples("test"))
    results = {}
    for name, fields in VARIANTS.items():
        model = Recognizer.create(ModelConfig.from_preset("tiny", store.manifest.vocab_size), seed=1)
        train(store, model, TrainConfig.from_schedule("desk", seed=1, **fields), runs / name)
        results[name] = (model, evaluate(model, test, name=name).mean_wer)
    return results


def test_converges(variants):
    _, test_wer = variants["gfe-br"]
    assert test_wer <= MAX_TEST_WER


def test_enhancement_ablation_ordering(variants):
    no_gfe, no_br, full = (variants[name][1] for name in VARIANTS)
    assert no_gfe >= no_br >= full
    assert no_gfe - full >= MIN_GFE_GAIN


def test_online_scenarios(variants, store):
    model, _ = variants["gfe-br"]
    battery = run_battery(model, list(store.iter_samples("test")), seed=1)
    scenarios = battery["scenarios"]
    for name in ("split-2", "split-3", "concat-2", "concat-3", "rand_repli", "shuffle"):
        assert scenarios[name]["degradation"] <= MAX_DEGRADATION, name
    assert abs(scenarios["concat_all"]["mean_wer"] - scenarios["concat-2"]["mean_wer"]) <= MAX_CONCAT_ALL_GAP
