"""
Schedules, augmentation and the joint training loop.
"""

import csv

import numpy as np
import pytest

from glossfcn.ctc import ctc_loss, forced_align
from glossfcn.engine import Tensor, log_softmax, make_rng
from glossfcn.errors import ConfigError
from glossfcn.gfe import balance_ratio, gfe_loss, pair_with_proposal, total_loss
from glossfcn.model import Mode, Recognizer, gfe_head
from glossfcn.training import (
    METRIC_COLUMNS,
    SCHEDULES,
    TrainConfig,
    Trainer,
    choose_temporal_factor,
    eval_view,
    spatial_augment,
    temporal_augment,
    train,
)


def quick_config(**overrides) -> TrainConfig:
    fields = dict(
        epochs=2,
        lr=3e-3,
        lr_halving_epochs=[],
        gfe_start_epoch=1,
        proposal_refresh_every=1,
        temporal_aug=0.0,
        spatial_aug=False,
        accumulate=1,
        seed=11,
    )
    fields.update(overrides)
    return TrainConfig.create(**fields)


class TestSchedule:
    def test_lr_halving(self):
        config = TrainConfig.create(lr=1e-4, lr_halving_epochs=[3])
        assert config.lr_at(2) == pytest.approx(1e-4)
        assert config.lr_at(3) == pytest.approx(5e-5)
        assert config.lr_at(10) == pytest.approx(5e-5)

    def test_presets(self):
        assert set(SCHEDULES) == {"desk", "rwth", "csl"}
        rwth = TrainConfig.from_schedule("rwth")
        assert (rwth.epochs, rwth.gfe_start_epoch, rwth.lr) == (80, 15, 1e-4)
        assert TrainConfig.from_schedule("desk", epochs=3).epochs == 3
        with pytest.raises(ConfigError):
            TrainConfig.from_schedule("imagenet")

    def test_refresh_epochs(self):
        config = TrainConfig.create(gfe_start_epoch=8, proposal_refresh_every=5)
        assert [e for e in range(1, 20) if config.is_refresh_epoch(e)] == [8, 13, 18]
        assert config.last_refresh_epoch(12) == 8
        assert not config.gfe_active(7)

    def test_disabled_enhancement_never_refreshes(self):
        config = TrainConfig.create(use_gfe=False, gfe_start_epoch=1)
        assert not any(config.is_refresh_epoch(e) for e in range(1, 50))

    def test_unsorted_halving_rejected(self):
        with pytest.raises(ConfigError):
            TrainConfig.create(lr_halving_epochs=[30, 20])


class TestAugment:
    def test_stretch(self):
        frames = np.arange(100, dtype=np.float32).reshape(100, 1, 1, 1)
        out, index_map = temporal_augment(frames, 0.2)
        assert out.shape[0] == 120
        assert set(index_map.tolist()) == set(range(100))
        np.testing.assert_array_equal(out[:, 0, 0, 0], index_map)

    def test_shrink(self):
        out, index_map = temporal_augment(np.zeros((100, 1, 1, 1)), -0.2)
        assert out.shape[0] == 80
        assert np.all(np.diff(index_map) > 0)

    def test_identity(self):
        frames = np.zeros((30, 1, 1, 1))
        out, index_map = temporal_augment(frames, 0.0)
        assert out is frames
        np.testing.assert_array_equal(index_map, np.arange(30))

    def test_shrink_below_window_is_skipped(self):
        out, _ = temporal_augment(np.zeros((18, 1, 1, 1)), -0.2, window=16)
        assert out.shape[0] == 18

    def test_factor_choices(self):
        rng = make_rng(1, "factor")
        assert {choose_temporal_factor(rng, 0.2) for _ in range(60)} == {0.2, -0.2, 0.0}

    def test_eval_view_is_centre_crop(self, rng):
        frames = rng.uniform(size=(3, 3, 32, 32)).astype(np.float32)
        a = eval_view(frames, 36, 32)
        b = eval_view(frames, 36, 32)
        assert a.shape == (3, 3, 32, 32)
        np.testing.assert_array_equal(a, b)

    def test_random_crop_is_seeded(self, rng):
        frames = rng.uniform(size=(2, 3, 32, 32)).astype(np.float32)
        a = spatial_augment(frames, True, make_rng(5, "crop"), resize=36, crop=32)
        b = spatial_augment(frames, True, make_rng(5, "crop"), resize=36, crop=32)
        assert a.shape == (2, 3, 32, 32)
        np.testing.assert_array_equal(a, b)

    def test_crop_only(self, rng):
        frames = rng.uniform(size=(2, 3, 10, 10))
        out = spatial_augment(frames, False, resize=0, crop=8)
        np.testing.assert_array_equal(out, frames[:, :, 1:9, 1:9])


class TestObjective:
    def test_zero_enhancement_weight_is_main_objective(self, micro_model, rng):
        params, config = micro_model.params, micro_model.config
        frames = rng.uniform(size=(40, 3, 8, 8))
        y = [0, 1]
        proposal = forced_align(micro_model.predict(frames), y)

        def grads(with_gfe):
            params.zero_grad()
            prediction, g = micro_model.forward(frames, Mode.INFER)
            l_gfe = None
            if with_gfe:
                batch = pair_with_proposal("s", g, proposal, y, epoch=1, blank=config.blank)
                l_gfe = gfe_loss(batch, gfe_head(g, params), balance_ratio(proposal, config.blank))
            breakdown = total_loss(ctc_loss(prediction, y), l_gfe, params, lambda1=1e-4, lambda2=0.0)
            breakdown.total.backward()
            shared = {name: t.grad.copy() for name, t in params.trainable().items() if not name.startswith("f_fc")}
            return breakdown, shared

        main, main_grads = grads(False)
        joint, joint_grads = grads(True)
        assert joint.gfe_active and not main.gfe_active
        assert joint.total.item() == main.total.item()
        assert joint.total.item() == main.l_ctc.item() + 1e-4 * main.l_reg.item()
        for name, grad in main_grads.items():
            np.testing.assert_array_equal(joint_grads[name], grad)

    def test_log_softmax_large_logits(self):
        logits = Tensor(np.array([[100.0, -100.0, 0.0], [-100.0, -100.0, -100.0]]), requires_grad=True, dtype=np.float64)
        out = log_softmax(logits)
        assert np.all(np.isfinite(out.data))
        np.testing.assert_allclose(out.data[0], [0.0, -200.0, -100.0], atol=1e-12)
        np.testing.assert_allclose(out.data[1], np.full(3, -np.log(3.0)))
        out.sum().backward()
        assert np.all(np.isfinite(logits.grad))


@pytest.mark.slow
class TestTrainer:
    def test_loss_decreases(self, micro, micro_store):
        model = Recognizer.create(micro, seed=5)
        result = train(micro_store, model, quick_config(use_gfe=False))
        assert len(result.history) == 2
        assert result.history[1].l_ctc < result.history[0].l_ctc

    def test_enhancement_branch(self, micro, micro_store, tmp_path):
        model = Recognizer.create(micro, seed=5)
        trainer = Trainer(model, micro_store, quick_config(temporal_aug=0.2), tmp_path / "run")
        result = trainer.train()

        assert trainer.gfe_evaluations > 0
        assert trainer.augmented_refresh_views == 0
        assert result.history[0].proposals_refreshed > 0
        for name in ("model.gfw", "model.cfg", "last.gfw", "proposals.gfa", "train_config.json"):
            assert (tmp_path / "run" / name).exists()

        with (tmp_path / "run" / "metrics.csv").open(encoding="utf-8") as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 2
        assert tuple(rows[0]) == METRIC_COLUMNS

    def test_enhancement_never_starts(self, micro, micro_store):
        model = Recognizer.create(micro, seed=5)
        trainer = Trainer(model, micro_store, quick_config(gfe_start_epoch=10**9))
        result = trainer.train()
        assert trainer.gfe_evaluations == 0
        assert all(m.l_gfe == 0.0 and m.proposals_refreshed == 0 for m in result.history)

    def test_reproducible(self, micro, micro_store, tmp_path):
        for name in ("a", "b"):
            model = Recognizer.create(micro, seed=5)
            train(micro_store, model, quick_config(epochs=1, temporal_aug=0.2, accumulate=2), tmp_path / name)
        assert (tmp_path / "a" / "model.gfw").read_bytes() == (tmp_path / "b" / "model.gfw").read_bytes()

    def test_empty_split(self, micro, micro_store):
        with pytest.raises(ConfigError):
            Trainer(Recognizer.create(micro), micro_store, quick_config(split="dev"))
