"""
Recognizer geometry, locality and persistence.
"""

import numpy as np
import pytest

from glossfcn.engine import Tensor
from glossfcn.errors import ConfigError, FormatError, SequenceTooShortError
from glossfcn.model import (
    Mode,
    ModelConfig,
    Recognizer,
    TemporalLayer,
    decode_head,
    encode_frames,
    encode_gloss_level1,
    encode_gloss_level2,
    gfe_head,
    init_params,
)

from .helpers import micro_config


@pytest.fixture
def frames(rng):
    return rng.uniform(0.0, 1.0, size=(100, 3, 8, 8))


class TestGeometry:
    @pytest.mark.parametrize("t, k", [(100, 22), (16, 1), (20, 2), (19, 1), (15, 0)])
    def test_steps_for(self, micro, t, k):
        assert micro.steps_for(t) == k

    def test_receptive_field(self, micro):
        rf = micro.receptive_field()
        assert (rf["window"], rf["stride"]) == (16, 4)
        assert rf["trace"][-1]["layer"] == "g1.pool1"

    def test_presets(self):
        tiny = ModelConfig.from_preset("tiny", 12)
        full = ModelConfig.from_preset("full", 1295)
        assert (tiny.f_s, tiny.f_g, tiny.f_g2, tiny.view_resize) == (64, 64, 128, 36)
        assert (full.f_s, full.input_height, full.view_resize) == (512, 224, 256)
        assert tiny.num_classes == 13 and tiny.blank == 12

    def test_reserved_preset_cannot_change(self):
        with pytest.raises(ConfigError):
            ModelConfig.from_preset("tiny", 12, f_g=32)

    def test_window_must_match_layers(self):
        with pytest.raises(ConfigError):
            micro_config(window=20)

    def test_first_level_padding_rejected(self):
        with pytest.raises(ConfigError):
            micro_config(g1_layers=[TemporalLayer(filter=5, pad=2, pool=2), TemporalLayer(filter=5, pool=2)])

    def test_text_round_trip(self, micro, tmp_path):
        micro.write(tmp_path / "m.cfg")
        assert ModelConfig.read(tmp_path / "m.cfg") == micro


class TestEncoders:
    def test_tiny_frame_features(self, rng):
        config = ModelConfig.from_preset("tiny", 12)
        params = init_params(config, seed=0)
        s = encode_frames(Tensor(rng.uniform(size=(1, 3, 32, 32))), params, config)
        assert s.shape == (1, 64)

    def test_identical_frames_identical_rows(self, micro_model, rng):
        frame = rng.uniform(size=(3, 8, 8))
        batch = np.stack([frame, rng.uniform(size=(3, 8, 8)), frame])
        s = encode_frames(Tensor(batch), micro_model.params, micro_model.config, Mode.INFER)
        np.testing.assert_allclose(s.data[0], s.data[2], atol=1e-12)

    def test_first_level_step_zero_sees_first_window(self, micro_model, frames):
        config, params = micro_model.config, micro_model.params
        s = encode_frames(Tensor(frames), params, config)
        masked = s.data.copy()
        masked[16:] = 0.0
        g = encode_gloss_level1(s, params, config)
        g_masked = encode_gloss_level1(Tensor(masked), params, config)
        assert g.shape == (22, 8)
        np.testing.assert_allclose(g_masked.data[0], g.data[0], atol=1e-10)

    def test_first_level_length_sweep(self, micro_model, rng):
        s = rng.normal(size=(200, 8))
        for t in range(16, 201):
            g = encode_gloss_level1(Tensor(s[:t], dtype=np.float64), micro_model.params, micro_model.config)
            assert g.shape == ((t - 16) // 4 + 1, 8), t

    def test_first_level_locality(self, micro_model, rng):
        config, params = micro_model.config, micro_model.params
        for _ in range(20):
            t = int(rng.integers(16, 121))
            i = int(rng.integers(0, (t - 16) // 4 + 1))
            s = rng.normal(size=(t, 8))
            # everything outside step i's window is redrawn
            other = rng.normal(size=(t, 8))
            other[4 * i : 4 * i + 16] = s[4 * i : 4 * i + 16]
            a = encode_gloss_level1(Tensor(s, dtype=np.float64), params, config)
            b = encode_gloss_level1(Tensor(other, dtype=np.float64), params, config)
            np.testing.assert_allclose(b.data[i], a.data[i], atol=1e-10, err_msg=f"t={t} i={i}")

    @pytest.mark.parametrize("shift", [4, 8, 12])
    def test_first_level_shift_equivariance(self, micro_model, rng, shift):
        s = rng.normal(size=(64, 8))
        a = encode_gloss_level1(Tensor(s, dtype=np.float64), micro_model.params, micro_model.config)
        b = encode_gloss_level1(Tensor(s[shift:], dtype=np.float64), micro_model.params, micro_model.config)
        steps = shift // 4
        assert b.shape[0] == a.shape[0] - steps
        np.testing.assert_allclose(b.data, a.data[steps:], atol=1e-10)

    def test_first_level_too_short(self, micro_model, rng):
        s = Tensor(rng.normal(size=(15, 8)))
        with pytest.raises(SequenceTooShortError):
            encode_gloss_level1(s, micro_model.params, micro_model.config)

    def test_second_level_context(self, micro_model, rng):
        config, params = micro_model.config, micro_model.params
        g = rng.normal(size=(6, 8))
        perturbed = g.copy()
        perturbed[4] += 5.0
        a = encode_gloss_level2(Tensor(g), params, config)
        b = encode_gloss_level2(Tensor(perturbed), params, config)
        assert a.shape == (6, 8)
        np.testing.assert_allclose(a.data[2], b.data[2], atol=1e-12)

    def test_second_level_can_be_disabled(self, rng):
        config = micro_config(use_g2=False)
        params = init_params(config, seed=2)
        assert not any(name.startswith("g2.") for name in params.to_arrays())
        g = Tensor(rng.normal(size=(4, 8)))
        assert encode_gloss_level2(g, params, config) is g

    def test_second_level_single_step(self, micro_model, rng):
        out = encode_gloss_level2(Tensor(rng.normal(size=(1, 8))), micro_model.params, micro_model.config)
        assert out.shape == (1, 8)


class TestHeads:
    def test_zero_weights_give_uniform_rows(self, micro_model, rng):
        params = micro_model.params
        params["d_fc.weight"].data[...] = 0.0
        params["d_fc.bias"].data[...] = 0.0
        prediction = decode_head(Tensor(rng.normal(size=(5, 8))), params)
        assert prediction.log_probs.shape == (5, 4)
        np.testing.assert_allclose(prediction.probs, 0.25, atol=1e-12)

    def test_rows_sum_to_one(self, micro_model, rng):
        g = Tensor(rng.normal(size=(7, 8)))
        for prediction in (decode_head(g, micro_model.params), gfe_head(g, micro_model.params)):
            assert prediction.steps == 7 and prediction.num_classes == 4
            np.testing.assert_allclose(prediction.probs.sum(axis=1), 1.0, atol=1e-6)


class TestRecognizer:
    def test_forward_shapes(self, micro_model, frames):
        prediction, g = micro_model.forward(frames, Mode.INFER)
        assert prediction.log_probs.shape == (22, 4)
        assert g.shape == (22, 8)
        assert micro_model.predict(frames[:16]).log_probs.shape == (1, 4)

    def test_inference_is_deterministic(self, micro_model, frames):
        a = micro_model.predict(frames).log_probs.data
        b = micro_model.predict(frames).log_probs.data
        np.testing.assert_array_equal(a, b)

    def test_prediction_rows_are_local(self, micro_model, rng):
        # row i depends on frames [(i - 1) * 4, (i + 1) * 4 + 16) only
        for _ in range(20):
            t = int(rng.integers(16, 81))
            i = int(rng.integers(0, micro_model.config.steps_for(t)))
            frames = rng.uniform(size=(t, 3, 8, 8))
            lo, hi = max(0, (i - 1) * 4), (i + 1) * 4 + 16
            masked = np.zeros_like(frames)
            masked[lo:hi] = frames[lo:hi]
            full = micro_model.predict(frames).log_probs.data
            local = micro_model.predict(masked).log_probs.data
            np.testing.assert_allclose(local[i], full[i], atol=1e-10, err_msg=f"t={t} i={i}")

    def test_init_is_seeded(self, micro):
        a = init_params(micro, seed=3).to_arrays()
        b = init_params(micro, seed=3).to_arrays()
        c = init_params(micro, seed=4).to_arrays()
        assert all(np.array_equal(a[n], b[n]) for n in a)
        assert not np.array_equal(a["g1.conv0.weight"], c["g1.conv0.weight"])

    def test_trainable_excludes_running_stats(self, micro_model):
        names = set(micro_model.params.trainable())
        assert "s.bn0.gamma" in names
        assert not any(name.endswith(("running_mean", "running_var")) for name in names)

    def test_save_load(self, micro, frames, tmp_path):
        model = Recognizer.create(micro, seed=1)
        model.save(tmp_path / "model.gfw")
        assert (tmp_path / "model.cfg").exists()
        loaded = Recognizer.load(tmp_path / "model.gfw")
        assert loaded.config == micro
        np.testing.assert_array_equal(
            loaded.predict(frames).log_probs.data, model.predict(frames).log_probs.data
        )

    def test_load_rejects_mismatched_config(self, micro, tmp_path):
        Recognizer.create(micro, seed=1).save(tmp_path / "model.gfw")
        micro_config(f_g=4, f_g2=4).write(tmp_path / "model.cfg")
        with pytest.raises(FormatError):
            Recognizer.load(tmp_path / "model.gfw")
