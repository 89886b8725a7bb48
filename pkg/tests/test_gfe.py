"""
Gloss feature enhancement: balance ratio, weighted cross-entropy, joint
objective, proposal pairing and the proposal cache.
"""

import numpy as np
import pytest

from glossfcn.ctc import collapse, ctc_loss, forced_align
from glossfcn.engine import Tensor
from glossfcn.engine.gradcheck import gradient_check
from glossfcn.errors import FormatError
from glossfcn.gfe import (
    GfePairBatch,
    ProposalCache,
    balance_ratio,
    build_pairs,
    gfe_loss,
    pair_with_proposal,
    total_loss,
    transport_proposal,
)
from glossfcn.model import Mode, ModelParams, PredictionMap, forward_full, gfe_head
from glossfcn.training import temporal_augment


def batch_for(targets, blank=1, features=None):
    targets = np.asarray(targets, dtype=np.int64)
    features = features if features is not None else Tensor(np.zeros((targets.size, 2)))
    return GfePairBatch(sample_id="s", features=features, targets=targets, proposal_epoch=1, blank=blank)


class TestBalanceRatio:
    def test_counts_non_blank(self):
        proposal = [4] * 17 + [0, 1, 2, 3, 0]
        assert len(proposal) == 22
        assert balance_ratio(proposal, blank=4) == pytest.approx(5 / 22)

    def test_extremes(self):
        assert balance_ratio([0, 1, 2], blank=3) == 1.0
        assert balance_ratio([3, 3], blank=3) == 0.0


class TestGfeLoss:
    def test_non_blank_pair(self):
        lp = Tensor(np.log([[0.5, 0.5]]), dtype=np.float64)
        assert gfe_loss(batch_for([0]), lp, br=0.25).item() == pytest.approx(0.69315, abs=1e-5)

    def test_blank_pair_scaled_by_ratio(self):
        lp = Tensor(np.log([[0.5, 0.5]]), dtype=np.float64)
        assert gfe_loss(batch_for([1]), lp, br=0.25).item() == pytest.approx(0.17329, abs=1e-5)

    def test_unit_ratio_is_mean_cross_entropy(self, rng):
        logits = rng.normal(size=(6, 3))
        lp = logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))
        targets = np.array([0, 2, 1, 2, 2, 0])
        expected = -lp[np.arange(6), targets].mean()
        assert gfe_loss(batch_for(targets, blank=2), Tensor(lp), br=1.0).item() == pytest.approx(expected)

    def test_probability_floor(self):
        lp = Tensor(np.array([[-1e6, 0.0]]), dtype=np.float64)
        assert gfe_loss(batch_for([0]), lp, br=1.0).item() == pytest.approx(-np.log(1e-12))

    def test_step_mismatch(self):
        with pytest.raises(ValueError):
            gfe_loss(batch_for([0, 1]), Tensor(np.log([[0.5, 0.5]])), br=1.0)


class TestTotalLoss:
    def test_zero_params_without_enhancement(self):
        params = ModelParams({"w": Tensor(np.zeros(3), requires_grad=True)})
        l_ctc = Tensor(np.array(1.25))
        breakdown = total_loss(l_ctc, None, params, lambda1=1e-4, lambda2=0.05)
        assert breakdown.total.item() == pytest.approx(1.25)
        assert not breakdown.gfe_active

    def test_enhancement_weight(self):
        params = ModelParams({"w": Tensor(np.zeros(3), requires_grad=True)})
        breakdown = total_loss(Tensor(np.array(1.0)), Tensor(np.array(2.0)), params, lambda1=0.0, lambda2=0.05)
        assert breakdown.total.item() == pytest.approx(1.1)

    def test_regularizer_is_squared_norm(self):
        params = ModelParams(
            {
                "a": Tensor(np.array([1.0, 2.0]), requires_grad=True),
                "b": Tensor(np.array([[3.0]]), requires_grad=True),
                "bn.running_mean": Tensor(np.array([100.0])),
            }
        )
        breakdown = total_loss(Tensor(np.array(0.5)), None, params, lambda1=1e-4, lambda2=0.05)
        assert breakdown.l_reg.item() == pytest.approx(14.0)
        assert breakdown.total.item() == pytest.approx(0.5 + 14.0e-4)


class TestJointObjectiveGradients:
    @pytest.mark.parametrize("mode", [Mode.TRAIN, Mode.INFER])
    def test_matches_finite_differences(self, micro_model, rng, mode):
        params, config = micro_model.params, micro_model.config
        frames = micro_model.as_tensor(rng.uniform(size=(40, 3, 8, 8)))
        y = [0, 1]
        # fixed proposal, so the objective is smooth in the weights
        proposal = forced_align(micro_model.predict(frames), y)
        br = balance_ratio(proposal, config.blank)

        def objective():
            prediction, g = forward_full(frames, params, config, mode)
            batch = pair_with_proposal("s", g, proposal, y, epoch=1, blank=config.blank)
            l_gfe = gfe_loss(batch, gfe_head(g, params), br)
            return total_loss(ctc_loss(prediction, y), l_gfe, params, lambda1=1e-3, lambda2=0.5).total

        names = ["d_fc.weight", "f_fc.weight", "g2.bn0.gamma", "g1.bn1.gamma", "g1.bn0.beta", "s.bn1.beta"]
        assert gradient_check(objective, [params[name] for name in names], eps=1e-7) < 1e-4


class TestPairing:
    def test_single_step_pairs_target(self, micro_model, rng):
        frames = rng.uniform(size=(16, 3, 8, 8))
        prediction, g = micro_model.forward(frames, Mode.INFER)
        batch = build_pairs("s", prediction, g, [2])
        assert batch.targets.tolist() == [2]
        assert batch.non_blank == 1

    def test_targets_collapse_to_sequence(self, micro_model, rng):
        frames = rng.uniform(size=(60, 3, 8, 8))
        prediction, g = micro_model.forward(frames, Mode.INFER)
        y = [0, 0, 1, 2]
        batch = build_pairs("s", prediction, g, y)
        assert batch.size == prediction.steps == 12
        assert collapse(batch.targets, micro_model.config.blank) == y
        assert len(batch.pairs) == 12

    def test_infeasible_sample_is_skipped(self, micro_model, rng):
        prediction, g = micro_model.forward(rng.uniform(size=(16, 3, 8, 8)), Mode.INFER)
        assert build_pairs("s", prediction, g, [0, 1]) is None

    def test_mismatched_proposal(self, rng):
        g = Tensor(rng.normal(size=(4, 8)))
        assert pair_with_proposal("s", g, np.array([0, 3, 1]), [0, 1], 1, blank=3) is None
        assert pair_with_proposal("s", g, np.array([0, 3, 3, 3]), [0, 1], 1, blank=3) is None

    def test_gradient_reaches_frame_encoder_only_through_first_level(self, micro_model, rng):
        frames = rng.uniform(size=(40, 3, 8, 8))
        prediction, g = micro_model.forward(frames, Mode.TRAIN)
        batch = build_pairs("s", prediction, g, [1, 0])
        params = micro_model.params
        params.zero_grad()
        loss = gfe_loss(batch, gfe_head(g, params), balance_ratio(batch.targets, micro_model.config.blank))
        loss.backward()
        assert params["d_fc.weight"].grad is None
        assert params["g2.conv0.weight"].grad is None
        assert params["f_fc.weight"].grad is not None
        assert params["g1.conv0.weight"].grad is not None
        assert params["s.conv0.weight"].grad is not None

    def test_head_weights_do_not_move_enhancement_loss(self, micro_model, rng):
        frames = rng.uniform(size=(40, 3, 8, 8))
        prediction, g = micro_model.forward(frames, Mode.INFER)
        batch = build_pairs("s", prediction, g, [1, 0])
        before = gfe_loss(batch, gfe_head(g, micro_model.params), 0.5).item()
        micro_model.params["d_fc.weight"].data[...] += 1.0
        after = gfe_loss(batch, gfe_head(g, micro_model.params), 0.5).item()
        assert before == after


class TestTransport:
    def test_identity_map_keeps_proposal(self, micro, rng):
        lp = np.log(rng.dirichlet(np.ones(4), size=22))
        proposal = forced_align(lp, [0, 1, 2])
        carried = transport_proposal(proposal, np.arange(100), micro, [0, 1, 2])
        np.testing.assert_array_equal(carried, proposal)

    def test_resampled_view_length(self, micro):
        proposal = np.array([3] * 5 + [0] + [3] * 10 + [1] + [3] * 5)
        _, index_map = temporal_augment(np.zeros((100, 1, 1, 1)), 0.2, window=16)
        carried = transport_proposal(proposal, index_map, micro, [0, 1])
        assert carried is not None
        assert carried.shape[0] == micro.steps_for(120) == 27
        assert collapse(carried, micro.blank) == [0, 1]


class TestProposalCache:
    def test_round_trip(self, tmp_path):
        cache = ProposalCache(tmp_path / "p.gfa")
        cache.put("a", np.array([0, 3, 1]), epoch=5)
        cache.put("b", np.array([2]), epoch=6)
        cache.save()
        loaded = ProposalCache.load(tmp_path / "p.gfa")
        assert len(loaded) == 2
        assert loaded.get("a").path.tolist() == [0, 3, 1]
        assert loaded.get("b").epoch == 6

    def test_stale_entries(self):
        cache = ProposalCache()
        cache.put("a", np.array([0]), epoch=5)
        assert cache.get("a", since_epoch=6) is None
        assert cache.get("a", since_epoch=5) is not None
        assert cache.invalidate(before_epoch=6) == 1
        assert "a" not in cache

    def test_truncated(self):
        cache = ProposalCache()
        cache.put("a", np.array([0, 1, 2]), epoch=1)
        with pytest.raises(FormatError):
            ProposalCache.from_bytes(cache.to_bytes()[:-1])


def test_prediction_map_loss_accepts_map(micro_model, rng):
    prediction, _ = micro_model.forward(rng.uniform(size=(24, 3, 8, 8)), Mode.TRAIN)
    assert isinstance(prediction, PredictionMap)
    assert ctc_loss(prediction, [1]).item() > 0.0
