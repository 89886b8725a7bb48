"""
Joint CTC + gloss feature enhancement training loop.
"""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from loguru import logger

from ..ctc import ctc_loss, forced_align, greedy_decode, is_feasible, required_steps
from ..data import SampleStore, VideoSample
from ..engine import Adam, Tensor, make_rng
from ..errors import ConfigError, InfeasibleTargetError, SequenceTooShortError
from ..evaluation.metrics import wer
from ..gfe import (
    LossBreakdown,
    ProposalCache,
    balance_ratio,
    gfe_loss,
    pair_with_proposal,
    total_loss,
    transport_proposal,
)
from ..model import Mode, ModelParams, Recognizer, gfe_head
from .augment import choose_temporal_factor, eval_view, spatial_augment, temporal_augment
from .config import TrainConfig

METRIC_COLUMNS = ("epoch", "l_ctc", "l_gfe", "l_reg", "lr", "train_wer_greedy", "skipped")


@dataclass
class EpochMetrics:
    """Per-epoch means over the samples that contributed a gradient"""

    epoch: int
    l_ctc: float
    l_gfe: float
    l_reg: float
    lr: float
    train_wer_greedy: float
    skipped: int
    gfe_terms: int = 0
    gfe_skipped: int = 0
    proposals_refreshed: int = 0

    def to_row(self) -> dict:
        return {column: getattr(self, column) for column in METRIC_COLUMNS}


@dataclass
class TrainResult:
    params: ModelParams
    history: List[EpochMetrics] = field(default_factory=list)
    checkpoint: Optional[Path] = None

    @property
    def skipped(self) -> int:
        return sum(m.skipped for m in self.history)


def write_metrics(path: Union[str, Path], history: List[EpochMetrics]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=METRIC_COLUMNS)
        writer.writeheader()
        for metrics in history:
            writer.writerow(metrics.to_row())


class Trainer:
    """Trains a recognizer on one split of a sample store"""

    def __init__(
        self,
        model: Recognizer,
        store: SampleStore,
        config: TrainConfig,
        run_dir: Optional[Union[str, Path]] = None,
    ):
        self.model = model
        self.store = store
        self.config = config
        self.run_dir = Path(run_dir) if run_dir is not None else None
        self.records = store.records(config.split)
        if not self.records:
            raise ConfigError(f"Split '{config.split}' has no samples")

        self.optimizer = Adam(
            model.params.trainable(), lr=config.lr, beta1=config.beta1, beta2=config.beta2, eps=config.adam_eps
        )
        self.cache = ProposalCache(self.run_dir / "proposals.gfa" if self.run_dir else None)
        self.history: List[EpochMetrics] = []

        # instrumentation
        self.augmented_refresh_views = 0
        self.gfe_evaluations = 0

    # ── views ──

    def _prepare(self, sample: VideoSample, rng: Optional[np.random.Generator]) -> Tuple[np.ndarray, np.ndarray, bool]:
        """(frames, source index map, augmented?); rng None gives the plain evaluation view"""
        mc = self.model.config
        frames = sample.frames
        index_map = np.arange(sample.num_frames)
        augmented = False

        if rng is not None and self.config.temporal_aug > 0:
            factor = choose_temporal_factor(rng, self.config.temporal_aug)
            frames, index_map = temporal_augment(frames, factor, mc.window)
            augmented = index_map.shape[0] != sample.num_frames

        if rng is not None and self.config.spatial_aug:
            frames = spatial_augment(frames, True, rng, mc.view_resize, mc.input_height)
            augmented = True
        else:
            frames = eval_view(frames, mc.view_resize, mc.input_height)
        return frames, index_map, augmented

    # ── proposals ──

    def refresh_proposals(self, epoch: int) -> int:
        """Forced-align every training sample with the current weights, un-augmented, infer mode"""
        produced = 0
        for record in self.records:
            sample = self.store.load(record)
            frames, _, augmented = self._prepare(sample, None)
            if augmented:
                self.augmented_refresh_views += 1
            prediction = self.model.predict(frames)
            if not is_feasible(prediction.steps, sample.y):
                logger.warning(f"{sample.sample_id}: no feasible proposal with {prediction.steps} steps")
                continue
            self.cache.put(sample.sample_id, forced_align(prediction, sample.y), epoch)
            produced += 1

        if self.cache.path is not None:
            self.cache.save()
        logger.info(f"Epoch {epoch}: refreshed {produced}/{len(self.records)} alignment proposals")
        return produced

    def _gfe_term(self, sample: VideoSample, g: Tensor, index_map: np.ndarray, since: int) -> Optional[Tensor]:
        mc = self.model.config
        proposal = self.cache.get(sample.sample_id, since_epoch=since)
        if proposal is None:
            return None

        path = proposal.path
        if index_map.shape[0] != sample.num_frames:
            path = transport_proposal(path, index_map, mc, sample.y)
            if path is None:
                logger.debug(f"{sample.sample_id}: proposal does not survive resampling, GFE skipped")
                return None

        batch = pair_with_proposal(sample.sample_id, g, path, sample.y, proposal.epoch, mc.blank)
        if batch is None:
            return None
        br = balance_ratio(batch.targets, mc.blank) if self.config.use_balance_ratio else 1.0
        self.gfe_evaluations += 1
        return gfe_loss(batch, gfe_head(g, self.model.params), br)

    # ── steps ──

    def _train_sample(
        self, sample: VideoSample, epoch: int, index: int, gfe_on: bool, since: int, group_size: int
    ) -> Tuple[LossBreakdown, float]:
        cfg = self.config
        rng = make_rng(cfg.seed, "augment", epoch, index)
        frames, index_map, _ = self._prepare(sample, rng)

        steps = self.model.config.steps_for(frames.shape[0])
        if steps == 0:
            raise SequenceTooShortError(frames.shape[0], self.model.config.window)
        if not is_feasible(steps, sample.y):
            raise InfeasibleTargetError(steps, required_steps(sample.y))

        prediction, g = self.model.forward(frames, Mode.TRAIN)
        l_ctc = ctc_loss(prediction.log_probs, sample.y)
        l_gfe = self._gfe_term(sample, g, index_map, since) if gfe_on else None

        breakdown = total_loss(l_ctc, l_gfe, self.model.params, cfg.lambda1, cfg.lambda2)
        (breakdown.total * (1.0 / group_size)).backward()

        _, hypothesis = greedy_decode(prediction)
        return breakdown, wer(sample.y, hypothesis)

    def train_epoch(self, epoch: int) -> EpochMetrics:
        cfg = self.config
        lr = cfg.lr_at(epoch)
        self.optimizer.lr = lr
        gfe_on = cfg.gfe_active(epoch)

        refreshed = self.refresh_proposals(epoch) if cfg.is_refresh_epoch(epoch) else 0
        since = cfg.last_refresh_epoch(epoch)
        gfe_before = self.gfe_evaluations

        order = make_rng(cfg.seed, "shuffle", epoch).permutation(len(self.records))
        l_ctc, l_gfe, l_reg, wers = [], [], [], []
        skipped = 0
        contributing = 0

        self.optimizer.zero_grad()
        for position, index in enumerate(order):
            group_start = position - position % cfg.accumulate
            group_size = min(cfg.accumulate, len(order) - group_start)
            sample = self.store.load(self.records[index])

            try:
                breakdown, sample_wer = self._train_sample(sample, epoch, int(index), gfe_on, since, group_size)
            except (InfeasibleTargetError, SequenceTooShortError) as e:
                logger.warning(f"Epoch {epoch}: skipping {sample.sample_id}: {e}")
                skipped += 1
            else:
                contributing += 1
                parts = breakdown.to_dict()
                l_ctc.append(parts["l_ctc"])
                l_reg.append(parts["l_reg"])
                if breakdown.gfe_active:
                    l_gfe.append(parts["l_gfe"])
                wers.append(sample_wer)

            if position - group_start == group_size - 1:
                if contributing:
                    self.optimizer.step()
                self.optimizer.zero_grad()
                contributing = 0

        gfe_terms = self.gfe_evaluations - gfe_before
        return EpochMetrics(
            epoch=epoch,
            l_ctc=float(np.mean(l_ctc)) if l_ctc else 0.0,
            l_gfe=float(np.mean(l_gfe)) if l_gfe else 0.0,
            l_reg=float(np.mean(l_reg)) if l_reg else 0.0,
            lr=lr,
            train_wer_greedy=float(np.mean(wers)) if wers else 0.0,
            skipped=skipped,
            gfe_terms=gfe_terms,
            gfe_skipped=(len(order) - skipped - gfe_terms) if gfe_on else 0,
            proposals_refreshed=refreshed,
        )

    def train(self) -> TrainResult:
        cfg = self.config
        mc = self.model.config
        rf = mc.receptive_field()
        logger.info(
            f"Training {mc.preset} model on {len(self.records)} samples for {cfg.epochs} epochs "
            f"(schedule {cfg.schedule}, window {rf['window']}, stride {rf['stride']}, "
            f"GFE from epoch {cfg.gfe_start_epoch if cfg.use_gfe else 'never'})"
        )
        if self.run_dir is not None:
            self.run_dir.mkdir(parents=True, exist_ok=True)
            (self.run_dir / "train_config.json").write_text(
                json.dumps(cfg.model_dump(), indent=2, sort_keys=True), encoding="utf-8"
            )

        for epoch in range(1, cfg.epochs + 1):
            metrics = self.train_epoch(epoch)
            self.history.append(metrics)
            logger.info(
                f"Epoch {epoch}/{cfg.epochs}: l_ctc={metrics.l_ctc:.4f} l_gfe={metrics.l_gfe:.4f} "
                f"l_reg={metrics.l_reg:.2f} lr={metrics.lr:.2e} wer={metrics.train_wer_greedy:.3f} "
                f"skipped={metrics.skipped}"
            )
            if self.run_dir is not None:
                write_metrics(self.run_dir / "metrics.csv", self.history)
                self.model.save(self.run_dir / "last.gfw")

        checkpoint = None
        if self.run_dir is not None:
            checkpoint = self.run_dir / "model.gfw"
            self.model.save(checkpoint)
        return TrainResult(params=self.model.params, history=list(self.history), checkpoint=checkpoint)


def train(
    store: SampleStore,
    model: Recognizer,
    config: TrainConfig,
    run_dir: Optional[Union[str, Path]] = None,
) -> TrainResult:
    """Train model on store with config, writing checkpoints and metrics under run_dir"""
    return Trainer(model, store, config, run_dir).train()

