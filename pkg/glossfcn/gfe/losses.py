"""
Gloss feature enhancement: (g, proposal) pairs, the balance-ratio weighted
cross-entropy and the joint objective.
"""

from typing import Optional, Sequence, Union

import numpy as np
from loguru import logger

from ..ctc import collapse, forced_align, is_feasible
from ..engine import Tensor, pick
from ..model import ModelConfig, ModelParams, PredictionMap
from .models import GfePairBatch, LossBreakdown

PROB_FLOOR = 1e-12
LOG_PROB_FLOOR = float(np.log(PROB_FLOOR))


def balance_ratio(proposal: Sequence[int], blank: int) -> float:
    """Fraction of non-blank steps in a proposal"""
    path = np.asarray(proposal)
    if path.size == 0:
        return 0.0
    return float(np.count_nonzero(path != blank)) / float(path.size)


def pair_with_proposal(
    sample_id: str, g: Tensor, proposal: np.ndarray, y: Sequence[int], epoch: int, blank: int
) -> Optional[GfePairBatch]:
    """Pair row j of g with proposal step j; None when the proposal does not fit this view"""
    proposal = np.asarray(proposal, dtype=np.int64)
    if proposal.shape[0] != g.shape[0]:
        logger.warning(f"{sample_id}: proposal has {proposal.shape[0]} steps, features have {g.shape[0]}")
        return None
    if collapse(proposal, blank) != list(y):
        logger.warning(f"{sample_id}: proposal does not collapse to its target")
        return None
    return GfePairBatch(sample_id=sample_id, features=g, targets=proposal, proposal_epoch=epoch, blank=blank)


def build_pairs(
    sample_id: str, prediction: PredictionMap, g: Tensor, y: Sequence[int], epoch: int = 0
) -> Optional[GfePairBatch]:
    """Forced-align the main stream prediction to y and pair it with g"""
    blank = prediction.num_classes - 1
    if not is_feasible(prediction.steps, y):
        logger.warning(f"{sample_id}: {prediction.steps} steps cannot carry target of length {len(y)}, GFE skipped")
        return None
    proposal = forced_align(prediction, y)
    return pair_with_proposal(sample_id, g, proposal, y, epoch, blank)


def transport_proposal(
    proposal: np.ndarray, index_map: np.ndarray, config: ModelConfig, y: Sequence[int]
) -> Optional[np.ndarray]:
    """Carry a proposal onto a temporally resampled view of the same sample.

    Each new step takes the label of the source step whose window centre is
    nearest to the source frame under the new window's centre. Returns None
    when the carried path no longer collapses to y.
    """
    proposal = np.asarray(proposal, dtype=np.int64)
    index_map = np.asarray(index_map, dtype=np.int64)
    steps = config.steps_for(index_map.shape[0])
    if steps == 0 or proposal.size == 0:
        return None

    half = config.window // 2
    centres = np.minimum(np.arange(steps) * config.stride + half, index_map.shape[0] - 1)
    source_frames = index_map[centres]
    source_steps = np.clip(np.rint((source_frames - half) / config.stride), 0, proposal.shape[0] - 1)
    carried = proposal[source_steps.astype(np.int64)]

    if collapse(carried, config.blank) != list(y):
        return None
    return carried


def gfe_loss(batch: GfePairBatch, gfe_probs: Union[PredictionMap, Tensor], br: float) -> Tensor:
    """Mean over steps of -w_j log p(target_j), with w_j = br on blank targets and 1 otherwise"""
    log_probs = gfe_probs.log_probs if isinstance(gfe_probs, PredictionMap) else gfe_probs
    if log_probs.shape[0] != batch.size:
        raise ValueError(f"GFE head has {log_probs.shape[0]} steps, batch has {batch.size} pairs")
    if br == 0.0:
        logger.warning(f"{batch.sample_id}: all-blank proposal, GFE term is zero")

    picked = pick(log_probs, batch.targets).clip(low=LOG_PROB_FLOOR)
    weights = np.where(batch.targets == batch.blank, br, 1.0).astype(log_probs.dtype)
    return -(picked * weights).mean()


def total_loss(
    l_ctc: Tensor, l_gfe: Optional[Tensor], params: ModelParams, lambda1: float, lambda2: float
) -> LossBreakdown:
    """l_ctc + lambda1 * ||W||^2, plus lambda2 * l_gfe when the enhancement branch is active"""
    l_reg = params.squared_norm()
    if l_reg is None:
        l_reg = Tensor(np.zeros((), dtype=l_ctc.dtype))

    total = l_ctc + l_reg * lambda1
    if l_gfe is not None:
        total = total + l_gfe * lambda2
    return LossBreakdown(l_ctc=l_ctc, l_gfe=l_gfe, l_reg=l_reg, total=total, lambda1=lambda1, lambda2=lambda2)
