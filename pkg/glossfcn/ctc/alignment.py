"""
CTC on a single (k, u) prediction map with the blank as the last class.

All dynamic programs run in float64 log space over the blank-interleaved
extended label sequence (blank, y1, blank, y2, ..., yU, blank). Impossible
states hold NEG_INF, a finite sentinel, so sums never overflow to -inf.
"""

from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from ..engine import Tensor
from ..errors import DimensionError, InfeasibleTargetError, LabelError
from ..model.network import PredictionMap

NEG_INF = -1e30

MapLike = Union[PredictionMap, Tensor, np.ndarray]


def _log_probs_array(prediction: MapLike) -> np.ndarray:
    if isinstance(prediction, PredictionMap):
        prediction = prediction.log_probs
    if isinstance(prediction, Tensor):
        prediction = prediction.data
    lp = np.asarray(prediction, dtype=np.float64)
    if lp.ndim != 2 or lp.shape[0] < 1 or lp.shape[1] < 2:
        raise DimensionError(f"Prediction map must be (k, u) with k >= 1 and u >= 2, got {lp.shape}")
    return lp


def _check_labels(y: Sequence[int], blank: int) -> np.ndarray:
    labels = np.asarray(list(y), dtype=np.int64)
    if labels.size and (labels.min() < 0 or labels.max() >= blank):
        raise LabelError(f"Target labels must lie in [0, {blank}), got {labels.tolist()}")
    return labels


def collapse(path: Sequence[int], blank: int) -> List[int]:
    """Merge adjacent repeats, then drop blanks"""
    labels = []
    previous = None
    for cls in path:
        cls = int(cls)
        if cls != previous and cls != blank:
            labels.append(cls)
        previous = cls
    return labels


def required_steps(y: Sequence[int]) -> int:
    """Fewest steps any path collapsing to y needs: U plus one blank per adjacent repeat"""
    y = list(y)
    return len(y) + sum(1 for a, b in zip(y, y[1:]) if a == b)


def check_feasible(steps: int, y: Sequence[int]) -> None:
    required = required_steps(y)
    if steps < required:
        raise InfeasibleTargetError(steps, required)


def is_feasible(steps: int, y: Sequence[int]) -> bool:
    return steps >= required_steps(y)


def _extend(labels: np.ndarray, blank: int) -> Tuple[np.ndarray, np.ndarray]:
    """Extended sequence and the mask of states reachable by skipping s-2"""
    ext = np.full(2 * labels.size + 1, blank, dtype=np.int64)
    ext[1::2] = labels
    skip = np.zeros(ext.size, dtype=bool)
    if ext.size > 2:
        skip[2:] = (ext[2:] != blank) & (ext[2:] != ext[:-2])
    return ext, skip


def _shift(row: np.ndarray, by: int) -> np.ndarray:
    out = np.full_like(row, NEG_INF)
    out[by:] = row[:-by]
    return out


def _forward_backward(lp: np.ndarray, labels: np.ndarray, blank: int) -> Tuple[float, np.ndarray]:
    """Negative log-likelihood and its gradient with respect to lp"""
    k = lp.shape[0]
    ext, skip = _extend(labels, blank)
    size = ext.size
    emit = lp[:, ext]

    alpha = np.full((k, size), NEG_INF)
    alpha[0, 0] = emit[0, 0]
    if size > 1:
        alpha[0, 1] = emit[0, 1]
    for j in range(1, k):
        prev = alpha[j - 1]
        acc = np.logaddexp(prev, _shift(prev, 1))
        if size > 2:
            acc = np.where(skip, np.logaddexp(acc, _shift(prev, 2)), acc)
        alpha[j] = np.maximum(acc + emit[j], NEG_INF)

    # beta[j, s] covers steps j..k-1 and includes the emission at j
    skip_next = np.zeros(size, dtype=bool)
    skip_next[:-2] = skip[2:]
    beta = np.full((k, size), NEG_INF)
    beta[-1, -1] = emit[-1, -1]
    if size > 1:
        beta[-1, -2] = emit[-1, -2]
    for j in range(k - 2, -1, -1):
        nxt = beta[j + 1]
        acc = nxt.copy()
        acc[:-1] = np.logaddexp(acc[:-1], nxt[1:])
        if size > 2:
            ahead = np.full(size, NEG_INF)
            ahead[:-2] = nxt[2:]
            acc = np.where(skip_next, np.logaddexp(acc, ahead), acc)
        beta[j] = np.maximum(acc + emit[j], NEG_INF)

    ends = alpha[-1, -1] if size == 1 else np.logaddexp(alpha[-1, -1], alpha[-1, -2])
    log_likelihood = float(ends)

    occupancy = np.exp(alpha + beta - emit - log_likelihood)
    posterior = np.zeros_like(lp)
    for s in range(size):
        posterior[:, ext[s]] += occupancy[:, s]
    return -log_likelihood, -posterior


def ctc_loss(log_probs: Union[Tensor, PredictionMap], y: Sequence[int], blank: Optional[int] = None) -> Tensor:
    """-log of the total probability of every length-k path collapsing to y.

    The returned scalar is differentiable with respect to log_probs; the
    gradient there is minus the per-step class occupancy.
    """
    if isinstance(log_probs, PredictionMap):
        log_probs = log_probs.log_probs
    lp = _log_probs_array(log_probs)
    blank = lp.shape[1] - 1 if blank is None else blank
    labels = _check_labels(y, blank)
    check_feasible(lp.shape[0], labels.tolist())

    loss, grad = _forward_backward(lp, labels, blank)
    dtype = log_probs.dtype
    return Tensor._from_op(
        np.asarray(loss, dtype=dtype),
        (log_probs,),
        lambda g: ((g * grad).astype(dtype),),
        "ctc_loss",
    )


def greedy_decode(prediction: MapLike) -> Tuple[np.ndarray, List[int]]:
    """Per-step argmax (lowest class on ties) and its collapse"""
    lp = _log_probs_array(prediction)
    path = lp.argmax(axis=1)
    return path, collapse(path, lp.shape[1] - 1)


def forced_align(prediction: MapLike, y: Sequence[int]) -> np.ndarray:
    """Highest-probability length-k path that collapses to y.

    Viterbi over the extended trellis. Equal-scoring predecessors resolve
    toward the larger advance (s-2, then s-1, then s), and at the last step
    the final blank wins a tie with the final label.
    """
    lp = _log_probs_array(prediction)
    k, u = lp.shape
    blank = u - 1
    labels = _check_labels(y, blank)
    check_feasible(k, labels.tolist())

    ext, skip = _extend(labels, blank)
    size = ext.size
    emit = lp[:, ext]

    score = np.full(size, NEG_INF)
    score[0] = emit[0, 0]
    if size > 1:
        score[1] = emit[0, 1]
    back = np.zeros((k, size), dtype=np.int64)
    for j in range(1, k):
        from_skip = np.where(skip, _shift(score, 2), NEG_INF) if size > 2 else np.full(size, NEG_INF)
        from_prev = _shift(score, 1) if size > 1 else np.full(size, NEG_INF)
        candidates = np.stack([from_skip, from_prev, score])
        choice = candidates.argmax(axis=0)
        back[j] = 2 - choice
        score = np.maximum(candidates.max(axis=0) + emit[j], NEG_INF)

    state = size - 1
    if size > 1 and score[size - 2] > score[size - 1]:
        state = size - 2

    states = np.empty(k, dtype=np.int64)
    for j in range(k - 1, -1, -1):
        states[j] = state
        state -= back[j, state]

    path = ext[states]
    assert collapse(path, blank) == labels.tolist(), "forced alignment left the valid trellis"
    return path


def path_log_probability(prediction: MapLike, path: Sequence[int]) -> float:
    lp = _log_probs_array(prediction)
    return float(lp[np.arange(lp.shape[0]), np.asarray(path, dtype=np.int64)].sum())


class CollapseState:
    """Greedy collapse carried across incremental emissions"""

    def __init__(self, blank: int):
        self.blank = blank
        self.previous: Optional[int] = None

    def feed(self, cls: int) -> Optional[int]:
        """Returns the label newly emitted by this step, if any"""
        cls = int(cls)
        emitted = cls if cls != self.previous and cls != self.blank else None
        self.previous = cls
        return emitted
