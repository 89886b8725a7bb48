# CTC Package
# Collapse, loss, greedy decoding and forced alignment

from .alignment import (
    NEG_INF,
    CollapseState,
    check_feasible,
    collapse,
    ctc_loss,
    forced_align,
    greedy_decode,
    is_feasible,
    path_log_probability,
    required_steps,
)

__all__ = [
    "NEG_INF",
    "CollapseState",
    "check_feasible",
    "collapse",
    "ctc_loss",
    "forced_align",
    "greedy_decode",
    "is_feasible",
    "path_log_probability",
    "required_steps",
]
