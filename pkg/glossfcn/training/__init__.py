# Training Package
# Schedules, augmentation and the joint training loop

from .config import SCHEDULES, TrainConfig
from .augment import (
    choose_temporal_factor,
    eval_view,
    spatial_augment,
    temporal_augment,
    temporal_index_map,
)
from .trainer import METRIC_COLUMNS, EpochMetrics, Trainer, TrainResult, train, write_metrics

__all__ = [
    "SCHEDULES",
    "TrainConfig",
    "choose_temporal_factor",
    "eval_view",
    "spatial_augment",
    "temporal_augment",
    "temporal_index_map",
    "METRIC_COLUMNS",
    "EpochMetrics",
    "Trainer",
    "TrainResult",
    "train",
    "write_metrics",
]
