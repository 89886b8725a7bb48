"""
Training configuration and schedule presets
"""

from typing import Any, Dict, List

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..errors import ConfigError

SCHEDULES: Dict[str, Dict[str, Any]] = {
    # desk scale, proportional to the long schedules below
    "desk": dict(epochs=40, lr_halving_epochs=[20, 30], gfe_start_epoch=8, proposal_refresh_every=5, lr=1e-3),
    "rwth": dict(epochs=80, lr_halving_epochs=[40, 60], gfe_start_epoch=15, proposal_refresh_every=10, lr=1e-4),
    "csl": dict(epochs=60, lr_halving_epochs=[30, 45], gfe_start_epoch=10, proposal_refresh_every=10, lr=1e-4),
}


class TrainConfig(BaseModel):
    """Optimization, schedule and augmentation settings for one run"""

    model_config = ConfigDict(frozen=True)

    schedule: str = "custom"
    lr: float = Field(default=1e-4, gt=0.0)
    lambda1: float = Field(default=1e-4, ge=0.0)
    lambda2: float = Field(default=0.05, ge=0.0)
    epochs: int = Field(default=40, ge=1)
    lr_halving_epochs: List[int] = Field(default_factory=lambda: [20, 30])
    gfe_start_epoch: int = Field(default=8, ge=1)
    proposal_refresh_every: int = Field(default=10, ge=1)
    use_gfe: bool = True
    use_balance_ratio: bool = True
    temporal_aug: float = Field(default=0.2, ge=0.0, lt=1.0)
    spatial_aug: bool = True
    accumulate: int = Field(default=4, ge=1)
    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.999, ge=0.0, lt=1.0)
    adam_eps: float = Field(default=1e-8, gt=0.0)
    seed: int = Field(default=1, ge=0)
    split: str = "train"

    @model_validator(mode="after")
    def _check(self) -> "TrainConfig":
        if sorted(self.lr_halving_epochs) != list(self.lr_halving_epochs):
            raise ValueError("lr_halving_epochs must be sorted")
        if any(epoch < 1 for epoch in self.lr_halving_epochs):
            raise ValueError("lr_halving_epochs are 1-based")
        return self

    @classmethod
    def create(cls, **fields: Any) -> "TrainConfig":
        try:
            return cls(**fields)
        except ValidationError as e:
            raise ConfigError(f"Invalid training configuration: {e}") from e

    @classmethod
    def from_schedule(cls, name: str = "desk", **overrides: Any) -> "TrainConfig":
        if name not in SCHEDULES:
            raise ConfigError(f"Unknown schedule '{name}', expected one of {sorted(SCHEDULES)}")
        return cls.create(**{**SCHEDULES[name], "schedule": name, **overrides})

    def lr_at(self, epoch: int) -> float:
        """Base rate halved once for every halving epoch <= epoch"""
        halvings = sum(1 for h in self.lr_halving_epochs if h <= epoch)
        return self.lr * 0.5**halvings

    def gfe_active(self, epoch: int) -> bool:
        return self.use_gfe and epoch >= self.gfe_start_epoch

    def is_refresh_epoch(self, epoch: int) -> bool:
        """Proposals are regenerated at activation and every refresh period after it"""
        if not self.gfe_active(epoch):
            return False
        return (epoch - self.gfe_start_epoch) % self.proposal_refresh_every == 0

    def last_refresh_epoch(self, epoch: int) -> int:
        if not self.gfe_active(epoch):
            return 0
        return epoch - (epoch - self.gfe_start_epoch) % self.proposal_refresh_every
