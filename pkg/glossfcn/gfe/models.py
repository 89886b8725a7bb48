"""
Data structures for gloss feature enhancement supervision and the joint objective
"""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import numpy as np

from ..engine import Tensor


@dataclass
class AlignmentProposal:
    """Best valid path for one sample, stamped with the epoch that produced it"""

    sample_id: str
    path: np.ndarray
    epoch: int

    @property
    def steps(self) -> int:
        return int(self.path.shape[0])

    def to_dict(self) -> Dict[str, Any]:
        return {"sample_id": self.sample_id, "path": self.path.tolist(), "epoch": self.epoch}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "AlignmentProposal":
        return cls(
            sample_id=data["sample_id"],
            path=np.asarray(data["path"], dtype=np.int64),
            epoch=int(data["epoch"]),
        )


@dataclass
class GfePairBatch:
    """First level gloss features of one sample paired with its proposal targets"""

    sample_id: str
    features: Tensor
    targets: np.ndarray
    proposal_epoch: int
    blank: int

    @property
    def size(self) -> int:
        return int(self.targets.shape[0])

    @property
    def pairs(self) -> List[tuple]:
        """(feature row, target) for every step"""
        return [(self.features.data[j], int(self.targets[j])) for j in range(self.size)]

    @property
    def non_blank(self) -> int:
        return int(np.count_nonzero(self.targets != self.blank))


@dataclass
class LossBreakdown:
    """Joint objective and its parts; total is the tensor to call backward() on"""

    l_ctc: Tensor
    l_gfe: Optional[Tensor]
    l_reg: Tensor
    total: Tensor
    lambda1: float
    lambda2: float

    @property
    def gfe_active(self) -> bool:
        return self.l_gfe is not None

    def to_dict(self) -> Dict[str, float]:
        return {
            "l_ctc": self.l_ctc.item(),
            "l_gfe": self.l_gfe.item() if self.l_gfe is not None else 0.0,
            "l_reg": self.l_reg.item(),
            "total": self.total.item(),
        }
