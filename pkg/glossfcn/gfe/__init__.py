# Gloss Feature Enhancement Package
# Proposal pairing, balance-ratio loss, joint objective and the proposal cache

from .models import AlignmentProposal, GfePairBatch, LossBreakdown
from .losses import (
    PROB_FLOOR,
    balance_ratio,
    build_pairs,
    gfe_loss,
    pair_with_proposal,
    total_loss,
    transport_proposal,
)
from .proposal_cache import ProposalCache

__all__ = [
    "AlignmentProposal",
    "GfePairBatch",
    "LossBreakdown",
    "PROB_FLOOR",
    "balance_ratio",
    "build_pairs",
    "gfe_loss",
    "pair_with_proposal",
    "total_loss",
    "transport_proposal",
    "ProposalCache",
]
