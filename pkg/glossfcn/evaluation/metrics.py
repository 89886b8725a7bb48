"""
Word error rate over gloss label sequences
"""

from dataclasses import dataclass
from typing import Sequence

import Levenshtein

from ..errors import UndefinedMetricError

# label ids are mapped to code points above Latin-1 before edit alignment
_CODE_OFFSET = 0x100


@dataclass(frozen=True)
class EditCounts:
    substitutions: int = 0
    deletions: int = 0
    insertions: int = 0

    @property
    def total(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    def __add__(self, other: "EditCounts") -> "EditCounts":
        return EditCounts(
            self.substitutions + other.substitutions,
            self.deletions + other.deletions,
            self.insertions + other.insertions,
        )


def _as_text(labels: Sequence[int]) -> str:
    return "".join(chr(_CODE_OFFSET + int(label)) for label in labels)


def edit_counts(reference: Sequence[int], hypothesis: Sequence[int]) -> EditCounts:
    """Substitutions, deletions and insertions of one minimal edit script"""
    ops = Levenshtein.editops(_as_text(reference), _as_text(hypothesis))
    return EditCounts(
        substitutions=sum(1 for op in ops if op[0] == "replace"),
        deletions=sum(1 for op in ops if op[0] == "delete"),
        insertions=sum(1 for op in ops if op[0] == "insert"),
    )


def wer(reference: Sequence[int], hypothesis: Sequence[int]) -> float:
    """(insertions + deletions + substitutions) / |reference|"""
    if len(reference) == 0:
        if len(hypothesis) == 0:
            return 0.0
        raise UndefinedMetricError("WER is undefined for an empty reference with a non-empty hypothesis")
    return edit_counts(reference, hypothesis).total / len(reference)
