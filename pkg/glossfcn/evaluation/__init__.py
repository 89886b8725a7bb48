# Evaluation Package
# Word error rate, online-recognition scenarios and evaluation reports

from .metrics import EditCounts, edit_counts, wer
from .scenarios import BATTERY, ScenarioItem, ScenarioSpec, make_scenario, split_at
from .evaluator import EvaluationReport, SampleResult, decode, evaluate, evaluate_stream, run_battery

__all__ = [
    "EditCounts",
    "edit_counts",
    "wer",
    "BATTERY",
    "ScenarioItem",
    "ScenarioSpec",
    "make_scenario",
    "split_at",
    "EvaluationReport",
    "SampleResult",
    "decode",
    "evaluate",
    "evaluate_stream",
    "run_battery",
]
