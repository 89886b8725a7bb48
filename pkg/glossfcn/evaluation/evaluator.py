"""
Offline and streamed WER evaluation, plus the online-recognition scenario battery.
"""

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

from loguru import logger

from ..ctc import greedy_decode
from ..data import VideoSample
from ..errors import UndefinedMetricError
from ..model import Recognizer
from ..streaming.session import StreamSession
from ..training.augment import eval_view
from .metrics import EditCounts, edit_counts, wer
from .scenarios import BATTERY, ScenarioItem, ScenarioSpec, make_scenario


@dataclass
class SampleResult:
    item_id: str
    reference: List[int]
    hypothesis: List[int]
    wer: float
    edits: EditCounts


@dataclass
class EvaluationReport:
    """Per-item results of one evaluation run; aggregation is order independent"""

    name: str
    results: List[SampleResult] = field(default_factory=list)
    too_short: int = 0
    undefined: int = 0
    streamed: bool = False
    memory: Dict[str, int] = field(default_factory=dict)

    @property
    def mean_wer(self) -> float:
        if not self.results:
            return 0.0
        return math.fsum(r.wer for r in self.results) / len(self.results)

    @property
    def edits(self) -> EditCounts:
        total = EditCounts()
        for r in self.results:
            total = total + r.edits
        return total

    def summary(self) -> dict:
        edits = self.edits
        summary = {
            "name": self.name,
            "samples": len(self.results),
            "mean_wer": self.mean_wer,
            "substitutions": edits.substitutions,
            "deletions": edits.deletions,
            "insertions": edits.insertions,
            "too_short": self.too_short,
            "undefined": self.undefined,
            "streamed": self.streamed,
        }
        if self.memory:
            summary["memory"] = dict(self.memory)
        return summary

    def write_csv(self, path: Union[str, Path], vocab: Optional[Sequence[str]] = None) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)

        def words(labels: List[int]) -> str:
            return " ".join(vocab[l] if vocab else str(l) for l in labels)

        with path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["sample_id", "reference", "hypothesis", "wer"])
            for r in self.results:
                writer.writerow([r.item_id, words(r.reference), words(r.hypothesis), f"{r.wer:.6f}"])

    def write_json(self, path: Union[str, Path]) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.summary(), indent=2, sort_keys=True), encoding="utf-8")


def _as_items(items: Sequence[Union[ScenarioItem, VideoSample]]) -> List[ScenarioItem]:
    return [i if isinstance(i, ScenarioItem) else ScenarioItem.from_sample(i) for i in items]


def _score(report: EvaluationReport, item: ScenarioItem, hypothesis: List[int]) -> None:
    try:
        value = wer(item.reference, hypothesis)
    except UndefinedMetricError as e:
        logger.warning(f"{item.item_id}: {e}")
        report.undefined += 1
        return
    edits = edit_counts(item.reference, hypothesis)
    report.results.append(SampleResult(item.item_id, list(item.reference), hypothesis, value, edits))


def decode(model: Recognizer, frames) -> List[int]:
    """Greedy offline hypothesis for raw (t, c, h, w) frames"""
    mc = model.config
    _, labels = greedy_decode(model.predict(eval_view(frames, mc.view_resize, mc.input_height)))
    return labels


def evaluate(
    model: Recognizer,
    items: Sequence[Union[ScenarioItem, VideoSample]],
    name: str = "original",
) -> EvaluationReport:
    """Greedy offline decode of every item scored against its reference"""
    report = EvaluationReport(name)
    window = model.config.window
    for item in _as_items(items):
        if item.frames.shape[0] < window:
            logger.warning(f"{item.item_id}: {item.frames.shape[0]} frames is below the {window}-frame window")
            report.too_short += 1
            hypothesis: List[int] = []
        else:
            hypothesis = decode(model, item.frames)
        _score(report, item, hypothesis)
    logger.info(f"{name}: WER {report.mean_wer:.4f} over {len(report.results)} items")
    return report


def evaluate_stream(
    model: Recognizer,
    items: Sequence[Union[ScenarioItem, VideoSample]],
    name: str = "stream",
    vocab: Optional[Sequence[str]] = None,
) -> EvaluationReport:
    """Same scoring as evaluate() but every item goes through a fresh streaming session"""
    report = EvaluationReport(name, streamed=True)
    for item in _as_items(items):
        session = StreamSession(model, vocab)
        session.push_many(item.frames)
        session.finish()
        if session.steps_encoded == 0:
            report.too_short += 1
        for key, value in session.memory_report().items():
            report.memory[key] = max(report.memory.get(key, 0), value)
        _score(report, item, session.hypothesis)
    logger.info(f"{name} (streamed): WER {report.mean_wer:.4f}, buffers {report.memory}")
    return report


def run_battery(
    model: Recognizer,
    samples: Sequence[VideoSample],
    seed: int = 1,
    specs: Sequence[ScenarioSpec] = BATTERY,
    out_dir: Optional[Union[str, Path]] = None,
    vocab: Optional[Sequence[str]] = None,
) -> dict:
    """Evaluate every scenario and report its WER change versus the original samples"""
    samples = list(samples)
    reports: Dict[str, EvaluationReport] = {}
    for spec in specs:
        spec = spec.model_copy(update={"seed": seed, "min_span": model.config.window})
        items = make_scenario(samples, spec)
        if spec.kind == "concat_all":
            report = evaluate_stream(model, items, spec.name, vocab)
        else:
            report = evaluate(model, items, spec.name)
        reports[spec.name] = report
        if out_dir is not None:
            report.write_csv(Path(out_dir) / f"{spec.name}.csv", vocab)

    baseline = reports["original"].mean_wer if "original" in reports else None
    summary = {
        "seed": seed,
        "samples": len(samples),
        "scenarios": {
            name: {
                **report.summary(),
                "degradation": (report.mean_wer - baseline) if baseline is not None else None,
            }
            for name, report in reports.items()
        },
    }
    if out_dir is not None:
        path = Path(out_dir) / "scenarios.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(summary, indent=2, sort_keys=True), encoding="utf-8")
    return summary
