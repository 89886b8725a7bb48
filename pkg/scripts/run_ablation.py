#!/usr/bin/env python3
"""
GFE Ablation Script
Trains three recognizers with shared seeds (no GFE, GFE without the balance
ratio, GFE with it) on one benchmark split and reports their test WERs.

    python scripts/run_ablation.py --data data/synth/unseen-sentences/manifest.jsonl
"""

import argparse
import json
import sys
from pathlib import Path

from loguru import logger

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from glossfcn.config import GlossConfig
from glossfcn.data import SampleStore
from glossfcn.evaluation import evaluate, run_battery
from glossfcn.model import ModelConfig, Recognizer
from glossfcn.training import SCHEDULES, TrainConfig, train

VARIANTS = {
    "no-gfe": dict(use_gfe=False),
    "gfe-no-br": dict(use_gfe=True, use_balance_ratio=False),
    "gfe-br": dict(use_gfe=True, use_balance_ratio=True),
}


def run_variant(name: str, store: SampleStore, args) -> dict:
    model_config = ModelConfig.from_preset(args.preset, store.manifest.vocab_size)
    model = Recognizer.create(model_config, seed=args.seed)
    fields = {"seed": args.seed, **VARIANTS[name]}
    if args.epochs is not None:
        fields["epochs"] = args.epochs
    config = TrainConfig.from_schedule(args.schedule, **fields)

    run_dir = Path(args.out) / name
    logger.info(f"Training variant {name} into {run_dir}")
    result = train(store, model, config, run_dir)

    report = evaluate(model, list(store.iter_samples("test")), name=name)
    report.write_csv(run_dir / "test.csv", store.manifest.vocab)
    report.write_json(run_dir / "test.json")

    summary = {"test_wer": report.mean_wer, "skipped": result.skipped, "checkpoint": str(result.checkpoint)}
    if args.scenarios and name == "gfe-br":
        battery = run_battery(
            model, list(store.iter_samples("test")), seed=args.seed, out_dir=run_dir / "scenarios",
            vocab=store.manifest.vocab,
        )
        summary["scenarios"] = {k: v["mean_wer"] for k, v in battery["scenarios"].items()}
    return summary


def main():
    """Main ablation function."""
    GlossConfig.validate()
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--data", required=True, help="manifest.jsonl of the benchmark split")
    parser.add_argument("--out", default=str(Path(GlossConfig.RUNS_DIR) / "ablation"))
    parser.add_argument("--preset", choices=("tiny", "full"), default=GlossConfig.PRESET)
    parser.add_argument("--schedule", choices=sorted(SCHEDULES), default="desk")
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--seed", type=int, default=GlossConfig.SEED)
    parser.add_argument("--scenarios", action="store_true", help="also run the scenario battery on gfe-br")
    args = parser.parse_args()

    logger.remove()
    logger.add(sys.stderr, level=GlossConfig.LOG_LEVEL)

    store = SampleStore.open(args.data)
    logger.info(f"Starting GFE ablation on {len(store.records('train'))} training samples...")

    results = {name: run_variant(name, store, args) for name in VARIANTS}

    print("\nGFE ablation (test WER):")
    for name, summary in results.items():
        print(f"   {name:<10} {summary['test_wer']:.4f}")

    wers = [results[name]["test_wer"] for name in VARIANTS]
    ordered = wers[0] >= wers[1] >= wers[2]
    print(f"\nOrdering no-gfe >= gfe-no-br >= gfe-br: {'yes' if ordered else 'no'}")
    print(f"Gain of gfe-br over no-gfe: {wers[0] - wers[2]:+.4f}")

    out = Path(args.out) / "ablation.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(results, indent=2, sort_keys=True), encoding="utf-8")
    logger.info(f"Ablation complete, summary in {out}")


if __name__ == "__main__":
    main()
