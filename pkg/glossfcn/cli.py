"""
Command line entry point.

    glossfcn gen-data --out data/synth
    glossfcn train --data data/synth/unseen-sentences/manifest.jsonl --run-dir runs/base
    glossfcn eval --data ... --checkpoint runs/base/model.gfw
    glossfcn decode sample.gls --checkpoint runs/base/model.gfw
    glossfcn scenario --kind all --data ... --checkpoint ...
    cat sample.gls | glossfcn stream - --checkpoint ...

--config points at a JSON object with optional "dataset", "model" and
"train" sections of field overrides.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from loguru import logger

from .config import LOG_LEVELS, GlossConfig
from .data import GLOSS_NAMES, DatasetConfig, FrameStreamReader, SampleStore, gen_dataset, read_frames
from .errors import ConfigError, FormatError, GlossFCNError, UsageError
from .evaluation import BATTERY, ScenarioSpec, decode, evaluate, make_scenario, run_battery
from .model import ModelConfig, Recognizer
from .streaming import StreamSession
from .training import SCHEDULES, TrainConfig, train


def _configure_logging(level: str) -> None:
    logger.remove()
    logger.add(sys.stderr, level=level, format="{time:HH:mm:ss} | {level: <7} | {message}")


def _load_overrides(path: Optional[str]) -> Dict[str, Dict[str, Any]]:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise FormatError(f"Invalid JSON: {e.msg}", path, e.pos) from e
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}") from e
    if not isinstance(data, dict) or not all(isinstance(v, dict) for v in data.values()):
        raise FormatError("Config must be an object of override sections", path)
    unknown = set(data) - {"dataset", "model", "train"}
    if unknown:
        raise ConfigError(f"Unknown config sections {sorted(unknown)}")
    return data


def _print_json(data: Any) -> None:
    print(json.dumps(data, indent=2, sort_keys=True))


def _require_checkpoint(args) -> Recognizer:
    if not args.checkpoint:
        raise UsageError(f"'{args.command}' needs --checkpoint")
    return Recognizer.load(args.checkpoint)


def _vocab(args, model: Recognizer) -> List[str]:
    if getattr(args, "data", None):
        return list(SampleStore.open(args.data).manifest.vocab)
    return list(GLOSS_NAMES[: model.config.vocab_size])


# =============================================================================
# Commands
# =============================================================================


def cmd_gen_data(args, overrides) -> int:
    fields = {"seed": args.seed, **overrides.get("dataset", {})}
    if args.vocab_size is not None:
        fields["vocab_size"] = args.vocab_size
    config = DatasetConfig.create(**fields)
    manifests = gen_dataset(config, Path(args.out))
    _print_json(
        {
            policy: {
                "manifest": str(Path(args.out) / policy / "manifest.jsonl"),
                "samples": {split: len(manifest.split(split)) for split in manifest.splits},
                "digest": manifest.digest(),
            }
            for policy, manifest in manifests.items()
        }
    )
    return 0


def cmd_train(args, overrides) -> int:
    store = SampleStore.open(args.data)
    if args.checkpoint:
        model = Recognizer.load(args.checkpoint)
    else:
        mc = ModelConfig.from_preset(args.preset, store.manifest.vocab_size, **overrides.get("model", {}))
        model = Recognizer.create(mc, seed=args.seed)

    fields = {"seed": args.seed, **overrides.get("train", {})}
    if args.epochs is not None:
        fields["epochs"] = args.epochs
    config = TrainConfig.from_schedule(args.schedule, **fields)
    run_dir = Path(args.run_dir)
    result = train(store, model, config, run_dir)

    last = result.history[-1]
    _print_json(
        {
            "checkpoint": str(result.checkpoint),
            "epochs": len(result.history),
            "final": last.to_row(),
            "skipped": result.skipped,
        }
    )
    return 0


def cmd_eval(args, overrides) -> int:
    model = _require_checkpoint(args)
    store = SampleStore.open(args.data)
    report = evaluate(model, list(store.iter_samples(args.split)), name=args.split)
    out = Path(args.out)
    report.write_csv(out / f"{args.split}.csv", store.manifest.vocab)
    report.write_json(out / f"{args.split}.json")
    _print_json(report.summary())
    return 0


def cmd_decode(args, overrides) -> int:
    model = _require_checkpoint(args)
    vocab = _vocab(args, model)
    labels = decode(model, read_frames(args.file))
    print(" ".join(vocab[label] for label in labels))
    return 0


def cmd_scenario(args, overrides) -> int:
    model = _require_checkpoint(args)
    store = SampleStore.open(args.data)
    samples = list(store.iter_samples(args.split))
    vocab = store.manifest.vocab
    out = Path(args.out)

    if args.kind == "all":
        _print_json(run_battery(model, samples, seed=args.seed, specs=BATTERY, out_dir=out, vocab=vocab))
        return 0

    spec = ScenarioSpec.create(kind=args.kind, k=args.k, seed=args.seed, min_span=model.config.window)
    items = make_scenario(samples, spec)
    report = evaluate(model, items, name=spec.name)
    report.write_csv(out / f"{spec.name}.csv", vocab)
    report.write_json(out / f"{spec.name}.json")
    _print_json(report.summary())
    return 0


def cmd_stream(args, overrides) -> int:
    model = _require_checkpoint(args)
    vocab = _vocab(args, model)
    session = StreamSession(model, vocab)

    stream = sys.stdin.buffer if args.file == "-" else open(args.file, "rb")
    try:
        reader = FrameStreamReader(stream, "<stdin>" if args.file == "-" else args.file)
        for frame in reader:
            for emission in session.push(frame):
                if emission.word is not None:
                    print(f"step={emission.step} frame={emission.frame} word={emission.word}", flush=True)
    finally:
        if stream is not sys.stdin.buffer:
            stream.close()

    for emission in session.finish():
        if emission.word is not None:
            print(f"step={emission.step} frame={emission.frame} word={emission.word}", flush=True)

    memory = session.memory_report()
    print(
        f"final frames={session.frames_seen} steps={session.emitted_steps} "
        f"buffer_frames={memory['high_water_frames']} buffer_gloss={memory['high_water_gloss']} "
        f"hypothesis={' '.join(vocab[label] for label in session.hypothesis)}"
    )
    return 0


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "eval": cmd_eval,
    "decode": cmd_decode,
    "scenario": cmd_scenario,
    "stream": cmd_stream,
}


SCENARIO_KINDS = ("all", "original", "split", "concat", "concat_all", "rand_repli", "shuffle")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="glossfcn", description="Fully convolutional gloss recognizer")
    parser.add_argument("--preset", choices=("tiny", "full"), default=GlossConfig.PRESET)
    parser.add_argument("--seed", type=int, default=GlossConfig.SEED)
    parser.add_argument("--config", help="JSON file with dataset/model/train override sections")
    parser.add_argument("--checkpoint", help="Model checkpoint (.gfw) with its .cfg beside it")
    parser.add_argument("--log-level", type=str.upper, choices=LOG_LEVELS, default=GlossConfig.LOG_LEVEL)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="Generate the synthetic benchmark")
    p.add_argument("--out", default=GlossConfig.DATA_DIR)
    p.add_argument("--vocab-size", type=int)

    p = sub.add_parser("train", help="Train a recognizer")
    p.add_argument("--data", required=True, help="manifest.jsonl")
    p.add_argument("--run-dir", default=str(Path(GlossConfig.RUNS_DIR) / "latest"))
    p.add_argument("--schedule", choices=sorted(SCHEDULES), default="desk")
    p.add_argument("--epochs", type=int)

    p = sub.add_parser("eval", help="WER of a checkpoint on one split")
    p.add_argument("--data", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--out", default=str(Path(GlossConfig.RUNS_DIR) / "eval"))

    p = sub.add_parser("decode", help="Greedy hypothesis for one GLS1 file")
    p.add_argument("file")
    p.add_argument("--data", help="manifest.jsonl supplying gloss names")

    p = sub.add_parser("scenario", help="Evaluate online-recognition scenarios")
    p.add_argument("--data", required=True)
    p.add_argument("--split", default="test")
    p.add_argument("--kind", default="all", choices=SCENARIO_KINDS)
    p.add_argument("--k", type=int)
    p.add_argument("--out", default=str(Path(GlossConfig.RUNS_DIR) / "scenarios"))

    p = sub.add_parser("stream", help="Incremental recognition of a GLS1 stream")
    p.add_argument("file", help="GLS1 file, or - for standard input")
    p.add_argument("--data", help="manifest.jsonl supplying gloss names")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        GlossConfig.validate()
        _configure_logging(args.log_level)
        overrides = _load_overrides(args.config)
        return COMMANDS[args.command](args, overrides)
    except (UsageError, FormatError, ConfigError) as e:
        logger.error(str(e))
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        # unreadable input file, checkpoint or stream
        message = f"Cannot open {e.filename or 'input'}: {e.strerror or e}"
        logger.error(message)
        print(f"error: {message}", file=sys.stderr)
        return 2
    except GlossFCNError as e:
        logger.error(str(e))
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
