"""Command-line pipeline driver.

Subcommands cover the full path from nothing to a confusion matrix:

    synth      generate a labeled synthetic corpus from a class-spec file
    featurize  turn a manifest of scene CSVs into feature-matrix files
    augment    write mirrored twins for every scene in a manifest
    train      fit the classifier on featurized splits
    eval       score a checkpoint on a featurized split
    demo       synth -> split -> augment -> featurize -> train -> eval
    speeds     dump a scene's per-joint synthetic speeds or accelerations
    segments   dump a scene's primitive-action boundaries

Every artifact is written atomically and carries (or sits next to) the hash
of the configuration that produced it; stages refuse to combine artifacts
with disagreeing hashes.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .augment import augment_dataset
from .cnn.model import load_model, save_model
from .cnn.train import evaluate, history_to_csv, train
from .config import PipelineConfig, feature_hash, load_pipeline_config
from .errors import ConfigMismatch, SkelSceneError
from .ingest import (
    build_synthetic_corpus,
    load_generator_spec,
    load_manifest,
    read_sequence_csv,
    save_manifest,
    split_dataset,
    DEFAULT_DT,
)
from .kinematics import joint_synthetic_speed, synthetic_acceleration
from .pipeline import featurize_manifest, load_feature_dir, segment_scene
from .skeleton import JOINT_NAMES, to_local
from .util import atomic_write_text, fmt

BUNDLED_SPEC = "benchmark15"


def _bundled_spec_path() -> Path:
    return Path(resources.files("skelscene") / "data" / "benchmark15.json")


def _load_config(path: str | None) -> PipelineConfig:
    if path is None:
        return PipelineConfig()
    return load_pipeline_config(path)


def _stage(name: str):
    """Decorator: report stage failures with a diagnostic and exit code 1."""

    def wrap(fn):
        def run(args) -> int:
            try:
                return fn(args)
            except SkelSceneError as err:
                print(f"skelscene {name}: {err}", file=sys.stderr)
                return 1
            except FileNotFoundError as err:
                print(f"skelscene {name}: {err}", file=sys.stderr)
                return 1

        return run

    return wrap


# ---------------------------------------------------------------------------
# Stage implementations (shared between subcommands and demo)


def _run_synth(spec_path: Path, out_dir: Path, seed: int):
    spec = load_generator_spec(spec_path)
    manifest = build_synthetic_corpus(spec, out_dir, seed)
    meta = {"generator": spec.name, "seed": seed, "scenes": len(manifest.entries)}
    atomic_write_text(out_dir / "synth_meta.json", json.dumps(meta, indent=2) + "\n")
    print(f"[synth] {len(manifest.entries)} scenes -> {out_dir}")
    return manifest


def _run_featurize(manifest_path: Path, out_dir: Path, cfg: PipelineConfig) -> str:
    manifest = load_manifest(manifest_path)
    cfg_hash = featurize_manifest(manifest, manifest_path.parent, out_dir, cfg.features)
    print(f"[featurize] {len(manifest.entries)} scenes -> {out_dir} (config {cfg_hash})")
    return cfg_hash


def _run_train(features_train: Path, features_val: Path, out_dir: Path, cfg: PipelineConfig) -> Path:
    train_set = load_feature_dir(features_train)
    val_set = load_feature_dir(features_val)
    if train_set.config_hash != val_set.config_hash:
        raise ConfigMismatch(
            f"train features ({train_set.config_hash}) and validation features "
            f"({val_set.config_hash}) come from different configurations"
        )
    classifier = replace(cfg.classifier, classes=len(train_set.labels))
    model, history = train(
        classifier,
        train_set.X,
        train_set.y,
        val_set.X,
        val_set.y,
        feature_hash=train_set.config_hash,
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    checkpoint = out_dir / "model.skm"
    save_model(checkpoint, model)
    atomic_write_text(out_dir / "history.csv", history_to_csv(history))
    meta = {
        "feature_hash": train_set.config_hash,
        "classifier": classifier.to_json_dict(),
        "best_val_acc": max(h.val_acc for h in history),
    }
    atomic_write_text(out_dir / "train_meta.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    best = max(h.val_acc for h in history)
    print(f"[train] {len(history)} epochs, best val acc {best:.4f} -> {checkpoint}")
    return checkpoint


def _run_eval(checkpoint: Path, features: Path, out_dir: Path) -> float:
    model = load_model(checkpoint)
    test_set = load_feature_dir(features)
    if model.feature_hash and model.feature_hash != test_set.config_hash:
        raise ConfigMismatch(
            f"checkpoint was trained on features {model.feature_hash}, "
            f"but {features} holds features {test_set.config_hash}"
        )
    cm = evaluate(model, test_set.X, test_set.y, test_set.labels)
    out_dir.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out_dir / "confusion.csv", cm.to_csv())
    atomic_write_text(out_dir / "confusion.pgm", cm.to_pgm())
    meta = {"feature_hash": test_set.config_hash, "accuracy": cm.accuracy, "samples": cm.total}
    atomic_write_text(out_dir / "eval_meta.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"[eval] accuracy {cm.accuracy:.4f} on {cm.total} scenes -> {out_dir / 'confusion.csv'}")
    return cm.accuracy


# ---------------------------------------------------------------------------
# Subcommands


@_stage("synth")
def cmd_synth(args) -> int:
    spec_path = Path(args.spec) if args.spec else _bundled_spec_path()
    _run_synth(spec_path, Path(args.out), args.seed)
    return 0


@_stage("featurize")
def cmd_featurize(args) -> int:
    cfg = _load_config(args.config)
    _run_featurize(Path(args.manifest), Path(args.out), cfg)
    return 0


@_stage("augment")
def cmd_augment(args) -> int:
    manifest_path = Path(args.manifest)
    manifest = load_manifest(manifest_path)
    augmented = augment_dataset(manifest, manifest_path.parent)
    out_path = (
        Path(args.out_manifest)
        if args.out_manifest
        else manifest_path.with_name(manifest_path.stem + "_augmented.json")
    )
    save_manifest(augmented, out_path)
    print(f"[augment] {len(manifest.entries)} -> {len(augmented.entries)} entries, manifest {out_path}")
    return 0


@_stage("train")
def cmd_train(args) -> int:
    cfg = _load_config(args.config)
    cfg = _apply_train_overrides(cfg, args)
    _run_train(Path(args.features_train), Path(args.features_val), Path(args.out), cfg)
    return 0


@_stage("eval")
def cmd_eval(args) -> int:
    _run_eval(Path(args.checkpoint), Path(args.features), Path(args.out))
    return 0


@_stage("demo")
def cmd_demo(args) -> int:
    cfg = _load_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed, classifier=replace(cfg.classifier, seed=args.seed))
    cfg = _apply_train_overrides(cfg, args)
    out = Path(args.out)
    spec_path = Path(args.spec) if args.spec else _bundled_spec_path()

    corpus = out / "corpus"
    manifest = _run_synth(spec_path, corpus, cfg.seed)

    train_m, val_m, test_m = split_dataset(manifest, cfg.split)
    if cfg.augment_train:
        train_m = augment_dataset(train_m, corpus)
        print(f"[augment] training split doubled to {len(train_m.entries)} entries")
    splits = out / "splits"
    splits.mkdir(parents=True, exist_ok=True)
    for name, m in (("train", train_m), ("val", val_m), ("test", test_m)):
        save_manifest(m, splits / f"{name}.json")

    features = out / "features"
    for name, m in (("train", train_m), ("val", val_m), ("test", test_m)):
        featurize_manifest(m, corpus, features / name, cfg.features)
        print(f"[featurize] {name}: {len(m.entries)} scenes")

    checkpoint = _run_train(features / "train", features / "val", out, cfg)
    _run_eval(checkpoint, features / "test", out)
    return 0


@_stage("speeds")
def cmd_speeds(args) -> int:
    seq = read_sequence_csv(args.scene, args.dt)
    if args.coords == "lcs":
        seq = to_local(seq)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if args.what == "speed":
        series = {j: joint_synthetic_speed(seq, j).values for j in JOINT_NAMES}
    else:
        series = {
            j: synthetic_acceleration(joint_synthetic_speed(seq, j), seq.dt).values
            for j in JOINT_NAMES
        }
    writer.writerow(["entry", *JOINT_NAMES])
    n = len(next(iter(series.values())))
    for f in range(n):
        writer.writerow([f, *(fmt(series[j][f]) for j in JOINT_NAMES)])
    _write_or_print(args.out, buf.getvalue())
    return 0


@_stage("segments")
def cmd_segments(args) -> int:
    cfg = _load_config(args.config)
    seq = read_sequence_csv(args.scene, args.dt)
    streams = segment_scene(seq, cfg.features)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["stream", "q", "start", "end", "score"])
    for pas in streams:
        for pa in pas:
            writer.writerow([pa.stream, pa.ordinal, pa.frames.start, pa.frames.end, fmt(pa.score)])
    _write_or_print(args.out, buf.getvalue())
    return 0


def _write_or_print(out: str | None, text: str) -> None:
    if out:
        atomic_write_text(out, text)
    else:
        sys.stdout.write(text)


def _apply_train_overrides(cfg: PipelineConfig, args) -> PipelineConfig:
    clf = cfg.classifier
    if getattr(args, "lr", None) is not None:
        clf = replace(clf, learning_rate=args.lr)
    if getattr(args, "epochs", None) is not None:
        clf = replace(clf, epochs=args.epochs)
    if getattr(args, "filters", None) is not None:
        clf = replace(clf, filters=args.filters)
    if getattr(args, "optimizer", None) is not None:
        clf = replace(clf, optimizer=args.optimizer)
    if getattr(args, "train_seed", None) is not None:
        clf = replace(clf, seed=args.train_seed)
    return replace(cfg, classifier=clf)


def _add_train_overrides(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lr", type=float, help="override learning rate")
    p.add_argument("--epochs", type=int, help="override epoch budget")
    p.add_argument("--filters", type=int, help="override total filter count")
    p.add_argument("--optimizer", choices=("sgd", "adam"), help="override optimizer")
    p.add_argument("--train-seed", type=int, help="override classifier seed only")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skelscene",
        description="Skeleton-sequence activity-scene recognition pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--spec", help=f"generator spec JSON (default: bundled {BUNDLED_SPEC})")
    p.add_argument("--out", required=True, help="corpus output directory")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("featurize", help="featurize a manifest of scenes")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="feature output directory")
    p.add_argument("--config", help="pipeline config TOML")
    p.set_defaults(fn=cmd_featurize)

    p = sub.add_parser("augment", help="mirror every scene of a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-manifest", help="where to write the doubled manifest")
    p.set_defaults(fn=cmd_augment)

    p = sub.add_parser("train", help="train the classifier on featurized splits")
    p.add_argument("--features-train", required=True)
    p.add_argument("--features-val", required=True)
    p.add_argument("--out", required=True, help="run output directory")
    p.add_argument("--config", help="pipeline config TOML")
    _add_train_overrides(p)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on featurized scenes")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("demo", help="full pipeline on a synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="pipeline config TOML")
    p.add_argument("--spec", help="generator spec JSON (default: bundled)")
    p.add_argument("--seed", type=int, help="seed for both corpus and training")
    _add_train_overrides(p)
    p.set_defaults(fn=cmd_demo)

    p = sub.add_parser("speeds", help="dump per-joint synthetic speeds/accelerations")
    p.add_argument("--scene", required=True, help="scene CSV file")
    p.add_argument("--dt", type=float, default=DEFAULT_DT)
    p.add_argument("--what", choices=("speed", "accel"), default="speed")
    p.add_argument("--coords", choices=("gcs", "lcs"), default="gcs")
    p.add_argument("--out", help="output CSV (default: stdout)")
    p.set_defaults(fn=cmd_speeds)

    p = sub.add_parser("segments", help="dump primitive-action boundaries")
    p.add_argument("--scene", required=True, help="scene CSV file")
    p.add_argument("--dt", type=float, default=DEFAULT_DT)
    p.add_argument("--config", help="pipeline config TOML")
    p.add_argument("--out", help="output CSV (default: stdout)")
    p.set_defaults(fn=cmd_segments)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
