"""Scene featurization: sequence in, fixed-shape feature matrix out.

Eight streams feed the matrix. Stream 0 is the whole-body view: the lower
torso part's primitive actions described by the hip trajectories in world
coordinates. Streams 1..7 are the seven parts described by relative
trajectories in the body frame. The lower torso part is segmented on world
speeds (whole-body motion is invisible in the body frame by construction);
the remaining parts on body-frame speeds, unless frame_policy forces all
world-frame.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .config import FeatureConfig, feature_hash
from .descriptor import (
    GLOBAL_BLOCK_LEN,
    SceneFeatureMatrix,
    assemble_scene_matrix,
    extend_local_features,
    global_descriptor,
    load_sfm,
    local_descriptor,
    normalize_features,
    save_sfm,
)
from .errors import ConfigMismatch
from .ingest import DatasetManifest, read_sequence_csv
from .kinematics import joint_synthetic_speed, resolve_v_tau, threshold_speed
from .partition import (
    GLOBAL_STREAM,
    NUM_STREAMS,
    PrimitiveAction,
    active_intervals,
    attention_select,
    drop_short_intervals,
    merge_part_intervals,
)
from .skeleton import SkeletonSequence, part_table, to_local
from .util import atomic_write_text


def segment_scene(
    seq: SkeletonSequence,
    cfg: FeatureConfig,
    seq_lcs: SkeletonSequence | None = None,
) -> list[list[PrimitiveAction]]:
    """Primitive actions per stream (index 0 global, 1..7 parts)."""
    if seq_lcs is None:
        seq_lcs = to_local(seq)
    streams: list[list[PrimitiveAction]] = [[] for _ in range(NUM_STREAMS)]
    for part in part_table():
        world_frame = part.number == 1 or cfg.frame_policy == "gcs"
        src = seq if world_frame else seq_lcs
        thresholded = []
        per_joint_intervals = []
        for joint in part.ends:
            speeds = joint_synthetic_speed(src, joint)
            v_tau = resolve_v_tau(speeds, cfg.v_tau_fraction, cfg.v_tau_floor)
            suppressed = threshold_speed(speeds, v_tau)
            thresholded.append(suppressed)
            per_joint_intervals.append(active_intervals(suppressed, cfg.gap))
        merged = merge_part_intervals(*per_joint_intervals)
        merged = drop_short_intervals(merged, cfg.min_interval)
        streams[part.number] = attention_select(
            merged, thresholded, seq.dt, cfg.max_pa, stream=part.number
        )
    # The global stream shares the lower torso part's actions.
    streams[GLOBAL_STREAM] = [
        replace(pa, stream=GLOBAL_STREAM) for pa in streams[1]
    ]
    return streams


def featurize_scene(
    seq: SkeletonSequence, cfg: FeatureConfig, label_index: int = 0
) -> SceneFeatureMatrix:
    """Segment, describe, normalize, and assemble one scene."""
    seq_lcs = to_local(seq)
    streams = segment_scene(seq, cfg, seq_lcs=seq_lcs)
    blocks: list[list[tuple[PrimitiveAction, np.ndarray]]] = [[] for _ in range(NUM_STREAMS)]
    for pa in streams[GLOBAL_STREAM]:
        hips = global_descriptor(seq, pa)
        vec = np.concatenate([d.as_vector() for d in hips])
        blocks[GLOBAL_STREAM].append((pa, normalize_features(vec)))
    for part in part_table():
        for pa in streams[part.number]:
            chain = local_descriptor(seq_lcs, part, pa)
            vec = extend_local_features(chain, seq_lcs, pa)
            blocks[part.number].append((pa, normalize_features(vec)))
    return assemble_scene_matrix(blocks, cfg.max_pa, cfg.width, label_index)


# ---------------------------------------------------------------------------
# Directory-level featurization

INDEX_NAME = "index.json"


@dataclass(frozen=True)
class FeatureSet:
    """Feature matrices of one split, stacked for the classifier."""

    X: np.ndarray  # (N, rows, width) float64
    y: np.ndarray  # (N,) int64
    subjects: tuple[str, ...]
    labels: tuple[str, ...]
    config_hash: str


def _worker_count() -> int:
    cap = os.environ.get("SKELSCENE_THREADS", "")
    try:
        cap_n = int(cap)
    except ValueError:
        cap_n = 0
    return max(1, cap_n) if cap_n else 1


def featurize_manifest(
    manifest: DatasetManifest,
    src_dir: str | Path,
    out_dir: str | Path,
    cfg: FeatureConfig,
) -> str:
    """Featurize every entry into out_dir (one .sfm per scene plus an index).

    Scene order and outputs are deterministic; SKELSCENE_THREADS > 1 only
    parallelizes the work. Returns the feature config hash.
    """
    src_dir = Path(src_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg_hash = feature_hash(cfg, manifest.labels)

    def one(entry):
        dt = entry.dt if entry.dt is not None else manifest.dt
        seq = read_sequence_csv(src_dir / entry.path, dt, subject=entry.subject, label=entry.label)
        sfm = featurize_scene(seq, cfg, manifest.label_index(entry.label))
        name = Path(entry.path).stem + ".sfm"
        save_sfm(out_dir / name, sfm)
        return name

    workers = _worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            names = list(pool.map(one, manifest.entries))
    else:
        names = [one(e) for e in manifest.entries]

    index = {
        "config_hash": cfg_hash,
        "rows": NUM_STREAMS * cfg.max_pa,
        "width": cfg.width,
        "labels": list(manifest.labels),
        "entries": [
            {
                "sfm": name,
                "source": entry.path,
                "subject": entry.subject,
                "label": manifest.label_index(entry.label),
            }
            for name, entry in zip(names, manifest.entries)
        ],
    }
    atomic_write_text(out_dir / INDEX_NAME, json.dumps(index, indent=2) + "\n")
    return cfg_hash


def load_feature_dir(path: str | Path) -> FeatureSet:
    path = Path(path)
    index = json.loads((path / INDEX_NAME).read_text(encoding="utf-8"))
    rows, width = index["rows"], index["width"]
    matrices = []
    y = []
    subjects = []
    for entry in index["entries"]:
        values, label = load_sfm(path / entry["sfm"])
        if values.shape != (rows, width):
            raise ConfigMismatch(
                f"{entry['sfm']}: shape {values.shape} does not match index ({rows}, {width})"
            )
        if label != entry["label"]:
            raise ConfigMismatch(f"{entry['sfm']}: label disagrees with index")
        matrices.append(values)
        y.append(label)
        subjects.append(entry["subject"])
    X = np.stack(matrices) if matrices else np.zeros((0, rows, width))
    return FeatureSet(
        X=X,
        y=np.asarray(y, dtype=np.int64),
        subjects=tuple(subjects),
        labels=tuple(index["labels"]),
        config_hash=index["config_hash"],
    )
