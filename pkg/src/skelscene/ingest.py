"""Dataset ingestion: sequence CSV files, JSON manifests, subject splits, and
a scripted synthetic-scene generator.

One CSV file holds one scene (45 coordinate columns, meters); a JSON manifest
lists scenes with subject ids and labels. The synthetic generator exists
because the motion-capture corpora this pipeline targets are licensed and
cannot ship with the code: it scripts per-part motion segments on a stock
skeleton so that segmentation and classification behavior can be verified
against known ground truth.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Iterator, TextIO

import numpy as np

from .errors import ParseError, SchemaError, SplitError
from .skeleton import JOINT_INDEX, JOINT_NAMES, NUM_JOINTS, SkeletonSequence
from .util import atomic_write_text, fmt

DEFAULT_DT = 0.02  # 50 fps capture

_COORD_SUFFIXES = ("x", "y", "z")
CANONICAL_COLUMNS = tuple(
    f"{joint}_{axis}" for joint in JOINT_NAMES for axis in _COORD_SUFFIXES
)


# ---------------------------------------------------------------------------
# Sequence CSV


def parse_sequence_csv(
    stream: TextIO | str,
    dt: float,
    subject: str = "",
    label: str | None = None,
) -> SkeletonSequence:
    """Parse one scene file into a GCS sequence.

    The header must carry ``frame`` plus the 45 canonical joint columns, in
    any order but with no extras and no duplicates. Frame numbers must count
    0, 1, 2, ... and every cell must be a finite decimal number.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty file") from None
    if not header or header[0] != "frame":
        raise SchemaError("first column must be 'frame'")
    seen = header[1:]
    missing = set(CANONICAL_COLUMNS) - set(seen)
    if missing:
        raise SchemaError(f"missing columns: {', '.join(sorted(missing))}")
    unknown = [c for c in seen if c not in CANONICAL_COLUMNS]
    if unknown:
        raise SchemaError(f"unknown columns: {', '.join(unknown)}")
    if len(seen) != len(CANONICAL_COLUMNS):
        raise SchemaError("duplicate columns in header")
    col_target = [
        (JOINT_INDEX[name.rsplit("_", 1)[0]], _COORD_SUFFIXES.index(name.rsplit("_", 1)[1]))
        for name in seen
    ]

    rows: list[np.ndarray] = []
    for i, cells in enumerate(reader):
        line = i + 2  # 1-based, after the header
        if len(cells) != len(header):
            raise ParseError(line, "", f"expected {len(header)} cells, found {len(cells)}")
        try:
            frame_no = int(cells[0])
        except ValueError:
            raise ParseError(line, "frame", f"not an integer: {cells[0]!r}") from None
        if frame_no != i:
            raise ParseError(line, "frame", f"expected frame {i}, found {frame_no}")
        pose = np.empty((NUM_JOINTS, 3))
        for cell, name, (j, axis) in zip(cells[1:], seen, col_target):
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(line, name, f"not a number: {cell!r}") from None
            if not math.isfinite(value):
                raise ParseError(line, name, f"non-finite value: {cell!r}")
            pose[j, axis] = value
        rows.append(pose)

    if len(rows) < 2:
        raise SchemaError(f"sequence has {len(rows)} frames, need at least 2")
    return SkeletonSequence(
        positions=np.stack(rows), dt=dt, subject=subject, label=label
    )


def read_sequence_csv(
    path: str | Path, dt: float, subject: str = "", label: str | None = None
) -> SkeletonSequence:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return parse_sequence_csv(fh, dt, subject=subject, label=label)


def serialize_sequence_csv(seq: SkeletonSequence) -> str:
    """Canonical text form: header in canonical column order, shortest
    round-tripping decimal for every coordinate."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["frame", *CANONICAL_COLUMNS])
    for f in range(len(seq)):
        writer.writerow([f, *(fmt(v) for v in seq.positions[f].ravel())])
    return buf.getvalue()


def write_sequence_csv(seq: SkeletonSequence, path: str | Path) -> None:
    atomic_write_text(path, serialize_sequence_csv(seq))


# ---------------------------------------------------------------------------
# Manifests and splits


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    subject: str
    label: str
    dt: float | None = None  # per-file override


@dataclass(frozen=True)
class DatasetManifest:
    dt: float
    labels: tuple[str, ...]
    entries: tuple[ManifestEntry, ...]

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("label vocabulary has duplicates")
        vocab = set(self.labels)
        for e in self.entries:
            if e.label not in vocab:
                raise ValueError(f"entry {e.path}: label {e.label!r} not in vocabulary")
            if not e.subject:
                raise ValueError(f"entry {e.path}: empty subject id")

    def subjects(self) -> tuple[str, ...]:
        return tuple(sorted({e.subject for e in self.entries}))

    def label_index(self, label: str) -> int:
        return self.labels.index(label)


def manifest_to_json(manifest: DatasetManifest) -> str:
    doc = {
        "dt": manifest.dt,
        "labels": list(manifest.labels),
        "entries": [
            {
                "path": e.path,
                "subject": e.subject,
                "label": e.label,
                **({"dt": e.dt} if e.dt is not None else {}),
            }
            for e in manifest.entries
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    atomic_write_text(path, manifest_to_json(manifest))


def load_manifest(path: str | Path) -> DatasetManifest:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    entries = tuple(
        ManifestEntry(
            path=e["path"], subject=e["subject"], label=e["label"], dt=e.get("dt")
        )
        for e in doc["entries"]
    )
    return DatasetManifest(dt=doc["dt"], labels=tuple(doc["labels"]), entries=entries)


@dataclass(frozen=True)
class SplitSpec:
    train: frozenset[str]
    val: frozenset[str]
    test: frozenset[str]

    @classmethod
    def of(cls, train: Iterable[str], val: Iterable[str], test: Iterable[str]) -> "SplitSpec":
        return cls(frozenset(train), frozenset(val), frozenset(test))


def split_dataset(
    manifest: DatasetManifest, spec: SplitSpec
) -> tuple[DatasetManifest, DatasetManifest, DatasetManifest]:
    """Partition entries by subject into train/val/test manifests."""
    sets = (spec.train, spec.val, spec.test)
    for i in range(3):
        for j in range(i + 1, 3):
            overlap = sets[i] & sets[j]
            if overlap:
                raise SplitError(f"subjects in more than one split: {sorted(overlap)}")
    covered = spec.train | spec.val | spec.test
    uncovered = set(manifest.subjects()) - covered
    if uncovered:
        raise SplitError(f"subjects not assigned to any split: {sorted(uncovered)}")
    buckets: tuple[list[ManifestEntry], ...] = ([], [], [])
    for e in manifest.entries:
        for bucket, subjects in zip(buckets, sets):
            if e.subject in subjects:
                bucket.append(e)
                break
    return tuple(
        replace(manifest, entries=tuple(bucket)) for bucket in buckets
    )  # type: ignore[return-value]


# ---------------------------------------------------------------------------
# Synthetic scenes

# Stock pose, unit body scale, meters. The root sits exactly at the foot of
# the perpendicular from the spine onto the hip line, so it lands on the LCS
# origin by construction.
REST_POSE: dict[str, tuple[float, float, float]] = {
    "root": (0.0, 1.00, 0.0),
    "lhip": (0.12, 1.00, 0.0),
    "rhip": (-0.12, 1.00, 0.0),
    "spine": (0.0, 1.28, 0.0),
    "throat": (0.0, 1.52, 0.0),
    "lclavicle": (0.19, 1.47, 0.0),
    "rclavicle": (-0.19, 1.47, 0.0),
    "lhumerus": (0.27, 1.18, 0.0),
    "rhumerus": (-0.27, 1.18, 0.0),
    "lhand": (0.31, 0.92, 0.0),
    "rhand": (-0.31, 0.92, 0.0),
    "lfemur": (0.13, 0.52, 0.0),
    "rfemur": (-0.13, 0.52, 0.0),
    "ltibia": (0.15, 0.08, 0.0),
    "rtibia": (-0.15, 0.08, 0.0),
}

# Motion of a part drags its distal end joint at full amplitude and its
# proximal end joint at this fraction.
PROXIMAL_FACTOR = 0.6

GLOBAL_PART = "global"

PART_END_JOINTS: dict[str, tuple[str, str]] = {
    "lower torso": ("lhip", "rhip"),
    "spine": ("spine", "throat"),
    "upper torso": ("lclavicle", "rclavicle"),
    "left arm": ("lhumerus", "lhand"),
    "right arm": ("rhumerus", "rhand"),
    "left leg": ("lfemur", "ltibia"),
    "right leg": ("rfemur", "rtibia"),
}

# Positional noise is band-limited (slow sway, not white jitter) so that its
# speed stays under any sane suppression threshold; frame-defining joints get
# extra damping to keep the body frame steady.
NOISE_BAND_HZ = (0.05, 0.25)
NOISE_COMPONENTS = 3
TORSO_NOISE_FACTOR = 0.25
_TORSO_JOINTS = ("root", "lhip", "rhip", "spine")


@dataclass(frozen=True)
class MotionSegment:
    """One scripted motion: ``move`` frames of activity, then ``rest`` frames.

    ``amplitude`` is the peak end-joint speed in m/s (peak angular speed in
    rad/s for rotate mode); ``direction`` the motion direction in GCS.
    oscillate goes out and back to the rest pose; translate and rotate
    displace persistently.
    """

    move: int
    rest: int
    amplitude: float
    direction: tuple[float, float, float] = (0.0, 1.0, 0.0)
    mode: str = "oscillate"
    repeat: int = 1

    def __post_init__(self):
        if self.move < 1:
            raise ValueError("move duration must be >= 1 frame")
        if self.rest < 0 or self.repeat < 1:
            raise ValueError("rest must be >= 0 and repeat >= 1")
        if self.mode not in ("oscillate", "translate", "rotate"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass(frozen=True)
class PartScript:
    """Motion segments of one part (or of the whole body for 'global')."""

    part: str
    segments: tuple[MotionSegment, ...]
    lead: int = 0

    def __post_init__(self):
        if self.part != GLOBAL_PART and self.part not in PART_END_JOINTS:
            raise ValueError(f"unknown part {self.part!r}")
        if not any(s.move >= 1 for s in self.segments):
            raise ValueError(f"part {self.part!r}: no moving segment")
        if self.lead < 0:
            raise ValueError("lead must be >= 0")


@dataclass(frozen=True)
class JitterSpec:
    """Per-scene random variation of the script, fractions/degrees/frames."""

    duration: float = 0.0
    amplitude: float = 0.0
    direction_deg: float = 0.0
    lead: int = 0


@dataclass(frozen=True)
class SyntheticClassSpec:
    """A labeled scene grammar: one or more script variants plus noise.

    A scene samples one variant uniformly (variants encode e.g. which arm
    performs a one-sided action, so mirror augmentation stays label-safe).
    """

    name: str
    variants: tuple[tuple[PartScript, ...], ...]
    noise: float = 0.0
    frames: int = 400
    dt: float = DEFAULT_DT
    jitter: JitterSpec | None = None
    placement: tuple[float, float, float] = (0.0, 0.0, 0.0)
    placement_extent: tuple[float, float, float] = (0.0, 0.0, 0.0)
    scale: float = 1.0
    tempo: float = 1.0

    def __post_init__(self):
        if self.noise < 0:
            raise ValueError("noise amplitude must be >= 0")
        if not self.variants or not all(self.variants):
            raise ValueError("need at least one variant with at least one script")
        if self.frames < 2:
            raise ValueError("a scene needs at least 2 frames")


def _motion_steps(seg: MotionSegment, amplitude: float, dt: float) -> np.ndarray:
    """Per-frame displacement steps over the move window.

    Speed follows a half-sine (no interior standstill). In oscillate mode the
    second half runs backwards and is rescaled so the joint lands exactly on
    its starting point.
    """
    m = seg.move
    steps = amplitude * dt * np.sin(np.pi * (np.arange(m) + 0.5) / m)
    if seg.mode == "oscillate":
        h = m // 2
        signed = steps.copy()
        signed[h:] *= -1.0
        back = steps[h:].sum()
        if back > 0:
            signed[h:] *= steps[:h].sum() / back
        return signed
    return steps


def _script_step_series(
    script: PartScript, n_frames: int, dt: float, rng: np.random.Generator,
    jitter: JitterSpec | None, tempo: float,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Velocity-step series of one script.

    Returns (vector steps (n-1, 3) for displacement modes,
    scalar angle steps (n-1,) for rotate mode, scripted segment count).
    """
    vec = np.zeros((n_frames - 1, 3))
    ang = np.zeros(n_frames - 1)
    cursor = script.lead
    if jitter and jitter.lead:
        cursor = max(0, cursor + int(rng.integers(-jitter.lead, jitter.lead + 1)))
    count = 0
    for seg in script.segments:
        for _ in range(seg.repeat):
            move, rest, amp = seg.move, seg.rest, seg.amplitude * tempo
            direction = np.asarray(seg.direction, dtype=np.float64)
            if jitter:
                if jitter.duration:
                    move = max(2, int(round(move * (1 + rng.uniform(-jitter.duration, jitter.duration)))))
                    rest = max(0, int(round(rest * (1 + rng.uniform(-jitter.duration, jitter.duration)))))
                if jitter.amplitude:
                    amp *= 1 + rng.uniform(-jitter.amplitude, jitter.amplitude)
                if jitter.direction_deg:
                    direction = _wobble(direction, jitter.direction_deg, rng)
            if cursor >= n_frames - 1:
                break
            move = min(move, n_frames - 1 - cursor)
            steps = _motion_steps(replace(seg, move=move), amp, dt)
            if seg.mode == "rotate":
                ang[cursor : cursor + move] += steps
            else:
                norm = np.linalg.norm(direction)
                if norm > 0:
                    direction = direction / norm
                vec[cursor : cursor + move] += steps[:, None] * direction
            count += 1
            cursor += move + rest
    return vec, ang, count


def _wobble(direction: np.ndarray, max_deg: float, rng: np.random.Generator) -> np.ndarray:
    axis = rng.standard_normal(3)
    axis /= np.linalg.norm(axis)
    angle = np.radians(rng.uniform(-max_deg, max_deg))
    d = np.asarray(direction, dtype=np.float64)
    return (
        d * np.cos(angle)
        + np.cross(axis, d) * np.sin(angle)
        + axis * np.dot(axis, d) * (1 - np.cos(angle))
    )


def _band_noise(
    n_frames: int, dt: float, amplitude: float, rng: np.random.Generator
) -> np.ndarray:
    """Slow sinusoidal sway per joint and axis, shape (n, 15, 3)."""
    t = np.arange(n_frames) * dt
    out = np.zeros((n_frames, NUM_JOINTS, 3))
    per_axis = amplitude / math.sqrt(3.0)
    for j, name in enumerate(JOINT_NAMES):
        damp = TORSO_NOISE_FACTOR if name in _TORSO_JOINTS else 1.0
        for axis in range(3):
            weights = rng.uniform(0.5, 1.0, NOISE_COMPONENTS)
            weights *= per_axis * damp / weights.sum()
            freqs = rng.uniform(*NOISE_BAND_HZ, NOISE_COMPONENTS)
            phases = rng.uniform(0.0, 2 * np.pi, NOISE_COMPONENTS)
            out[:, j, axis] = (
                weights[None, :] * np.sin(2 * np.pi * freqs[None, :] * t[:, None] + phases[None, :])
            ).sum(axis=1)
    return out


def generate_synthetic_scene(spec: SyntheticClassSpec, seed: int) -> SkeletonSequence:
    """Synthesize one labeled scene; bit-identical for identical (spec, seed)."""
    rng = np.random.default_rng(np.uint64(seed))
    n = spec.frames

    variant = spec.variants[int(rng.integers(len(spec.variants)))]

    offset = np.asarray(spec.placement, dtype=np.float64) + np.asarray(
        spec.placement_extent
    ) * rng.uniform(-1.0, 1.0, 3)
    rest = np.array([REST_POSE[name] for name in JOINT_NAMES]) * spec.scale
    rest += offset

    positions = np.repeat(rest[None, :, :], n, axis=0)

    pivot_xz = rest[JOINT_INDEX["root"]].copy()  # rotation axis anchor
    angle_steps = np.zeros(n - 1)

    for script in variant:
        vec_steps, ang_steps, _ = _script_step_series(
            script, n, spec.dt, rng, spec.jitter, spec.tempo
        )
        if script.part == GLOBAL_PART:
            disp = np.concatenate([[np.zeros(3)], np.cumsum(vec_steps, axis=0)])
            positions += disp[:, None, :]
            angle_steps += ang_steps
        else:
            first, second = PART_END_JOINTS[script.part]
            disp = np.concatenate([[np.zeros(3)], np.cumsum(vec_steps, axis=0)])
            positions[:, JOINT_INDEX[first]] += disp * PROXIMAL_FACTOR
            positions[:, JOINT_INDEX[second]] += disp

    if angle_steps.any():
        theta = np.concatenate([[0.0], np.cumsum(angle_steps)])
        c, s = np.cos(theta), np.sin(theta)
        centered = positions - pivot_xz
        x, z = centered[..., 0].copy(), centered[..., 2].copy()
        centered[..., 0] = c[:, None] * x + s[:, None] * z
        centered[..., 2] = -s[:, None] * x + c[:, None] * z
        positions = centered + pivot_xz

    if spec.noise > 0:
        positions = positions + _band_noise(n, spec.dt, spec.noise, rng)

    return SkeletonSequence(
        positions=positions, dt=spec.dt, subject="", label=spec.name
    )


def scripted_segment_counts(
    spec: SyntheticClassSpec, variant_index: int = 0
) -> dict[str, int]:
    """Scripted motion-segment count per part of one variant (jitter-free)."""
    counts: dict[str, int] = {}
    for script in spec.variants[variant_index]:
        n = sum(seg.repeat for seg in script.segments)
        counts[script.part] = counts.get(script.part, 0) + n
    return counts


# ---------------------------------------------------------------------------
# Generator spec files and corpus construction


@dataclass(frozen=True)
class GeneratorSpec:
    """A whole benchmark corpus: class grammars plus sampling plan."""

    name: str
    classes: tuple[SyntheticClassSpec, ...]
    subjects: int = 7
    scenes_per_subject: int = 8

    def labels(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.classes)


def _segment_from_json(doc: dict) -> MotionSegment:
    return MotionSegment(
        move=doc["move"],
        rest=doc["rest"],
        amplitude=doc["amplitude"],
        direction=tuple(doc.get("direction", (0.0, 1.0, 0.0))),
        mode=doc.get("mode", "oscillate"),
        repeat=doc.get("repeat", 1),
    )


def load_generator_spec(path: str | Path) -> GeneratorSpec:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    jitter = None
    if "jitter" in doc:
        j = doc["jitter"]
        jitter = JitterSpec(
            duration=j.get("duration", 0.0),
            amplitude=j.get("amplitude", 0.0),
            direction_deg=j.get("direction_deg", 0.0),
            lead=j.get("lead", 0),
        )
    placement = doc.get("placement", {})
    classes = []
    for cdoc in doc["classes"]:
        variants = tuple(
            tuple(
                PartScript(
                    part=s["part"],
                    lead=s.get("lead", 0),
                    segments=tuple(_segment_from_json(g) for g in s["segments"]),
                )
                for s in variant
            )
            for variant in cdoc["variants"]
        )
        classes.append(
            SyntheticClassSpec(
                name=cdoc["name"],
                variants=variants,
                noise=doc.get("noise", 0.0),
                frames=doc.get("frames", 400),
                dt=doc.get("dt", DEFAULT_DT),
                jitter=jitter,
                placement=tuple(placement.get("center", (0.0, 0.0, 0.0))),
                placement_extent=tuple(placement.get("extent", (0.0, 0.0, 0.0))),
            )
        )
    return GeneratorSpec(
        name=doc.get("name", Path(path).stem),
        classes=tuple(classes),
        subjects=doc.get("subjects", 7),
        scenes_per_subject=doc.get("scenes_per_subject", 8),
    )


def subject_id(index: int) -> str:
    return f"s{index + 1:02d}"


def _subject_spec(spec: SyntheticClassSpec, subject_index: int) -> SyntheticClassSpec:
    """Per-subject body scale and tempo so subjects differ systematically."""
    return replace(
        spec,
        scale=0.88 + 0.04 * subject_index,
        tempo=0.92 + 0.025 * subject_index,
    )


def iter_corpus(
    spec: GeneratorSpec, seed: int
) -> Iterator[tuple[SkeletonSequence, str, str]]:
    """Yield (sequence, subject id, label) for the whole sampling plan."""
    for ci, cls in enumerate(spec.classes):
        for si in range(spec.subjects):
            sub_spec = _subject_spec(cls, si)
            for k in range(spec.scenes_per_subject):
                child = np.random.SeedSequence(seed, spawn_key=(ci, si, k))
                scene_seed = int(child.generate_state(1, np.uint64)[0])
                seq = generate_synthetic_scene(sub_spec, scene_seed)
                yield replace(seq, subject=subject_id(si)), subject_id(si), cls.name


def build_synthetic_corpus(
    spec: GeneratorSpec, out_dir: str | Path, seed: int
) -> DatasetManifest:
    """Write every scene CSV plus manifest.json under out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    dt = spec.classes[0].dt if spec.classes else DEFAULT_DT
    counters: dict[tuple[str, str], int] = {}
    for seq, subject, label in iter_corpus(spec, seed):
        k = counters.get((label, subject), 0)
        counters[(label, subject)] = k + 1
        name = f"{label}_{subject}_{k:02d}.csv"
        write_sequence_csv(seq, out_dir / name)
        entries.append(ManifestEntry(path=name, subject=subject, label=label))
    manifest = DatasetManifest(dt=dt, labels=spec.labels(), entries=tuple(entries))
    save_manifest(manifest, out_dir / "manifest.json")
    return manifest
