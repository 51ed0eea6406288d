"""Trajectory descriptors and the fixed-shape scene feature matrix.

A descriptor summarizes one joint over one primitive action as seven
displacement 3-vectors: the start point, five uniformly spaced intermediate
points, and the end point, each relative to a reference (the world origin for
the global stream, a chain-parent joint for part streams). Descriptors are
normalized per 3-vector so body size drops out, then stacked into a matrix of
8 streams x max_pa rows that the classifier consumes.
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import IntervalTooShort, WidthOverflow
from .partition import NUM_STREAMS, FrameInterval, PrimitiveAction
from .skeleton import JOINT_INDEX, BodyPart, SkeletonSequence
from .util import atomic_write_bytes, fmt

ORIGIN = "origin"

INTERMEDIATE_POINTS = 5
DESCRIPTOR_LEN = 3 * (INTERMEDIATE_POINTS + 2)  # b, m1..m5, e
GLOBAL_BLOCK_LEN = 2 * DESCRIPTOR_LEN  # lhip + rhip vs world origin
LOCAL_BLOCK_LEN = 4 * DESCRIPTOR_LEN  # chain pair + root-referenced pair

SFM_MAGIC = b"SFM1"


@dataclass(frozen=True)
class TrajectoryDescriptor:
    """Seven displacement vectors of one joint over one interval."""

    joint: str
    reference: str
    b: np.ndarray  # (3,)
    m: np.ndarray  # (5, 3)
    e: np.ndarray  # (3,)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.b, self.m.ravel(), self.e])


def _reference_positions(seq: SkeletonSequence, reference: str) -> np.ndarray:
    if reference == ORIGIN:
        return np.zeros((len(seq), 3))
    return seq.joint(reference)


def sample_trajectory(
    seq: SkeletonSequence,
    joint: str,
    interval: FrameInterval,
    reference: str = ORIGIN,
) -> TrajectoryDescriptor:
    """Displacements of ``joint`` relative to ``reference`` over ``interval``.

    Intermediate point k sits at frame start + round(k * (len - 1) / 6),
    k = 1..5, evaluated against the reference at that same frame.
    """
    start, end = interval.start, interval.end
    length = end - start + 1
    if length < 2:
        raise IntervalTooShort(f"interval [{start}, {end}] has no extent")
    if end >= len(seq):
        raise IntervalTooShort(f"interval [{start}, {end}] exceeds sequence length {len(seq)}")
    pos = seq.joint(joint)
    ref = _reference_positions(seq, reference)
    rel = pos - ref
    idx = start + np.floor(np.arange(1, 6) * (length - 1) / 6 + 0.5).astype(int)
    return TrajectoryDescriptor(
        joint=joint,
        reference=reference,
        b=rel[start].copy(),
        m=rel[idx].copy(),
        e=rel[end].copy(),
    )


def global_descriptor(
    seq: SkeletonSequence, pa: PrimitiveAction
) -> tuple[TrajectoryDescriptor, TrajectoryDescriptor]:
    """Whole-body motion: lhip and rhip trajectories against the world origin."""
    return (
        sample_trajectory(seq, "lhip", pa.frames, ORIGIN),
        sample_trajectory(seq, "rhip", pa.frames, ORIGIN),
    )


def local_descriptor(
    seq: SkeletonSequence, part: BodyPart, pa: PrimitiveAction
) -> tuple[TrajectoryDescriptor, TrajectoryDescriptor]:
    """Relative motion along the part's chain.

    The first end joint is referenced to the part's pivot, the second end
    joint to the first (e.g. right arm: rhumerus vs rclavicle, rhand vs
    rhumerus).
    """
    first, second = part.ends
    return (
        sample_trajectory(seq, first, pa.frames, part.pivot),
        sample_trajectory(seq, second, pa.frames, first),
    )


def extend_local_features(
    chain: tuple[TrajectoryDescriptor, TrajectoryDescriptor],
    seq: SkeletonSequence,
    pa: PrimitiveAction,
) -> np.ndarray:
    """Cross-part extension: add root-referenced descriptors, 84 numbers total.

    The root joint is the shared reference that ties every part to the rest of
    the body while keeping the block width fixed.
    """
    rooted = [sample_trajectory(seq, d.joint, pa.frames, "root") for d in chain]
    return np.concatenate([d.as_vector() for d in (*chain, *rooted)])


def normalize_features(matrix: np.ndarray) -> np.ndarray:
    """Scale every consecutive 3-vector to unit norm; zero vectors stay zero."""
    arr = np.asarray(matrix, dtype=np.float64)
    if arr.shape[-1] % 3 != 0:
        raise ValueError("feature width must be a multiple of 3")
    vecs = arr.reshape(*arr.shape[:-1], -1, 3)
    norms = np.linalg.norm(vecs, axis=-1, keepdims=True)
    out = np.divide(vecs, norms, out=np.zeros_like(vecs), where=norms > 0)
    return out.reshape(arr.shape)


@dataclass(frozen=True)
class SceneFeatureMatrix:
    """Fixed-shape descriptor stack for one scene.

    Row stream*max_pa + ordinal holds that primitive action's normalized
    descriptor block, right-padded with zeros to ``width``; rows without an
    action stay all-zero and unoccupied.
    """

    values: np.ndarray  # (NUM_STREAMS * max_pa, width) float64
    occupied: np.ndarray  # (rows,) bool
    actions: tuple[PrimitiveAction, ...]
    max_pa: int
    label_index: int

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def assemble_scene_matrix(
    stream_blocks: Sequence[Sequence[tuple[PrimitiveAction, np.ndarray]]],
    max_pa: int,
    width: int,
    label_index: int = 0,
) -> SceneFeatureMatrix:
    """Stack per-stream descriptor blocks into the (8 * max_pa, width) matrix.

    stream_blocks[s] lists (action, block vector) pairs of stream s in
    chronological ordinal order.
    """
    if len(stream_blocks) != NUM_STREAMS:
        raise ValueError(f"expected {NUM_STREAMS} streams, got {len(stream_blocks)}")
    rows = NUM_STREAMS * max_pa
    values = np.zeros((rows, width))
    occupied = np.zeros(rows, dtype=bool)
    actions = []
    for s, blocks in enumerate(stream_blocks):
        if len(blocks) > max_pa:
            raise ValueError(f"stream {s} has {len(blocks)} actions, budget is {max_pa}")
        for pa, block in blocks:
            block = np.asarray(block, dtype=np.float64).ravel()
            if block.size > width:
                raise WidthOverflow(f"block of {block.size} numbers exceeds width {width}")
            row = s * max_pa + pa.ordinal
            values[row, : block.size] = block
            occupied[row] = True
            actions.append(pa)
    values.flags.writeable = False
    occupied.flags.writeable = False
    return SceneFeatureMatrix(
        values=values,
        occupied=occupied,
        actions=tuple(actions),
        max_pa=max_pa,
        label_index=label_index,
    )


def save_sfm(path: str | Path, sfm: SceneFeatureMatrix) -> None:
    """Write the binary matrix plus a sidecar CSV of occupied-row metadata."""
    header = SFM_MAGIC + struct.pack("<III", sfm.rows, sfm.width, sfm.label_index)
    payload = np.ascontiguousarray(sfm.values, dtype="<f4").tobytes()
    atomic_write_bytes(path, header + payload)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["row", "stream", "ordinal", "start", "end", "score"])
    for pa in sfm.actions:
        row = pa.stream * sfm.max_pa + pa.ordinal
        writer.writerow([row, pa.stream, pa.ordinal, pa.frames.start, pa.frames.end, fmt(pa.score)])
    atomic_write_bytes(sidecar_path(path), buf.getvalue().encode("utf-8"))


def sidecar_path(path: str | Path) -> Path:
    return Path(str(path) + ".meta.csv")


def load_sfm(path: str | Path) -> tuple[np.ndarray, int]:
    """Read a matrix file; returns (float64 values, label index)."""
    raw = Path(path).read_bytes()
    if raw[:4] != SFM_MAGIC:
        raise ValueError(f"{path}: bad magic {raw[:4]!r}")
    rows, cols, label = struct.unpack("<III", raw[4:16])
    expected = 16 + rows * cols * 4
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    values = np.frombuffer(raw[16:], dtype="<f4").reshape(rows, cols).astype(np.float64)
    return values, int(label)
