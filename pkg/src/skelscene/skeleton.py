"""Skeleton data model: canonical joints, coordinate frames, seven-part division.

Positions are meters. Two frame tags exist: GCS (camera-anchored world
coordinates) and LCS (a per-pose body frame built from the hip joints and the
spine). The LCS origin is the foot of the perpendicular dropped from the spine
joint onto the line through the two hips; +x points toward the left hip, +y
from the origin toward the spine, +z completes the right-handed triad.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DegenerateFrame

JOINT_NAMES: tuple[str, ...] = (
    "root",
    "lhip",
    "rhip",
    "lfemur",
    "ltibia",
    "rfemur",
    "rtibia",
    "spine",
    "throat",
    "lclavicle",
    "lhumerus",
    "lhand",
    "rclavicle",
    "rhumerus",
    "rhand",
)
JOINT_INDEX: dict[str, int] = {name: i for i, name in enumerate(JOINT_NAMES)}
NUM_JOINTS = len(JOINT_NAMES)

GCS = "gcs"
LCS = "lcs"

# Below this distance hips are considered coincident / spine on the hip line.
DEGENERATE_EPS = 1e-9

_LHIP = JOINT_INDEX["lhip"]
_RHIP = JOINT_INDEX["rhip"]
_SPINE = JOINT_INDEX["spine"]


@dataclass(frozen=True)
class SkeletonFrame:
    """One pose: positions indexed like JOINT_NAMES, shape (15, 3)."""

    positions: np.ndarray
    index: int = 0
    frame: str = GCS


@dataclass(frozen=True)
class SkeletonSequence:
    """Ordered poses with a fixed sampling interval.

    positions has shape (n_frames, 15, 3); frame indices are implicit
    (0, 1, 2, ...). ``frame`` tags the coordinate system of every pose.
    Kinematic operations need at least two frames and say so; a single-pose
    sequence is only a container.
    """

    positions: np.ndarray
    dt: float
    subject: str = ""
    label: str | None = None
    frame: str = GCS

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=np.float64)
        if pos.ndim != 3 or pos.shape[1:] != (NUM_JOINTS, 3):
            raise ValueError(f"positions must be (n, {NUM_JOINTS}, 3), got {pos.shape}")
        if pos.shape[0] < 1:
            raise ValueError("a sequence needs at least 1 frame")
        if not np.isfinite(pos).all():
            raise ValueError("positions contain non-finite values")
        if not self.dt > 0:
            raise ValueError("dt must be > 0")
        pos = np.ascontiguousarray(pos)
        pos.flags.writeable = False
        object.__setattr__(self, "positions", pos)

    def __len__(self) -> int:
        return self.positions.shape[0]

    def joint(self, name: str) -> np.ndarray:
        """Per-frame positions of one joint, shape (n, 3)."""
        return self.positions[:, JOINT_INDEX[name], :]

    def pose(self, i: int) -> SkeletonFrame:
        return SkeletonFrame(self.positions[i], index=i, frame=self.frame)

    def with_positions(self, positions: np.ndarray, frame: str | None = None) -> "SkeletonSequence":
        return replace(self, positions=positions, frame=self.frame if frame is None else frame)


@dataclass(frozen=True)
class LocalFrame:
    """Orthonormal right-handed body frame; ``axes`` columns are x, y, z."""

    origin: np.ndarray
    axes: np.ndarray

    @property
    def x(self) -> np.ndarray:
        return self.axes[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.axes[:, 1]

    @property
    def z(self) -> np.ndarray:
        return self.axes[:, 2]

    def to_local(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points) - self.origin) @ self.axes

    def to_global(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points) @ self.axes.T + self.origin


@dataclass(frozen=True)
class BodyPart:
    """One row of the seven-part division: a pivot and its two end joints."""

    number: int
    name: str
    pivot: str
    ends: tuple[str, str]


_PART_TABLE: tuple[BodyPart, ...] = (
    BodyPart(1, "lower torso", "root", ("lhip", "rhip")),
    BodyPart(2, "spine", "root", ("spine", "throat")),
    BodyPart(3, "upper torso", "throat", ("lclavicle", "rclavicle")),
    BodyPart(4, "left arm", "lclavicle", ("lhumerus", "lhand")),
    BodyPart(5, "right arm", "rclavicle", ("rhumerus", "rhand")),
    BodyPart(6, "left leg", "lhip", ("lfemur", "ltibia")),
    BodyPart(7, "right leg", "rhip", ("rfemur", "rtibia")),
)


def part_table() -> tuple[BodyPart, ...]:
    """The seven body parts, in sequence-number order."""
    return _PART_TABLE


def batch_local_frames(positions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Build the per-pose body frame for a stack of poses.

    positions: (n, 15, 3) in GCS. Returns (origins (n, 3), axes (n, 3, 3))
    with axis vectors in columns. Raises DegenerateFrame naming the first
    offending pose.
    """
    pos = np.asarray(positions, dtype=np.float64)
    single = pos.ndim == 2
    if single:
        pos = pos[None]

    lhip = pos[:, _LHIP]
    rhip = pos[:, _RHIP]
    spine = pos[:, _SPINE]

    d = lhip - rhip
    hip_len = np.linalg.norm(d, axis=1)
    bad = hip_len < DEGENERATE_EPS
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise DegenerateFrame(f"frame {i}: hip joints coincide", frame_index=i)
    x = d / hip_len[:, None]

    # Foot of the perpendicular from the spine joint onto the hip line.
    t = np.einsum("ij,ij->i", spine - rhip, x)
    origin = rhip + t[:, None] * x

    y = spine - origin
    y -= np.einsum("ij,ij->i", y, x)[:, None] * x  # exact in theory, kills roundoff
    y_len = np.linalg.norm(y, axis=1)
    bad = y_len < DEGENERATE_EPS
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise DegenerateFrame(f"frame {i}: spine lies on the hip line", frame_index=i)
    y /= y_len[:, None]
    z = np.cross(x, y)

    axes = np.stack([x, y, z], axis=2)
    if single:
        return origin[0], axes[0]
    return origin, axes


def build_local_frame(frame: SkeletonFrame | np.ndarray) -> LocalFrame:
    """Body frame of a single pose (GCS positions, shape (15, 3))."""
    positions = frame.positions if isinstance(frame, SkeletonFrame) else frame
    origin, axes = batch_local_frames(positions)
    return LocalFrame(origin=origin, axes=axes)


def to_local(seq: SkeletonSequence) -> SkeletonSequence:
    """Express every pose in its own body frame."""
    if seq.frame != GCS:
        raise ValueError("to_local expects a GCS sequence")
    origins, axes = batch_local_frames(seq.positions)
    local = np.einsum("njk,nkl->njl", seq.positions - origins[:, None, :], axes)
    return seq.with_positions(local, frame=LCS)


def to_global(seq: SkeletonSequence, origins: np.ndarray, axes: np.ndarray) -> SkeletonSequence:
    """Inverse of to_local given the per-pose frames it used."""
    if seq.frame != LCS:
        raise ValueError("to_global expects an LCS sequence")
    world = np.einsum("njk,nlk->njl", seq.positions, axes) + origins[:, None, :]
    return seq.with_positions(world, frame=GCS)
