"""Joint kinematics: per-axis speed, synthetic speed/acceleration, motion
similarity, and threshold suppression of negligible motion.

Speed entry f covers the transition between frames f and f+1 (0-based), so a
speed series is one shorter than its sequence and an acceleration series two
shorter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, SequenceTooShort
from .skeleton import SkeletonSequence


@dataclass(frozen=True)
class SpeedSeries:
    """Synthetic (3D-magnitude) speed of one joint, m/s, length n_frames - 1."""

    joint: str
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if not np.isfinite(v).all() or (v < 0).any():
            raise ValueError("speeds must be finite and nonnegative")
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class AccelSeries:
    """Synthetic acceleration of one joint, m/s^2, length n_frames - 2."""

    joint: str
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if not np.isfinite(v).all():
            raise ValueError("accelerations must be finite")
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.values)


def joint_speed_components(seq: SkeletonSequence, joint: str) -> np.ndarray:
    """Per-axis velocity (s[f+1] - s[f]) / dt, shape (n - 1, 3)."""
    if len(seq) < 2:
        raise SequenceTooShort("speed needs at least 2 frames")
    p = seq.joint(joint)
    return np.diff(p, axis=0) / seq.dt


def synthetic_speed(components: np.ndarray, joint: str = "") -> SpeedSeries:
    """Euclidean magnitude of per-axis velocities."""
    c = np.asarray(components, dtype=np.float64)
    return SpeedSeries(joint=joint, values=np.linalg.norm(c, axis=-1))


def joint_synthetic_speed(seq: SkeletonSequence, joint: str) -> SpeedSeries:
    return synthetic_speed(joint_speed_components(seq, joint), joint=joint)


def synthetic_acceleration(speeds: SpeedSeries, dt: float) -> AccelSeries:
    """Difference quotient of the synthetic speed."""
    if len(speeds) < 2:
        raise SequenceTooShort("acceleration needs at least 2 speed entries")
    return AccelSeries(joint=speeds.joint, values=np.diff(speeds.values) / dt)


def motion_similarity(a: AccelSeries, b: AccelSeries) -> float:
    """Euclidean distance between two equal-length acceleration series.

    Smaller means the two joints move more alike; zero iff identical.
    """
    if len(a) != len(b):
        raise LengthMismatch(f"acceleration lengths differ: {len(a)} vs {len(b)}")
    return float(np.linalg.norm(a.values - b.values))


def threshold_speed(speeds: SpeedSeries, v_tau: float) -> SpeedSeries:
    """Zero out entries below v_tau; entries at or above it pass unchanged."""
    if v_tau < 0:
        raise ValueError("v_tau must be >= 0")
    v = speeds.values
    return SpeedSeries(joint=speeds.joint, values=np.where(v >= v_tau, v, 0.0))


def resolve_v_tau(speeds: SpeedSeries, fraction: float = 0.1, floor: float = 0.05) -> float:
    """Per-joint threshold: fraction of the 95th speed percentile, floored.

    A relative threshold adapts to subjects of different vigor; the absolute
    floor keeps sensor jitter out on joints that barely move.
    """
    return max(floor, fraction * float(np.percentile(speeds.values, 95)))
