"""Shared test helpers: random valid poses, rigid motions, tiny script specs."""

from __future__ import annotations

import numpy as np
import pytest

from skelscene.ingest import (
    REST_POSE,
    MotionSegment,
    PartScript,
    SyntheticClassSpec,
)
from skelscene.skeleton import JOINT_NAMES, NUM_JOINTS, SkeletonSequence


def rest_pose_array() -> np.ndarray:
    return np.array([REST_POSE[name] for name in JOINT_NAMES])


def random_pose(rng: np.random.Generator, scale: float = 0.35) -> np.ndarray:
    """Rest pose with joint-wise perturbations; hips and spine stay far from
    degenerate by construction (perturbation << hip separation lever)."""
    pose = rest_pose_array()
    pose = pose + rng.uniform(-scale * 0.2, scale * 0.2, (NUM_JOINTS, 3))
    return pose


def random_sequence(
    rng: np.random.Generator, n_frames: int = 12, dt: float = 0.02
) -> SkeletonSequence:
    """Smoothly varying valid sequence (random pose + slow random drift)."""
    base = random_pose(rng)
    drift = rng.uniform(-0.01, 0.01, (NUM_JOINTS, 3))
    t = np.arange(n_frames)[:, None, None]
    positions = base[None] + drift[None] * t
    return SkeletonSequence(positions=positions, dt=dt)


def wavy_sequence(
    rng: np.random.Generator, n_frames: int = 12, dt: float = 0.02
) -> SkeletonSequence:
    """Valid sequence with genuinely varying speeds (nonzero accelerations)."""
    base = random_pose(rng)
    amp = rng.uniform(0.005, 0.02, (NUM_JOINTS, 3))
    freq = rng.uniform(0.5, 2.0, (NUM_JOINTS, 3))
    phase = rng.uniform(0, 2 * np.pi, (NUM_JOINTS, 3))
    t = (np.arange(n_frames) * dt)[:, None, None]
    positions = base[None] + amp[None] * np.sin(2 * np.pi * freq[None] * t + phase[None])
    return SkeletonSequence(positions=positions, dt=dt)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform-ish proper rotation matrix."""
    a = rng.standard_normal((3, 3))
    q, r = np.linalg.qr(a)
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    return q


def apply_rigid(seq: SkeletonSequence, rot: np.ndarray, shift: np.ndarray) -> SkeletonSequence:
    return seq.with_positions(seq.positions @ rot.T + shift)


def arm_wave_spec(
    move: int = 30,
    rest: int = 30,
    repeat: int = 1,
    frames: int = 120,
    noise: float = 0.0,
    part: str = "left arm",
    amplitude: float = 1.2,
    lead: int = 0,
) -> SyntheticClassSpec:
    return SyntheticClassSpec(
        name="wave_test",
        frames=frames,
        noise=noise,
        variants=(
            (
                PartScript(
                    part=part,
                    lead=lead,
                    segments=(
                        MotionSegment(move=move, rest=rest, amplitude=amplitude, repeat=repeat),
                    ),
                ),
            ),
        ),
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0xC0FFEE)
