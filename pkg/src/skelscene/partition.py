"""Primitive-action segmentation of one part's motion stream.

A part stream is the pair of thresholded synthetic-speed series of its two end
joints. Standstills (zeroed entries) separate primitive actions; the two end
joints' active intervals are unioned, short flickers are bridged/discarded,
and when more intervals survive than the budget allows, the ones with the
largest speed-times-duration score are kept.

Interval indices refer to speed entries: entry f covers the transition from
frame f to frame f+1. A primitive action therefore spans position frames
[start, end + 1] of its interval [start, end].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .kinematics import SpeedSeries

GLOBAL_STREAM = 0

STREAM_NAMES = (
    "global",
    "lower torso",
    "spine",
    "upper torso",
    "left arm",
    "right arm",
    "left leg",
    "right leg",
)
NUM_STREAMS = len(STREAM_NAMES)


@dataclass(frozen=True, order=True)
class FrameInterval:
    """Closed interval [start, end], nonnegative, start <= end."""

    start: int
    end: int

    def __post_init__(self):
        if self.start < 0 or self.end < self.start:
            raise ValueError(f"bad interval [{self.start}, {self.end}]")

    def __len__(self) -> int:
        return self.end - self.start + 1


@dataclass(frozen=True)
class PrimitiveAction:
    """One motion unit of a stream.

    stream 0 is the whole-body (global) stream, streams 1..7 the body parts.
    ``frames`` is in position-frame space (inclusive); ``score`` is the
    attention mass: the interval's summed max end-joint speed times dt, in
    meters.
    """

    stream: int
    frames: FrameInterval
    score: float
    ordinal: int


def active_intervals(thresholded: SpeedSeries, gap: int = 0) -> list[FrameInterval]:
    """Maximal runs of nonzero entries; runs separated by <= gap zeros merge."""
    if gap < 0:
        raise ValueError("gap must be >= 0")
    nz = thresholded.values != 0
    if not nz.any():
        return []
    padded = np.concatenate([[False], nz, [False]])
    step = np.diff(padded.astype(np.int8))
    run_starts = np.flatnonzero(step == 1)
    run_ends = np.flatnonzero(step == -1) - 1
    out = [FrameInterval(int(run_starts[0]), int(run_ends[0]))]
    for s, e in zip(run_starts[1:], run_ends[1:]):
        if s - out[-1].end - 1 <= gap:
            out[-1] = FrameInterval(out[-1].start, int(e))
        else:
            out.append(FrameInterval(int(s), int(e)))
    return out


def merge_part_intervals(
    a: Iterable[FrameInterval], b: Iterable[FrameInterval]
) -> list[FrameInterval]:
    """Union of two disjoint sorted interval lists, as maximal intervals."""
    merged = sorted(list(a) + list(b), key=lambda iv: iv.start)
    if not merged:
        return []
    out = [merged[0]]
    for iv in merged[1:]:
        if iv.start <= out[-1].end + 1:
            if iv.end > out[-1].end:
                out[-1] = FrameInterval(out[-1].start, iv.end)
        else:
            out.append(iv)
    return out


def drop_short_intervals(
    intervals: Iterable[FrameInterval], min_len: int = 2
) -> list[FrameInterval]:
    """Discard intervals spanning fewer than min_len speed entries."""
    return [iv for iv in intervals if len(iv) >= min_len]


def interval_score(iv: FrameInterval, speeds: Sequence[SpeedSeries], dt: float) -> float:
    """Attention mass of an interval: sum of max end-joint speed times dt."""
    stacked = np.stack([s.values[iv.start : iv.end + 1] for s in speeds])
    return float(stacked.max(axis=0).sum() * dt)


def attention_select(
    intervals: Sequence[FrameInterval],
    speeds: Sequence[SpeedSeries],
    dt: float,
    max_pa: int,
    stream: int = GLOBAL_STREAM,
) -> list[PrimitiveAction]:
    """Keep the max_pa highest-scoring intervals as primitive actions.

    Ties at the cutoff favor the earlier interval. Survivors are returned
    chronologically, with ordinals 0..k-1 and frames converted to position
    space ([start, end] over speed entries -> frames [start, end + 1]).
    """
    if max_pa < 1:
        raise ValueError("max_pa must be >= 1")
    scored = [(iv, interval_score(iv, speeds, dt)) for iv in intervals]
    if len(scored) > max_pa:
        order = sorted(range(len(scored)), key=lambda i: (-scored[i][1], scored[i][0].start))
        keep = sorted(order[:max_pa])
        scored = [scored[i] for i in keep]
    return [
        PrimitiveAction(
            stream=stream,
            frames=FrameInterval(iv.start, iv.end + 1),
            score=score,
            ordinal=q,
        )
        for q, (iv, score) in enumerate(scored)
    ]
