"""Mirror augmentation: reflect sequences across the body's sagittal plane.

Each pose is reflected in its own body frame (x negated in LCS) and the
left/right joint labels are swapped, so a left-handed performance becomes the
equivalent right-handed one with the same scene label. Doubling the dataset
this way costs nothing and combats overfitting on small corpora.
"""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path

import numpy as np

from .errors import DegenerateFrame, ParseError, SkelSceneError
from .ingest import DatasetManifest, ManifestEntry, read_sequence_csv, write_sequence_csv
from .skeleton import JOINT_INDEX, JOINT_NAMES, SkeletonSequence, batch_local_frames

MIRROR_PAIRS = (
    ("lhip", "rhip"),
    ("lfemur", "rfemur"),
    ("ltibia", "rtibia"),
    ("lclavicle", "rclavicle"),
    ("lhumerus", "rhumerus"),
    ("lhand", "rhand"),
)

MIRROR_MAP: dict[str, str] = {name: name for name in JOINT_NAMES}
for _l, _r in MIRROR_PAIRS:
    MIRROR_MAP[_l] = _r
    MIRROR_MAP[_r] = _l

# positions[:, _PERMUTATION] relabels mirrored joints back into canonical order
_PERMUTATION = np.array([JOINT_INDEX[MIRROR_MAP[name]] for name in JOINT_NAMES])


def mirror_sequence(seq: SkeletonSequence) -> SkeletonSequence:
    """Reflect every pose across its own yoz plane, swapping left and right.

    The label is preserved: the same activity performed with the other side
    of the body carries the same meaning.
    """
    origins, axes = batch_local_frames(seq.positions)
    local = np.einsum("njk,nkl->njl", seq.positions - origins[:, None, :], axes)
    local[..., 0] *= -1.0
    local = local[:, _PERMUTATION, :]
    world = np.einsum("njk,nlk->njl", local, axes) + origins[:, None, :]
    return seq.with_positions(world)


def mirror_entry_path(path: str) -> str:
    p = Path(path)
    return str(p.with_name(p.stem + "_mirror" + p.suffix))


def _named(err: SkelSceneError, path: str) -> SkelSceneError:
    """Same error, prefixed with the entry it came from."""
    if isinstance(err, ParseError):
        return ParseError(err.line, err.column, f"{path}: {err.reason}")
    if isinstance(err, DegenerateFrame):
        return DegenerateFrame(f"{path}: {err}", frame_index=err.frame_index)
    return type(err)(f"{path}: {err}")


def augment_dataset(
    manifest: DatasetManifest,
    src_dir: str | Path,
    dst_dir: str | Path | None = None,
) -> DatasetManifest:
    """Write a mirrored twin next to every entry; returns the doubled manifest.

    Each original entry is followed by its twin (same subject and label, path
    suffixed ``_mirror``). Parse or frame errors are re-raised naming the
    entry they came from.
    """
    src_dir = Path(src_dir)
    dst_dir = Path(dst_dir) if dst_dir is not None else src_dir
    entries: list[ManifestEntry] = []
    for entry in manifest.entries:
        dt = entry.dt if entry.dt is not None else manifest.dt
        try:
            seq = read_sequence_csv(src_dir / entry.path, dt, subject=entry.subject, label=entry.label)
            mirrored = mirror_sequence(seq)
        except SkelSceneError as err:
            raise _named(err, entry.path) from err
        twin_path = mirror_entry_path(entry.path)
        write_sequence_csv(mirrored, dst_dir / twin_path)
        entries.append(entry)
        entries.append(replace(entry, path=twin_path))
    return replace(manifest, entries=tuple(entries))
