import numpy as np
import pytest

from skelscene.augment import MIRROR_MAP, augment_dataset, mirror_entry_path, mirror_sequence
from skelscene.errors import SchemaError
from skelscene.ingest import (
    DatasetManifest,
    ManifestEntry,
    generate_synthetic_scene,
    write_sequence_csv,
)
from skelscene.kinematics import joint_synthetic_speed
from skelscene.skeleton import SkeletonSequence, to_local

from conftest import arm_wave_spec, random_sequence, rest_pose_array


class TestMirrorMap:
    def test_involutive_on_names(self):
        for name, partner in MIRROR_MAP.items():
            assert MIRROR_MAP[partner] == name

    def test_midline_joints_fixed(self):
        for name in ("root", "spine", "throat"):
            assert MIRROR_MAP[name] == name


class TestMirrorSequence:
    def test_involution_random(self, rng):
        for _ in range(100):
            seq = random_sequence(rng, n_frames=4)
            twice = mirror_sequence(mirror_sequence(seq))
            assert np.abs(twice.positions - seq.positions).max() < 1e-9
            assert twice.label == seq.label

    def test_symmetric_pose_is_fixed_point(self):
        pose = rest_pose_array()  # bilaterally symmetric
        seq = SkeletonSequence(positions=np.stack([pose, pose]), dt=0.02)
        mirrored = mirror_sequence(seq)
        assert np.abs(mirrored.positions - seq.positions).max() < 1e-9

    def test_left_right_kinematic_swap(self):
        # Body-frame speeds of the mirrored right hand equal the original
        # left hand's; mirroring happens per pose in that pose's own frame,
        # so the world-frame speeds only swap exactly when the frame is
        # steady (noise-free torso).
        noisy = generate_synthetic_scene(arm_wave_spec(noise=0.002), 3)
        a = joint_synthetic_speed(to_local(noisy), "lhand").values
        b = joint_synthetic_speed(to_local(mirror_sequence(noisy)), "rhand").values
        np.testing.assert_allclose(b, a, atol=1e-9)

        clean = generate_synthetic_scene(arm_wave_spec(noise=0.0), 3)
        a = joint_synthetic_speed(clean, "lhand").values
        b = joint_synthetic_speed(mirror_sequence(clean), "rhand").values
        np.testing.assert_allclose(b, a, atol=1e-9)

    def test_label_and_length_preserved(self):
        seq = generate_synthetic_scene(arm_wave_spec(noise=0.002), 3)
        mirrored = mirror_sequence(seq)
        assert mirrored.label == seq.label
        assert len(mirrored) == len(seq)
        assert mirrored.subject == seq.subject


class TestAugmentDataset:
    def write_corpus(self, tmp_path, n=3):
        entries = []
        for k in range(n):
            seq = generate_synthetic_scene(arm_wave_spec(noise=0.002), k)
            name = f"scene_{k}.csv"
            write_sequence_csv(seq, tmp_path / name)
            entries.append(ManifestEntry(name, f"s{k % 2}", "wave_test"))
        return DatasetManifest(dt=0.02, labels=("wave_test",), entries=tuple(entries))

    def test_doubles_entries_in_twin_order(self, tmp_path):
        manifest = self.write_corpus(tmp_path)
        out = augment_dataset(manifest, tmp_path)
        assert len(out.entries) == 6
        for k in range(3):
            orig, twin = out.entries[2 * k], out.entries[2 * k + 1]
            assert orig == manifest.entries[k]
            assert twin.path == mirror_entry_path(orig.path)
            assert twin.subject == orig.subject and twin.label == orig.label
            assert (tmp_path / twin.path).exists()

    def test_mirror_file_is_actual_mirror(self, tmp_path, rng):
        manifest = self.write_corpus(tmp_path, n=1)
        out = augment_dataset(manifest, tmp_path)
        from skelscene.ingest import read_sequence_csv

        orig = read_sequence_csv(tmp_path / out.entries[0].path, 0.02)
        twin = read_sequence_csv(tmp_path / out.entries[1].path, 0.02)
        np.testing.assert_allclose(
            twin.positions, mirror_sequence(orig).positions, atol=1e-12
        )

    def test_empty_manifest(self, tmp_path):
        manifest = DatasetManifest(dt=0.02, labels=("x",), entries=())
        out = augment_dataset(manifest, tmp_path)
        assert out.entries == ()

    def test_labels_multiset_doubled(self, tmp_path):
        manifest = self.write_corpus(tmp_path)
        out = augment_dataset(manifest, tmp_path)
        from collections import Counter

        assert Counter(e.label for e in out.entries) == Counter(
            {k: 2 * v for k, v in Counter(e.label for e in manifest.entries).items()}
        )

    def test_errors_name_the_entry(self, tmp_path):
        (tmp_path / "broken.csv").write_text("frame,lhip_x\n0,1\n")
        manifest = DatasetManifest(
            dt=0.02, labels=("x",), entries=(ManifestEntry("broken.csv", "s0", "x"),)
        )
        with pytest.raises(SchemaError, match="broken.csv"):
            augment_dataset(manifest, tmp_path)
