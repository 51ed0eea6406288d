import json

import numpy as np
import pytest

from skelscene.errors import ParseError, SchemaError, SplitError
from skelscene.ingest import (
    CANONICAL_COLUMNS,
    DatasetManifest,
    ManifestEntry,
    SplitSpec,
    build_synthetic_corpus,
    generate_synthetic_scene,
    iter_corpus,
    load_generator_spec,
    load_manifest,
    parse_sequence_csv,
    save_manifest,
    scripted_segment_counts,
    serialize_sequence_csv,
    split_dataset,
    GeneratorSpec,
    MotionSegment,
    PartScript,
    SyntheticClassSpec,
)
from skelscene.kinematics import joint_synthetic_speed
from skelscene.config import FeatureConfig
from skelscene.pipeline import segment_scene

from conftest import arm_wave_spec, random_sequence


class TestSequenceCsv:
    def test_two_frame_round_trip(self, rng):
        seq = random_sequence(rng, n_frames=2)
        text = serialize_sequence_csv(seq)
        parsed = parse_sequence_csv(text, dt=seq.dt)
        assert len(parsed) == 2
        np.testing.assert_array_equal(parsed.positions, seq.positions)

    def test_serialize_parse_serialize_fixpoint(self, rng):
        seq = random_sequence(rng, n_frames=5)
        text = serialize_sequence_csv(seq)
        again = serialize_sequence_csv(parse_sequence_csv(text, dt=seq.dt))
        assert text == again

    def test_missing_column_schema_error(self, rng):
        text = serialize_sequence_csv(random_sequence(rng, n_frames=2))
        lines = text.splitlines()
        cols = lines[0].split(",")
        drop = cols.index("spine_x")
        broken = "\n".join(
            ",".join(c for i, c in enumerate(line.split(",")) if i != drop)
            for line in lines
        )
        with pytest.raises(SchemaError, match="spine_x"):
            parse_sequence_csv(broken, dt=0.02)

    def test_unknown_column_rejected(self, rng):
        text = serialize_sequence_csv(random_sequence(rng, n_frames=2))
        lines = text.splitlines()
        broken = "\n".join([lines[0] + ",head_x"] + [l + ",0.0" for l in lines[1:]])
        with pytest.raises(SchemaError, match="head_x"):
            parse_sequence_csv(broken, dt=0.02)

    def test_nan_cell_named(self, rng):
        text = serialize_sequence_csv(random_sequence(rng, n_frames=2))
        lines = text.splitlines()
        cols = lines[0].split(",")
        target = cols.index("lhand_y")
        cells = lines[2].split(",")
        cells[target] = "NaN"
        lines[2] = ",".join(cells)
        with pytest.raises(ParseError) as err:
            parse_sequence_csv("\n".join(lines), dt=0.02)
        assert err.value.column == "lhand_y"
        assert err.value.line == 3

    def test_garbage_cell_parse_error(self, rng):
        text = serialize_sequence_csv(random_sequence(rng, n_frames=2))
        broken = text.replace(text.splitlines()[1].split(",")[5], "oops", 1)
        with pytest.raises(ParseError):
            parse_sequence_csv(broken, dt=0.02)

    def test_nonconsecutive_frames(self, rng):
        text = serialize_sequence_csv(random_sequence(rng, n_frames=3))
        lines = text.splitlines()
        lines[2] = ",".join(["7"] + lines[2].split(",")[1:])
        with pytest.raises(ParseError) as err:
            parse_sequence_csv("\n".join(lines), dt=0.02)
        assert err.value.column == "frame"

    def test_header_has_45_coordinate_columns(self):
        assert len(CANONICAL_COLUMNS) == 45


def manifest_for(entries) -> DatasetManifest:
    labels = tuple(sorted({label for _, _, label in entries}))
    return DatasetManifest(
        dt=0.02,
        labels=labels,
        entries=tuple(ManifestEntry(p, s, l) for p, s, l in entries),
    )


class TestSplit:
    def seven_subject_manifest(self):
        entries = []
        for s in range(7):
            for k in range(3):
                entries.append((f"x{s}_{k}.csv", f"s{s:02d}", "walk" if k else "wave"))
        return manifest_for(entries)

    def test_counts_sum(self):
        m = self.seven_subject_manifest()
        spec = SplitSpec.of(
            ["s00", "s01", "s02", "s03", "s04"], ["s05"], ["s06"]
        )
        train, val, test = split_dataset(m, spec)
        assert len(train.entries) + len(val.entries) + len(test.entries) == len(m.entries)
        assert len(train.entries) == 15 and len(val.entries) == 3 and len(test.entries) == 3

    def test_multiset_preserved(self):
        m = self.seven_subject_manifest()
        spec = SplitSpec.of(["s00", "s01", "s02", "s03", "s04"], ["s05"], ["s06"])
        parts = split_dataset(m, spec)
        combined = sorted(e.path for p in parts for e in p.entries)
        assert combined == sorted(e.path for e in m.entries)

    def test_overlap_rejected(self):
        m = self.seven_subject_manifest()
        spec = SplitSpec.of(["s00", "s01"], ["s01"], ["s02"])
        with pytest.raises(SplitError, match="s01"):
            split_dataset(m, spec)

    def test_uncovered_subject_rejected(self):
        m = self.seven_subject_manifest()
        spec = SplitSpec.of(["s00", "s01", "s02", "s03", "s04"], ["s05"], [])
        with pytest.raises(SplitError, match="s06"):
            split_dataset(m, spec)

    def test_empty_test_set_allowed(self):
        m = manifest_for([("a.csv", "s00", "walk"), ("b.csv", "s01", "walk")])
        train, val, test = split_dataset(m, SplitSpec.of(["s00"], ["s01"], []))
        assert len(test.entries) == 0

    def test_manifest_json_round_trip(self, tmp_path):
        m = self.seven_subject_manifest()
        save_manifest(m, tmp_path / "m.json")
        again = load_manifest(tmp_path / "m.json")
        assert again == m


class TestSyntheticGenerator:
    def test_noise_free_speed_zero_outside_window(self):
        spec = arm_wave_spec(move=30, rest=30, frames=120, noise=0.0)
        seq = generate_synthetic_scene(spec, 7)
        speeds = joint_synthetic_speed(seq, "lhand").values
        assert (speeds[:30] > 0).all()
        np.testing.assert_array_equal(speeds[30:], 0.0)
        assert seq.label == "wave_test"

    def test_deterministic(self):
        spec = arm_wave_spec(noise=0.01)
        a = generate_synthetic_scene(spec, 123)
        b = generate_synthetic_scene(spec, 123)
        np.testing.assert_array_equal(a.positions, b.positions)

    def test_seeds_differ_only_within_noise_when_resting(self):
        amp = 0.01
        spec = arm_wave_spec(move=30, rest=60, frames=120, noise=amp)
        a = generate_synthetic_scene(spec, 1)
        b = generate_synthetic_scene(spec, 2)
        diff = np.abs(a.positions - b.positions)
        assert diff.max() > 0
        resting = diff[40:]  # both seeds rest from frame 30 on; margin for safety
        assert resting.max() < 2.5 * amp

    def test_oscillation_returns_to_rest(self):
        spec = arm_wave_spec(move=30, rest=30, frames=120, noise=0.0)
        seq = generate_synthetic_scene(spec, 7)
        np.testing.assert_allclose(seq.positions[0], seq.positions[-1], atol=1e-12)

    def test_segmentation_recovers_scripted_counts_noise_free(self):
        spec = SyntheticClassSpec(
            name="combo",
            frames=400,
            noise=0.0,
            variants=(
                (
                    PartScript("left arm", (MotionSegment(30, 50, 1.2, repeat=3),), lead=10),
                    PartScript("right leg", (MotionSegment(40, 60, 1.0, repeat=2),), lead=25),
                    PartScript("global", (MotionSegment(60, 60, 1.0, (0, 0, 1), "translate"),), lead=120),
                ),
            ),
        )
        seq = generate_synthetic_scene(spec, 3)
        streams = segment_scene(seq, FeatureConfig())
        counts = {i: len(s) for i, s in enumerate(streams) if s}
        # stream 4 = left arm, 7 = right leg, 0/1 = whole-body + lower torso
        assert counts == {0: 1, 1: 1, 4: 3, 7: 2}

    def test_segmentation_recovers_scripted_counts_with_noise(self):
        spec = SyntheticClassSpec(
            name="combo",
            frames=400,
            noise=0.01,
            variants=(
                (
                    PartScript("left arm", (MotionSegment(30, 50, 1.2, repeat=3),), lead=10),
                    PartScript("right leg", (MotionSegment(40, 60, 1.0, repeat=2),), lead=25),
                ),
            ),
        )
        for seed in range(5):
            seq = generate_synthetic_scene(spec, seed)
            streams = segment_scene(seq, FeatureConfig())
            counts = {i: len(s) for i, s in enumerate(streams) if s}
            assert counts == {4: 3, 7: 2}

    def test_scripted_segment_counts_helper(self):
        spec = arm_wave_spec(repeat=4)
        assert scripted_segment_counts(spec) == {"left arm": 4}


class TestGeneratorSpecFile:
    def test_bundled_benchmark_loads(self):
        from importlib import resources

        path = resources.files("skelscene") / "data" / "benchmark15.json"
        spec = load_generator_spec(str(path))
        assert len(spec.classes) == 15
        assert spec.subjects == 7
        assert spec.scenes_per_subject == 8
        assert all(c.noise == 0.01 for c in spec.classes)
        assert len({c.name for c in spec.classes}) == 15

    def test_corpus_counts_and_determinism(self, tmp_path):
        kick = arm_wave_spec(part="right leg", noise=0.005)
        spec = GeneratorSpec(
            name="tiny",
            classes=(
                arm_wave_spec(noise=0.005),
                SyntheticClassSpec(name="kick_test", frames=120, noise=0.005, variants=kick.variants),
            ),
            subjects=2,
            scenes_per_subject=2,
        )
        m1 = build_synthetic_corpus(spec, tmp_path / "a", seed=5)
        m2 = build_synthetic_corpus(spec, tmp_path / "b", seed=5)
        assert len(m1.entries) == 2 * 2 * 2
        texts1 = [(tmp_path / "a" / e.path).read_text() for e in m1.entries]
        texts2 = [(tmp_path / "b" / e.path).read_text() for e in m2.entries]
        assert texts1 == texts2

    def test_subjects_vary_in_scale(self):
        spec = GeneratorSpec(
            name="tiny", classes=(arm_wave_spec(),), subjects=2, scenes_per_subject=1
        )
        scenes = list(iter_corpus(spec, 0))
        (seq_a, sa, _), (seq_b, sb, _) = scenes
        assert sa != sb
        height_a = seq_a.positions[0, :, 1].max()
        height_b = seq_b.positions[0, :, 1].max()
        assert abs(height_a - height_b) > 0.01
