import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sftmn.featureio import (ClassMapping, DataError, FeatureSequence,
                             LabelSequence, SyntheticSpec, VideoSample,
                             generate_synthetic, load_dataset, load_features,
                             parse_mapping, read_raw_features, write_dataset,
                             write_mapping, write_raw_features)


class TestClassMapping:
    def test_from_names(self):
        m = ClassMapping.from_names(["a", "b", "c"])
        assert m.num_classes == 3
        assert m.names == ("a", "b", "c")
        assert m.index_of("b") == 1
        assert m.name_of(2) == "c"

    def test_entries_out_of_order_are_fine(self):
        m = ClassMapping(((2, "c"), (0, "a"), (1, "b")))
        assert m.names == ("a", "b", "c")

    @pytest.mark.parametrize("entries", [
        (),
        ((0, "a"), (2, "b")),          # gap
        ((0, "a"), (0, "b")),          # duplicate index
        ((0, "a"), (1, "a")),          # duplicate name
        ((0, ""),),                    # empty name
        ((1, "a"),),                   # does not start at 0
    ])
    def test_invalid_entries(self, entries):
        with pytest.raises(DataError):
            ClassMapping(tuple(entries))

    def test_unknown_name(self):
        with pytest.raises(DataError):
            ClassMapping.from_names(["a"]).index_of("zzz")


class TestMappingFile:
    def test_roundtrip(self, tmp_path):
        m = ClassMapping.from_names(["prep", "cut", "close"])
        path = tmp_path / "mapping.txt"
        write_mapping(m, path)
        assert parse_mapping(path) == m

    def test_parse_with_blank_lines(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text("0 alpha\n\n1 beta\n")
        assert parse_mapping(path).names == ("alpha", "beta")

    def test_parse_errors_name_line(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text("0 alpha\nnot-an-int beta\n")
        with pytest.raises(DataError, match="line 2"):
            parse_mapping(path)

    def test_parse_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            parse_mapping(tmp_path / "missing.txt")

    def test_parse_empty(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text("\n")
        with pytest.raises(DataError):
            parse_mapping(path)


class TestSequences:
    def test_feature_validation(self):
        with pytest.raises(DataError):
            FeatureSequence(np.zeros((3,), dtype=np.float32))
        with pytest.raises(DataError):
            FeatureSequence(np.zeros((0, 4), dtype=np.float32))
        with pytest.raises(DataError):
            FeatureSequence(np.array([[np.nan]], dtype=np.float32))
        with pytest.raises(DataError):
            FeatureSequence(np.zeros((2, 2), dtype=np.float32), frame_rate_hz=0.0)
        fs = FeatureSequence(np.zeros((2, 5), dtype=np.float32))
        assert fs.dim == 2 and fs.num_frames == 5

    def test_label_validation(self):
        m = ClassMapping.from_names(["a", "b"])
        with pytest.raises(DataError):
            LabelSequence(np.array([0, 2]), m)
        with pytest.raises(DataError):
            LabelSequence(np.array([-1]), m)
        with pytest.raises(DataError):
            LabelSequence(np.array([0.5]), m)
        assert len(LabelSequence(np.array([0, 1, 1]), m)) == 3

    def test_video_sample_length_mismatch(self):
        m = ClassMapping.from_names(["a"])
        with pytest.raises(DataError, match="v0"):
            VideoSample("v0", FeatureSequence(np.zeros((2, 4), dtype=np.float32)),
                        LabelSequence(np.zeros(3, dtype=np.int64), m))


class TestRawFormat:
    def test_roundtrip(self, tmp_path):
        values = np.arange(12, dtype=np.float32).reshape(3, 4) * 0.5
        path = tmp_path / "x.bin"
        write_raw_features(values, path)
        back = read_raw_features(path)
        assert back.shape == (3, 4)
        np.testing.assert_array_equal(back, values)

    def test_header_contents(self, tmp_path):
        path = tmp_path / "x.bin"
        write_raw_features(np.zeros((2, 7), dtype=np.float32), path)
        with open(path, "rb") as fh:
            assert fh.readline() == b"SFTMN1 2 7\n"

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "x.bin"
        path.write_bytes(b"NOPE 2 2\n" + b"\x00" * 16)
        with pytest.raises(DataError, match="magic"):
            read_raw_features(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "x.bin"
        path.write_bytes(b"SFTMN1 2 2\n" + b"\x00" * 8)
        with pytest.raises(DataError, match="bytes"):
            read_raw_features(path)

    def test_garbage_header(self, tmp_path):
        path = tmp_path / "x.bin"
        path.write_bytes(b"\xff\xfe\x00\n")
        with pytest.raises(DataError):
            read_raw_features(path)


class TestLoadFeatures:
    def test_npy_layouts(self, tmp_path):
        values = np.arange(6, dtype=np.float32).reshape(2, 3)
        np.save(tmp_path / "dxt.npy", values)
        np.save(tmp_path / "txd.npy", values.T)
        np.testing.assert_array_equal(load_features(tmp_path / "dxt.npy", "DxT"), values)
        np.testing.assert_array_equal(load_features(tmp_path / "txd.npy", "TxD"), values)

    def test_bad_layout_token(self, tmp_path):
        np.save(tmp_path / "x.npy", np.zeros((2, 2), dtype=np.float32))
        with pytest.raises(DataError, match="feature_layout"):
            load_features(tmp_path / "x.npy", "TXD")

    def test_npy_wrong_rank(self, tmp_path):
        np.save(tmp_path / "x.npy", np.zeros((2, 2, 2), dtype=np.float32))
        with pytest.raises(DataError, match="2-D"):
            load_features(tmp_path / "x.npy", "DxT")


def build_dataset(tmp_path, feature_format="npy", feature_layout="DxT",
                  spec=None):
    spec = spec or SyntheticSpec(num_videos=3, num_classes=3, feature_dim=4,
                                 min_length=10, max_length=20,
                                 mean_segment_length=5, seed=3)
    samples, mapping = generate_synthetic(spec)
    root = tmp_path / "ds"
    write_dataset(samples, mapping, root, feature_format=feature_format,
                  feature_layout=feature_layout, split_name="train")
    return samples, mapping, root


class TestDatasetRoundtrip:
    @pytest.mark.parametrize("feature_format,feature_layout", [
        ("npy", "DxT"), ("npy", "TxD"), ("raw", "DxT"),
    ])
    def test_write_load(self, tmp_path, feature_format, feature_layout):
        samples, mapping, root = build_dataset(tmp_path, feature_format,
                                               feature_layout)
        loaded = load_dataset(root, root / "splits" / "train.bundle", mapping,
                              feature_layout)
        assert [s.id for s in loaded] == [s.id for s in samples]
        for a, b in zip(loaded, samples):
            np.testing.assert_array_equal(a.features.values, b.features.values)
            np.testing.assert_array_equal(a.labels.labels, b.labels.labels)

    def test_split_order_preserved(self, tmp_path):
        samples, mapping, root = build_dataset(tmp_path)
        bundle = root / "splits" / "reversed.bundle"
        ids = [s.id for s in samples][::-1]
        bundle.write_text("".join(f"{i}\n" for i in ids))
        loaded = load_dataset(root, bundle, mapping, "DxT")
        assert [s.id for s in loaded] == ids

    def test_txt_suffix_in_bundle(self, tmp_path):
        samples, mapping, root = build_dataset(tmp_path)
        bundle = root / "splits" / "suffixed.bundle"
        bundle.write_text(f"{samples[0].id}.txt\n")
        loaded = load_dataset(root, bundle, mapping, "DxT")
        assert loaded[0].id == samples[0].id

    def test_missing_feature_file(self, tmp_path):
        samples, mapping, root = build_dataset(tmp_path)
        (root / "features" / f"{samples[0].id}.npy").unlink()
        with pytest.raises(FileNotFoundError, match=samples[0].id):
            load_dataset(root, root / "splits" / "train.bundle", mapping, "DxT")

    def test_missing_label_file(self, tmp_path):
        samples, mapping, root = build_dataset(tmp_path)
        (root / "groundTruth" / f"{samples[0].id}.txt").unlink()
        with pytest.raises(FileNotFoundError, match=samples[0].id):
            load_dataset(root, root / "splits" / "train.bundle", mapping, "DxT")

    def test_frame_count_mismatch_names_video(self, tmp_path):
        samples, mapping, root = build_dataset(tmp_path)
        bad = root / "groundTruth" / f"{samples[1].id}.txt"
        bad.write_text("\n".join([mapping.name_of(0)] * 3) + "\n")
        with pytest.raises(DataError, match=samples[1].id):
            load_dataset(root, root / "splits" / "train.bundle", mapping, "DxT")

    def test_unknown_class_name(self, tmp_path):
        samples, mapping, root = build_dataset(tmp_path)
        bad = root / "groundTruth" / f"{samples[0].id}.txt"
        lines = bad.read_text().splitlines()
        lines[0] = "mystery"
        bad.write_text("\n".join(lines) + "\n")
        with pytest.raises(DataError, match="mystery"):
            load_dataset(root, root / "splits" / "train.bundle", mapping, "DxT")

    def test_inconsistent_feature_dim(self, tmp_path):
        samples, mapping, root = build_dataset(tmp_path)
        np.save(root / "features" / f"{samples[2].id}.npy",
                np.zeros((9, samples[2].features.num_frames), dtype=np.float32))
        with pytest.raises(DataError, match="dim"):
            load_dataset(root, root / "splits" / "train.bundle", mapping, "DxT")

    def test_missing_directories(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_dataset(tmp_path / "nowhere", tmp_path / "s.bundle",
                         ClassMapping.from_names(["a"]), "DxT")

    def test_empty_split(self, tmp_path):
        _, mapping, root = build_dataset(tmp_path)
        empty = root / "splits" / "empty.bundle"
        empty.write_text("\n")
        with pytest.raises(DataError):
            load_dataset(root, empty, mapping, "DxT")


class TestSynthetic:
    def test_deterministic(self):
        spec = SyntheticSpec(seed=42)
        a, _ = generate_synthetic(spec)
        b, _ = generate_synthetic(spec)
        assert [s.id for s in a] == [s.id for s in b]
        for x, y in zip(a, b):
            np.testing.assert_array_equal(x.features.values, y.features.values)
            np.testing.assert_array_equal(x.labels.labels, y.labels.labels)

    def test_seed_changes_data(self):
        a, _ = generate_synthetic(SyntheticSpec(seed=1))
        b, _ = generate_synthetic(SyntheticSpec(seed=2))
        assert any(not np.array_equal(x.labels.labels, y.labels.labels)
                   or not np.array_equal(x.features.values, y.features.values)
                   for x, y in zip(a, b))

    def test_shapes_and_lengths(self):
        spec = SyntheticSpec(num_videos=4, num_classes=5, feature_dim=7,
                             min_length=30, max_length=50,
                             mean_segment_length=8, seed=0)
        samples, mapping = generate_synthetic(spec)
        assert len(samples) == 4
        assert mapping.num_classes == 5
        for s in samples:
            assert s.features.dim == 7
            assert 30 <= s.features.num_frames <= 50
            assert s.features.values.dtype == np.float32

    def test_adjacent_segments_differ(self):
        samples, _ = generate_synthetic(SyntheticSpec(num_videos=6, seed=9))
        for s in samples:
            labels = s.labels.labels
            boundaries = np.flatnonzero(np.diff(labels)) + 1
            starts = np.concatenate(([0], boundaries))
            for i in range(1, len(starts)):
                assert labels[starts[i]] != labels[starts[i] - 1]

    def test_noiseless_features_are_prototypes(self):
        samples, _ = generate_synthetic(
            SyntheticSpec(num_videos=2, noise_level=0.0, seed=5))
        s = samples[0]
        # frames with equal labels carry identical feature vectors
        labels = s.labels.labels
        for c in np.unique(labels):
            columns = s.features.values[:, labels == c]
            assert np.all(columns == columns[:, :1])

    def test_separation_scales_prototypes(self):
        spec = SyntheticSpec(num_videos=1, noise_level=0.0, separation=3.0, seed=5)
        samples, _ = generate_synthetic(spec)
        norms = np.linalg.norm(samples[0].features.values, axis=0)
        np.testing.assert_allclose(norms, 3.0, rtol=1e-5)

    @pytest.mark.parametrize("overrides", [
        dict(num_videos=0), dict(num_classes=0), dict(feature_dim=0),
        dict(min_length=0), dict(min_length=30, max_length=20),
        dict(mean_segment_length=300, max_length=200),
        dict(noise_level=-0.1), dict(separation=0.0),
    ])
    def test_spec_validation(self, overrides):
        base = dict(num_videos=2, num_classes=3, feature_dim=4, min_length=10,
                    max_length=200, mean_segment_length=5)
        base.update(overrides)
        with pytest.raises(DataError):
            SyntheticSpec(**base)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=1, max_size=40), st.booleans())
def test_dataset_roundtrip_arbitrary_labels(tmp_path_factory, labels, use_raw):
    tmp_path = tmp_path_factory.mktemp("ds")
    mapping = ClassMapping.from_names(["w", "x", "y", "z"])
    arr = np.array(labels, dtype=np.int64)
    values = np.random.default_rng(0).normal(size=(3, len(arr))).astype(np.float32)
    sample = VideoSample("vid", FeatureSequence(values), LabelSequence(arr, mapping))
    fmt = "raw" if use_raw else "npy"
    write_dataset([sample], mapping, tmp_path, feature_format=fmt)
    loaded = load_dataset(tmp_path, tmp_path / "splits" / "all.bundle", mapping, "DxT")
    np.testing.assert_array_equal(loaded[0].labels.labels, arr)
    np.testing.assert_array_equal(loaded[0].features.values, values)
