"""Tests for dataset generators, label noise, splitting and CSV IO."""

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from datasets import (
    Dataset,
    flip_labels,
    gen_blobs,
    gen_categorical_single_x,
    gen_rings,
    load_csv,
    make_dataset,
    save_csv,
    split,
)
from errors import ContractError, DatasetParseError, DimensionError, LabelIndexError, ParameterError
from models import DatasetKind, DatasetSpec


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestGenerators:

    def test_zero_spread_sits_on_centers(self):
        data = gen_blobs(6, 2, spread=0.0, seed=0)
        expected = np.where(data.labels[:, None] == 0, [1.0, 0.0], [-1.0, 0.0])
        np.testing.assert_allclose(data.features, expected, atol=1e-12)

    def test_balanced_classes(self):
        assert_array_equal(gen_blobs(4, 2, seed=0).class_counts(), [2, 2])
        assert_array_equal(gen_blobs(7, 3, seed=0).class_counts(), [3, 2, 2])

    def test_seed_changes_coordinates_not_counts(self):
        a, b = gen_blobs(50, 2, seed=1), gen_blobs(50, 2, seed=2)
        assert not np.array_equal(a.features, b.features)
        assert_array_equal(a.class_counts(), b.class_counts())

    def test_same_seed_same_data(self):
        assert_array_equal(gen_blobs(30, 3, seed=4).features, gen_blobs(30, 3, seed=4).features)

    def test_too_few_points(self):
        with pytest.raises(ContractError):
            gen_blobs(1, 2)

    def test_rings_radii_grow_with_class(self):
        data = gen_rings(300, 3, spread=0.01, seed=0)
        radii = np.linalg.norm(data.features, axis=1)
        means = [radii[data.labels == k].mean() for k in range(3)]
        np.testing.assert_allclose(means, [1, 2, 3], atol=0.01)

    def test_categorical_degenerate_distribution(self):
        data = gen_categorical_single_x([1.0, 0.0], 500, seed=0)
        assert np.all(data.labels == 0)
        assert np.all(data.features == data.features[0])
        assert data.num_classes == 2

    def test_categorical_frequencies(self):
        data = gen_categorical_single_x([0.5, 0.5], 100_000, seed=0)
        assert abs(np.mean(data.labels == 0) - 0.5) < 0.01

    def test_categorical_rejects_non_simplex(self):
        with pytest.raises(ParameterError):
            gen_categorical_single_x([0.7, 0.7], 10)


class TestDataset:

    def test_label_out_of_range(self):
        with pytest.raises(LabelIndexError):
            Dataset(np.zeros((2, 2)), np.array([0, 2]), 2, DatasetKind.CSV)

    def test_row_mismatch(self):
        with pytest.raises(DimensionError):
            Dataset(np.zeros((3, 2)), np.array([0, 1]), 2, DatasetKind.CSV)


class TestLabelNoise:

    def test_zero_fraction_is_identity(self, blobs):
        assert flip_labels(blobs, 0.0) is blobs

    def test_full_fraction_inverts_binary_labels(self, blobs):
        assert_array_equal(flip_labels(blobs, 1.0, seed=0).labels, 1 - blobs.labels)

    def test_exact_count_changes(self):
        data = gen_blobs(100, 4, seed=0)
        noisy = flip_labels(data, 0.1, seed=3)
        assert int(np.sum(noisy.labels != data.labels)) == 10
        assert noisy.noise_fraction == 0.1

    def test_fraction_outside_unit_interval(self, blobs):
        with pytest.raises(ParameterError):
            flip_labels(blobs, 1.5)


class TestSplit:

    def test_sizes(self):
        train, val = split(gen_blobs(10, 2, seed=0), 0.8)
        assert (train.n, val.n) == (8, 2)

    def test_same_seed_same_partition(self, blobs):
        a, _ = split(blobs, 0.7, seed=5)
        b, _ = split(blobs, 0.7, seed=5)
        assert_array_equal(a.features, b.features)

    def test_partition_covers_all_rows(self, blobs):
        train, val = split(blobs, 0.7, seed=5)
        combined = np.vstack([train.features, val.features])
        assert_array_equal(np.sort(combined, axis=0), np.sort(blobs.features, axis=0))

    def test_ratio_bounds(self, blobs):
        with pytest.raises(ParameterError):
            split(blobs, 1.0)


class TestCsv:

    def test_roundtrip(self, tmp_path):
        data = gen_blobs(3, 2, seed=9)
        path = tmp_path / "data.csv"
        save_csv(data, path)
        loaded = load_csv(path)
        assert_array_equal(loaded.features, data.features)
        assert_array_equal(loaded.labels, data.labels)

    def test_bad_header(self, tmp_path):
        path = _write(tmp_path / "bad.csv", "x,y,label\n1,2,0\n")
        with pytest.raises(DatasetParseError) as info:
            load_csv(path)
        assert info.value.line_number == 1

    def test_non_numeric_feature_reports_line(self, tmp_path):
        path = _write(tmp_path / "bad.csv", "f0,f1,label\n1,2,0\n1,abc,1\n")
        with pytest.raises(DatasetParseError, match="line 3"):
            load_csv(path)

    def test_negative_label_rejected(self, tmp_path):
        path = _write(tmp_path / "bad.csv", "f0,label\n1.0,-1\n")
        with pytest.raises(DatasetParseError):
            load_csv(path)

    @pytest.mark.parametrize("label", ["²", "٣"])
    def test_non_ascii_digit_label_rejected(self, tmp_path, label):
        path = _write(tmp_path / "bad.csv", f"f0,label\n1.0,0\n2.0,{label}\n")
        with pytest.raises(DatasetParseError, match="line 3"):
            load_csv(path)

    def test_wrong_field_count(self, tmp_path):
        path = _write(tmp_path / "bad.csv", "f0,f1,label\n1,2\n")
        with pytest.raises(DatasetParseError, match="line 2"):
            load_csv(path)

    def test_label_gap_warns(self, tmp_path, caplog):
        path = _write(tmp_path / "gap.csv", "f0,label\n0.0,0\n1.0,2\n")
        data = load_csv(path)
        assert data.num_classes == 3
        assert "skip classes" in caplog.text

    def test_standardize(self, tmp_path):
        path = _write(tmp_path / "data.csv", "f0,f1,label\n1,5,0\n3,5,1\n5,5,0\n")
        data = load_csv(path, standardize=True)
        np.testing.assert_allclose(data.features.mean(axis=0), [0, 0], atol=1e-12)
        np.testing.assert_allclose(data.features[:, 1], 0.0)

    def test_make_dataset_missing_file(self, tmp_path):
        spec = DatasetSpec(kind=DatasetKind.CSV, path=str(tmp_path / "missing.csv"))
        with pytest.raises(ParameterError):
            make_dataset(spec)

    def test_make_dataset_from_csv(self, tmp_path):
        path = tmp_path / "data.csv"
        save_csv(gen_blobs(12, 3, seed=0), path)
        data = make_dataset(DatasetSpec(kind=DatasetKind.CSV, path=str(path)))
        assert data.n == 12
        assert data.num_classes == 3
