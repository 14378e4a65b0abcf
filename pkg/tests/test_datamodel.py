"""File formats, label journals, splits, and manifest validation."""

import json
import struct

import numpy as np
import pytest

from snoopy import datamodel
from snoopy.datamodel import (
    DatasetSplit,
    EmbeddingMatrix,
    LabelVector,
    Metric,
    Strategy,
    StudyLabels,
    load_manifest,
    read_embedding_file,
    read_label_file,
    write_embedding_file,
    write_label_file,
)
from snoopy.errors import (
    BadMagic,
    IndexOutOfRange,
    InvalidTarget,
    LabelOutOfRange,
    ManifestInvalid,
    MissingFile,
    NonFiniteValue,
    ShapeMismatch,
    TruncatedFile,
    VersionUnsupported,
)

SNPE_HEADER = struct.Struct("<4sIQQB7s")
SNPL_HEADER = struct.Struct("<4sIQI")


def snpe_bytes(n, d, values, magic=b"SNPE", version=1, dtype=0):
    head = SNPE_HEADER.pack(magic, version, n, d, dtype, b"\0" * 7)
    return head + np.asarray(values, dtype="<f4").tobytes()


def snpl_bytes(labels, n_classes, magic=b"SNPL", version=1):
    head = SNPL_HEADER.pack(magic, version, len(labels), n_classes)
    return head + np.asarray(labels, dtype="<u4").tobytes()


class TestEmbeddingFile:
    def test_smallest_wellformed(self, tmp_path):
        path = tmp_path / "m.snpe"
        path.write_bytes(snpe_bytes(2, 3, [1, 2, 3, 4, 5, 6]))
        m = read_embedding_file(path)
        assert m.n_rows == 2 and m.dim == 3
        np.testing.assert_array_equal(m.values, [[1, 2, 3], [4, 5, 6]])

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "m.snpe"
        path.write_bytes(snpe_bytes(2, 3, [1, 2, 3, 4, 5]))
        with pytest.raises(TruncatedFile):
            read_embedding_file(path)

    def test_truncated_header(self, tmp_path):
        path = tmp_path / "m.snpe"
        path.write_bytes(b"SNPE\x01")
        with pytest.raises(TruncatedFile):
            read_embedding_file(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "m.snpe"
        path.write_bytes(snpe_bytes(1, 1, [0.0], magic=b"XXXX"))
        with pytest.raises(BadMagic):
            read_embedding_file(path)

    def test_bad_version_and_dtype(self, tmp_path):
        path = tmp_path / "m.snpe"
        path.write_bytes(snpe_bytes(1, 1, [0.0], version=2))
        with pytest.raises(VersionUnsupported):
            read_embedding_file(path)
        path.write_bytes(snpe_bytes(1, 1, [0.0], dtype=1))
        with pytest.raises(VersionUnsupported):
            read_embedding_file(path)

    def test_nonfinite_value_reports_index(self, tmp_path):
        path = tmp_path / "m.snpe"
        path.write_bytes(snpe_bytes(2, 2, [0.0, 1.0, np.nan, 2.0]))
        with pytest.raises(NonFiniteValue) as exc:
            read_embedding_file(path)
        assert exc.value.index == 2

    def test_roundtrip_byte_identical(self, tmp_path):
        rng = np.random.default_rng(3)
        m = EmbeddingMatrix(rng.standard_normal((100, 8)).astype(np.float32), "t")
        p1, p2 = tmp_path / "a.snpe", tmp_path / "b.snpe"
        write_embedding_file(p1, m)
        write_embedding_file(p2, read_embedding_file(p1))
        assert p1.read_bytes() == p2.read_bytes()

    def test_same_bytes_same_object(self, tmp_path):
        path = tmp_path / "m.snpe"
        path.write_bytes(snpe_bytes(2, 2, [1, 2, 3, 4]))
        a, b = read_embedding_file(path), read_embedding_file(path)
        np.testing.assert_array_equal(a.values, b.values)

    def test_csv_fallback(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("1.0,2.0\n3.0,4.0\n")
        m = read_embedding_file(path)
        assert m.n_rows == 2 and m.dim == 2
        assert m.values.dtype == np.float32

    def test_missing_file(self, tmp_path):
        with pytest.raises(MissingFile):
            read_embedding_file(tmp_path / "absent.snpe")

    def test_peek_shape(self, tmp_path):
        path = tmp_path / "m.snpe"
        write_embedding_file(path, EmbeddingMatrix(np.zeros((5, 7), np.float32)))
        assert datamodel.peek_embedding_shape(path) == (5, 7)


class TestLabelFile:
    def test_valid_vector(self, tmp_path):
        path = tmp_path / "l.snpl"
        path.write_bytes(snpl_bytes([0, 1, 0], 2))
        vec = read_label_file(path)
        assert vec.n_classes == 2
        np.testing.assert_array_equal(vec.labels, [0, 1, 0])

    def test_label_out_of_range(self, tmp_path):
        path = tmp_path / "l.snpl"
        path.write_bytes(snpl_bytes([0, 2], 2))
        with pytest.raises(LabelOutOfRange) as exc:
            read_label_file(path)
        assert exc.value.index == 1

    def test_truncated(self, tmp_path):
        path = tmp_path / "l.snpl"
        path.write_bytes(snpl_bytes([0, 1, 0], 2)[:-2])
        with pytest.raises(TruncatedFile):
            read_label_file(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "l.snpl"
        path.write_bytes(snpl_bytes([0], 2, magic=b"NOPE"))
        with pytest.raises(BadMagic):
            read_label_file(path)

    def test_roundtrip_identical(self, tmp_path):
        rng = np.random.default_rng(5)
        vec = LabelVector(rng.integers(0, 10, 1000), 10)
        p1, p2 = tmp_path / "a.snpl", tmp_path / "b.snpl"
        write_label_file(p1, vec)
        back = read_label_file(p1)
        np.testing.assert_array_equal(back.labels, vec.labels)
        assert back.n_classes == 10
        write_label_file(p2, back)
        assert p1.read_bytes() == p2.read_bytes()

    def test_csv_fallback_infers_classes(self, tmp_path):
        path = tmp_path / "l.csv"
        path.write_text("0\n3\n1\n")
        vec = read_label_file(path)
        assert vec.n_classes == 4


class TestEditJournal:
    def test_replay_reproduces(self):
        rng = np.random.default_rng(0)
        original = LabelVector(rng.integers(0, 4, 50), 4)
        working = original.copy()
        for i in rng.integers(0, 50, 20):
            working.apply_edit(int(i), int(rng.integers(0, 4)), timestamp=1.0)
        replayed = LabelVector.replay(original, working.edit_journal)
        np.testing.assert_array_equal(replayed.labels, working.labels)

    def test_replay_idempotent(self):
        original = LabelVector(np.array([0, 1, 2, 1]), 3)
        working = original.copy()
        working.apply_edit(1, 2, timestamp=1.0)
        working.apply_edit(1, 0, timestamp=2.0)
        working.apply_edit(3, 2, timestamp=3.0)
        once = LabelVector.replay(original, working.edit_journal)
        twice = LabelVector.replay(once, working.edit_journal)
        np.testing.assert_array_equal(once.labels, twice.labels)

    def test_edit_validation(self):
        vec = LabelVector(np.array([0, 1]), 2)
        with pytest.raises(IndexOutOfRange):
            vec.apply_edit(2, 0)
        with pytest.raises(LabelOutOfRange):
            vec.apply_edit(0, 5)

    def test_journal_records_old_label(self):
        vec = LabelVector(np.array([0, 1]), 2)
        edit = vec.apply_edit(0, 1, timestamp=9.0)
        assert (edit.old_label, edit.new_label, edit.timestamp) == (0, 1, 9.0)


class TestStudyLabels:
    def test_global_index_space(self):
        labels = StudyLabels(LabelVector(np.array([0, 1, 0]), 2),
                             LabelVector(np.array([1, 1]), 2))
        assert labels.n_total == 5
        assert labels.get(1) == 1
        assert labels.get(3) == 1
        labels.apply_edits([(3, 0)], timestamp=1.0)
        assert labels.test.labels[0] == 0
        with pytest.raises(IndexOutOfRange):
            labels.apply_edits([(5, 0)])

    def test_class_count_must_match(self):
        with pytest.raises(ShapeMismatch):
            StudyLabels(LabelVector(np.array([0, 1]), 2),
                        LabelVector(np.array([2, 1]), 3))


class TestDatasetSplit:
    def test_valid(self):
        DatasetSplit(np.array([0, 2]), np.array([1, 3])).validate(4)

    def test_overlap(self):
        with pytest.raises(ShapeMismatch):
            DatasetSplit(np.array([0, 1]), np.array([1, 2])).validate(3)

    def test_not_covering(self):
        with pytest.raises(ShapeMismatch):
            DatasetSplit(np.array([0]), np.array([2])).validate(3)

    def test_empty_side(self):
        with pytest.raises(ShapeMismatch):
            DatasetSplit(np.array([], dtype=int), np.array([0])).validate(1)


def write_study_files(tmp_path, n_train=6, n_test=3, dim=2, n_arms=2):
    rng = np.random.default_rng(1)
    doc = {"transformations": [], "train_labels": "train.snpl",
           "test_labels": "test.snpl", "target_accuracy": 0.9}
    write_label_file(tmp_path / "train.snpl",
                     LabelVector(rng.integers(0, 2, n_train), 2))
    write_label_file(tmp_path / "test.snpl",
                     LabelVector(rng.integers(0, 2, n_test), 2))
    for i in range(n_arms):
        tid = f"t{i}"
        write_embedding_file(tmp_path / f"{tid}_train.snpe", EmbeddingMatrix(
            rng.standard_normal((n_train, dim)).astype(np.float32)))
        write_embedding_file(tmp_path / f"{tid}_test.snpe", EmbeddingMatrix(
            rng.standard_normal((n_test, dim)).astype(np.float32)))
        doc["transformations"].append({
            "transformation_id": tid,
            "train_path": f"{tid}_train.snpe",
            "test_path": f"{tid}_test.snpe",
            "metric": "Euclidean",
        })
    return doc


class TestManifest:
    def test_consistent_manifest_loads(self, tmp_path):
        doc = write_study_files(tmp_path)
        (tmp_path / "m.json").write_text(json.dumps(doc))
        manifest = load_manifest(tmp_path / "m.json")
        assert manifest.n_train == 6 and manifest.n_test == 3
        assert manifest.strategy == Strategy.SH and manifest.auto_budget
        assert manifest.transformations[0].metric == Metric.EUCLIDEAN
        assert manifest.transformations[0].train_path.is_absolute()

    def test_shape_mismatch_names_transformation(self, tmp_path):
        doc = write_study_files(tmp_path)
        write_embedding_file(tmp_path / "t1_train.snpe", EmbeddingMatrix(
            np.zeros((5, 2), np.float32)))  # 5 rows vs 6 labels
        (tmp_path / "m.json").write_text(json.dumps(doc))
        with pytest.raises(ShapeMismatch) as exc:
            load_manifest(tmp_path / "m.json")
        assert exc.value.transformation_id == "t1"

    def test_invalid_target(self, tmp_path):
        doc = write_study_files(tmp_path)
        doc["target_accuracy"] = 1.5
        (tmp_path / "m.json").write_text(json.dumps(doc))
        with pytest.raises(InvalidTarget):
            load_manifest(tmp_path / "m.json")

    def test_missing_file(self, tmp_path):
        doc = write_study_files(tmp_path)
        (tmp_path / "t0_train.snpe").unlink()
        (tmp_path / "m.json").write_text(json.dumps(doc))
        with pytest.raises(MissingFile):
            load_manifest(tmp_path / "m.json")

    def test_perfect_needs_oracle_winner(self, tmp_path):
        doc = write_study_files(tmp_path)
        doc["strategy"] = "PERFECT"
        (tmp_path / "m.json").write_text(json.dumps(doc))
        with pytest.raises(ManifestInvalid):
            load_manifest(tmp_path / "m.json")
        doc["oracle_winner"] = "t0"
        (tmp_path / "m.json").write_text(json.dumps(doc))
        assert load_manifest(tmp_path / "m.json").oracle_winner == "t0"

    def test_bad_batch_fraction_and_budget(self, tmp_path):
        doc = write_study_files(tmp_path)
        doc["batch_fraction"] = 0.0
        (tmp_path / "m.json").write_text(json.dumps(doc))
        with pytest.raises(InvalidTarget):
            load_manifest(tmp_path / "m.json")
        doc["batch_fraction"] = 0.5
        doc["budget"] = 0
        (tmp_path / "m.json").write_text(json.dumps(doc))
        with pytest.raises(ManifestInvalid):
            load_manifest(tmp_path / "m.json")
