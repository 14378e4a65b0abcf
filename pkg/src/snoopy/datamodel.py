"""On-disk formats and in-memory types for embeddings, labels, and manifests.

Binary formats (little-endian):

* SNPE embedding file: magic ``SNPE``, version u32 = 1, n_rows u64, dim u64,
  dtype u8 = 0 (float32), 7 reserved zero bytes, then n_rows*dim float32
  values row-major.
* SNPL label file: magic ``SNPL``, version u32 = 1, n u64, C u32, then n u32
  labels.

Paths ending in ``.csv`` fall back to header-less comma-separated text, for
hand-written tests. Ingestion is total and deterministic: the same bytes
always produce the same in-memory object.

Embeddings are stored float32; all downstream math accumulates in float64.
Dataset rows are addressed by a stable integer index across transformations
(train rows first, then test rows), which is what makes cross-arm label edits
possible.
"""

from __future__ import annotations

import json
import struct
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from snoopy.errors import (
    BadMagic,
    IndexOutOfRange,
    InvalidClassCount,
    InvalidTarget,
    LabelOutOfRange,
    ManifestInvalid,
    MissingFile,
    NonFiniteValue,
    ShapeMismatch,
    TruncatedFile,
    VersionUnsupported,
)

_SNPE_MAGIC = b"SNPE"
_SNPL_MAGIC = b"SNPL"
_SNPE_HEADER = struct.Struct("<4sIQQB7s")
_SNPL_HEADER = struct.Struct("<4sIQI")


class Metric(str, Enum):
    EUCLIDEAN = "Euclidean"
    COSINE = "CosineDissimilarity"


class Strategy(str, Enum):
    SH = "SH"
    SH_TANGENT = "SH_TANGENT"
    UNIFORM = "UNIFORM"
    PERFECT = "PERFECT"


# ---------------------------------------------------------------------------
# Embedding matrices
# ---------------------------------------------------------------------------

@dataclass
class EmbeddingMatrix:
    """One transformation's features for a dataset split.

    ``values`` is a row-major (n_rows, dim) float32 array; all entries are
    finite.
    """

    values: np.ndarray
    transformation_id: str = ""

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float32)
        if v.ndim != 2:
            raise ShapeMismatch("embedding values must be a 2-D array")
        bad = ~np.isfinite(v)
        if bad.any():
            raise NonFiniteValue(int(np.flatnonzero(bad)[0]))
        self.values = v

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]


def read_embedding_file(path, transformation_id: str = "") -> EmbeddingMatrix:
    """Read an SNPE (or ``.csv`` fallback) embedding file."""
    path = Path(path)
    if not path.exists():
        raise MissingFile(path)
    if path.suffix == ".csv":
        values = np.loadtxt(path, delimiter=",", dtype=np.float32, ndmin=2)
        return EmbeddingMatrix(values, transformation_id)
    raw = path.read_bytes()
    n, dim = _parse_embedding_header(raw, path)
    need = _SNPE_HEADER.size + n * dim * 4
    if len(raw) < need:
        raise TruncatedFile(f"{path}: expected {need} bytes, found {len(raw)}")
    values = np.frombuffer(raw, dtype="<f4", count=n * dim, offset=_SNPE_HEADER.size)
    return EmbeddingMatrix(values.reshape(n, dim).copy(), transformation_id)


def _parse_embedding_header(raw: bytes, path) -> tuple[int, int]:
    if len(raw) < _SNPE_HEADER.size:
        raise TruncatedFile(f"{path}: shorter than SNPE header")
    magic, version, n, dim, dtype, _ = _SNPE_HEADER.unpack_from(raw)
    if magic != _SNPE_MAGIC:
        raise BadMagic(f"{path}: magic {magic!r} != {_SNPE_MAGIC!r}")
    if version != 1:
        raise VersionUnsupported(f"{path}: SNPE version {version}")
    if dtype != 0:
        raise VersionUnsupported(f"{path}: dtype code {dtype} (only float32=0)")
    return int(n), int(dim)


def peek_embedding_shape(path) -> tuple[int, int]:
    """Read (n_rows, dim) without loading values (full read for CSV)."""
    path = Path(path)
    if not path.exists():
        raise MissingFile(path)
    if path.suffix == ".csv":
        m = read_embedding_file(path)
        return m.n_rows, m.dim
    with open(path, "rb") as fh:
        raw = fh.read(_SNPE_HEADER.size)
    return _parse_embedding_header(raw, path)


def write_embedding_file(path, matrix: EmbeddingMatrix) -> None:
    path = Path(path)
    if path.suffix == ".csv":
        np.savetxt(path, matrix.values, delimiter=",", fmt="%.9g")
        return
    header = _SNPE_HEADER.pack(_SNPE_MAGIC, 1, matrix.n_rows, matrix.dim, 0, b"\0" * 7)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(matrix.values, dtype="<f4").tobytes())


# ---------------------------------------------------------------------------
# Label vectors and edit journals
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LabelEdit:
    sample_index: int
    old_label: int
    new_label: int
    timestamp: float


@dataclass
class LabelVector:
    """Integer class labels in [0, C) with an append-only edit journal.

    Replaying the journal from the original labels reproduces the current
    labels; replaying it twice gives the same result (edits are absolute
    assignments, not deltas).
    """

    labels: np.ndarray
    n_classes: int
    edit_journal: list[LabelEdit] = field(default_factory=list)

    def __post_init__(self):
        lab = np.ascontiguousarray(self.labels, dtype=np.int64)
        if lab.ndim != 1:
            raise ShapeMismatch("labels must be a 1-D array")
        if self.n_classes < 2:
            raise InvalidClassCount(f"class count must be >= 2, got {self.n_classes}")
        bad = (lab < 0) | (lab >= self.n_classes)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise LabelOutOfRange(i, int(lab[i]), self.n_classes)
        self.labels = lab

    def __len__(self) -> int:
        return int(self.labels.size)

    def copy(self) -> "LabelVector":
        return LabelVector(self.labels.copy(), self.n_classes, list(self.edit_journal))

    def apply_edit(self, index: int, new_label: int, timestamp: float | None = None) -> LabelEdit:
        if not 0 <= index < len(self):
            raise IndexOutOfRange(index, len(self))
        if not 0 <= new_label < self.n_classes:
            raise LabelOutOfRange(index, new_label, self.n_classes)
        edit = LabelEdit(index, int(self.labels[index]), int(new_label),
                         time.time() if timestamp is None else timestamp)
        self.labels[index] = new_label
        self.edit_journal.append(edit)
        return edit

    @staticmethod
    def replay(original: "LabelVector", journal: list[LabelEdit]) -> "LabelVector":
        out = LabelVector(original.labels.copy(), original.n_classes)
        for e in journal:
            out.apply_edit(e.sample_index, e.new_label, e.timestamp)
        return out


def read_label_file(path) -> LabelVector:
    """Read an SNPL (or ``.csv`` fallback) label file.

    For CSV files the class count is inferred as ``max(label) + 1`` (at
    least 2) since the text form carries no header.
    """
    path = Path(path)
    if not path.exists():
        raise MissingFile(path)
    if path.suffix == ".csv":
        labels = np.loadtxt(path, delimiter=",", dtype=np.int64, ndmin=1)
        n_classes = max(2, int(labels.max()) + 1) if labels.size else 2
        return LabelVector(labels, n_classes)
    raw = path.read_bytes()
    if len(raw) < _SNPL_HEADER.size:
        raise TruncatedFile(f"{path}: shorter than SNPL header")
    magic, version, n, n_classes = _SNPL_HEADER.unpack_from(raw)
    if magic != _SNPL_MAGIC:
        raise BadMagic(f"{path}: magic {magic!r} != {_SNPL_MAGIC!r}")
    if version != 1:
        raise VersionUnsupported(f"{path}: SNPL version {version}")
    need = _SNPL_HEADER.size + n * 4
    if len(raw) < need:
        raise TruncatedFile(f"{path}: expected {need} bytes, found {len(raw)}")
    labels = np.frombuffer(raw, dtype="<u4", count=n, offset=_SNPL_HEADER.size)
    return LabelVector(labels.astype(np.int64), int(n_classes))


def peek_label_count(path) -> int:
    path = Path(path)
    if not path.exists():
        raise MissingFile(path)
    if path.suffix == ".csv":
        return len(read_label_file(path))
    with open(path, "rb") as fh:
        raw = fh.read(_SNPL_HEADER.size)
    if len(raw) < _SNPL_HEADER.size:
        raise TruncatedFile(f"{path}: shorter than SNPL header")
    magic, version, n, _ = _SNPL_HEADER.unpack_from(raw)
    if magic != _SNPL_MAGIC:
        raise BadMagic(f"{path}: magic {magic!r} != {_SNPL_MAGIC!r}")
    if version != 1:
        raise VersionUnsupported(f"{path}: SNPL version {version}")
    return int(n)


def write_label_file(path, labels: LabelVector) -> None:
    path = Path(path)
    if path.suffix == ".csv":
        np.savetxt(path, labels.labels, fmt="%d")
        return
    header = _SNPL_HEADER.pack(_SNPL_MAGIC, 1, len(labels), labels.n_classes)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(labels.labels.astype("<u4").tobytes())


@dataclass
class StudyLabels:
    """Train and test labels under one global index space.

    Global indices address train rows as ``[0, n_train)`` and test rows as
    ``[n_train, n_train + n_test)``, stable across all transformations.
    """

    train: LabelVector
    test: LabelVector

    def __post_init__(self):
        if self.train.n_classes != self.test.n_classes:
            raise ShapeMismatch(
                f"train C={self.train.n_classes} != test C={self.test.n_classes}")

    @property
    def n_classes(self) -> int:
        return self.train.n_classes

    @property
    def n_train(self) -> int:
        return len(self.train)

    @property
    def n_test(self) -> int:
        return len(self.test)

    @property
    def n_total(self) -> int:
        return self.n_train + self.n_test

    def get(self, index: int) -> int:
        vec, local = self._resolve(index)
        return int(vec.labels[local])

    def apply_edits(self, edits, timestamp: float | None = None) -> list[LabelEdit]:
        """Apply ``[(global_index, new_label), ...]``; returns journal entries
        carrying global indices."""
        out = []
        for index, new_label in edits:
            vec, local = self._resolve(index)
            e = vec.apply_edit(local, new_label, timestamp)
            out.append(LabelEdit(index, e.old_label, e.new_label, e.timestamp))
        return out

    def _resolve(self, index: int) -> tuple[LabelVector, int]:
        if not 0 <= index < self.n_total:
            raise IndexOutOfRange(index, self.n_total)
        if index < self.n_train:
            return self.train, index
        return self.test, index - self.n_train


# ---------------------------------------------------------------------------
# Dataset splits
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DatasetSplit:
    """Disjoint train/test row index lists covering a matrix."""

    train_indices: np.ndarray
    test_indices: np.ndarray

    def validate(self, n_rows: int) -> None:
        tr = np.asarray(self.train_indices)
        te = np.asarray(self.test_indices)
        if tr.size == 0 or te.size == 0:
            raise ShapeMismatch("both split sides must be non-empty")
        merged = np.concatenate([tr, te])
        if np.intersect1d(tr, te).size:
            raise ShapeMismatch("train and test indices overlap")
        if not np.array_equal(np.sort(merged), np.arange(n_rows)):
            raise ShapeMismatch("split does not cover rows exactly once")


# ---------------------------------------------------------------------------
# Study manifests
# ---------------------------------------------------------------------------

_AUTO = "AUTO"


@dataclass(frozen=True)
class TransformationSpec:
    transformation_id: str
    train_path: Path
    test_path: Path
    metric: Metric


@dataclass(frozen=True)
class StudyManifest:
    transformations: tuple[TransformationSpec, ...]
    train_labels: Path
    test_labels: Path
    target_accuracy: float
    batch_fraction: float = 0.01
    strategy: Strategy = Strategy.SH
    budget: int | str = _AUTO
    seed: int = 0
    oracle_winner: str | None = None
    n_train: int = 0
    n_test: int = 0

    @property
    def auto_budget(self) -> bool:
        return self.budget == _AUTO


def load_manifest(path) -> StudyManifest:
    """Load and cross-validate a study manifest.

    Relative paths are resolved against the manifest's directory. All
    transformations must agree on (n_train, n_test) and match the label
    files.
    """
    path = Path(path)
    if not path.exists():
        raise MissingFile(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestInvalid(f"{path}: not valid JSON ({exc})") from exc
    return manifest_from_dict(doc, base_dir=path.parent)


def manifest_from_dict(doc: dict, base_dir: Path | None = None) -> StudyManifest:
    base = Path(base_dir) if base_dir is not None else Path(".")

    def resolve(p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else base / p

    try:
        raw_transformations = doc["transformations"]
        train_labels = resolve(doc["train_labels"])
        test_labels = resolve(doc["test_labels"])
        target = float(doc["target_accuracy"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestInvalid(f"manifest missing/invalid key: {exc}") from exc

    if not 0.0 < target <= 1.0:
        raise InvalidTarget(f"target_accuracy {target} not in (0, 1]")
    batch_fraction = float(doc.get("batch_fraction", 0.01))
    if not 0.0 < batch_fraction <= 1.0:
        raise InvalidTarget(f"batch_fraction {batch_fraction} not in (0, 1]")
    try:
        strategy = Strategy(doc.get("strategy", "SH"))
    except ValueError as exc:
        raise ManifestInvalid(f"unknown strategy {doc.get('strategy')!r}") from exc
    budget = doc.get("budget", _AUTO)
    if budget != _AUTO:
        budget = int(budget)
        if budget < 1:
            raise ManifestInvalid(f"budget must be >= 1 or AUTO, got {budget}")
    if not raw_transformations:
        raise ManifestInvalid("manifest lists no transformations")

    specs = []
    for t in raw_transformations:
        try:
            specs.append(TransformationSpec(
                transformation_id=str(t["transformation_id"]),
                train_path=resolve(t["train_path"]),
                test_path=resolve(t["test_path"]),
                metric=Metric(t.get("metric", "Euclidean")),
            ))
        except (KeyError, ValueError) as exc:
            raise ManifestInvalid(f"bad transformation entry: {exc}") from exc
    ids = [s.transformation_id for s in specs]
    if len(set(ids)) != len(ids):
        raise ManifestInvalid("duplicate transformation_id in manifest")

    n_train = peek_label_count(train_labels)
    n_test = peek_label_count(test_labels)
    dims: dict[str, tuple[int, int]] = {}
    for s in specs:
        tr_n, tr_d = peek_embedding_shape(s.train_path)
        te_n, te_d = peek_embedding_shape(s.test_path)
        if tr_d != te_d:
            raise ShapeMismatch(
                f"{s.transformation_id}: train dim {tr_d} != test dim {te_d}",
                s.transformation_id)
        if tr_n != n_train or te_n != n_test:
            raise ShapeMismatch(
                f"{s.transformation_id}: rows ({tr_n}, {te_n}) != labels "
                f"({n_train}, {n_test})", s.transformation_id)
        dims[s.transformation_id] = (tr_d, te_d)

    oracle_winner = doc.get("oracle_winner")
    strategy_enum = strategy
    if strategy_enum == Strategy.PERFECT:
        if oracle_winner is None or oracle_winner not in ids:
            raise ManifestInvalid(
                "strategy PERFECT requires an 'oracle_winner' naming a transformation")

    return StudyManifest(
        transformations=tuple(specs),
        train_labels=train_labels,
        test_labels=test_labels,
        target_accuracy=target,
        batch_fraction=batch_fraction,
        strategy=strategy_enum,
        budget=budget,
        seed=int(doc.get("seed", 0)),
        oracle_winner=oracle_winner,
        n_train=n_train,
        n_test=n_test,
    )


def load_study_labels(manifest: StudyManifest) -> StudyLabels:
    train = read_label_file(manifest.train_labels)
    test = read_label_file(manifest.test_labels)
    if len(train) != manifest.n_train or len(test) != manifest.n_test:
        raise ShapeMismatch("label files changed size since manifest validation")
    return StudyLabels(train, test)
