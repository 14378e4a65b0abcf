"""Streaming batched 1NN error computation for one transformation arm.

An :class:`ArmState` folds the training stream in, one batch at a time,
keeping only each test point's current nearest (squared distance, stream
index) pair. That pair is all the state needed for two things the rest of
the system leans on:

* batch-size independence: the final state is identical for every batch
  partition of the same stream, because each update is a running strict-min
  in stream order on float64 accumulators (ties keep the smaller index);
* O(n_test) re-evaluation after label edits: labels enter only through the
  final error count, so cleaning labels never recomputes a distance.

Training order is the stream (file) order; no shuffling happens here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from snoopy import _backend
from snoopy.datamodel import EmbeddingMatrix, Metric, StudyLabels
from snoopy.errors import ArmFinished, DimensionMismatch, ShapeMismatch
from snoopy.estimator import cover_hart_lower_bound


@dataclass(frozen=True)
class CurvePoint:
    """One pull's outcome: the 1NN loss and its BER lower-bound transform."""

    n_consumed: int
    err_1nn: float
    ber_estimate: float


@dataclass
class ArmState:
    transformation_id: str
    metric: Metric
    n_test: int
    n_consumed: int = 0
    nearest_dist: np.ndarray = field(init=False)
    nearest_idx: np.ndarray = field(init=False)
    curve: list[CurvePoint] = field(default_factory=list)
    finished: bool = False

    def __post_init__(self):
        self.nearest_dist = np.full(self.n_test, np.inf, dtype=np.float64)
        self.nearest_idx = np.full(self.n_test, -1, dtype=np.int64)


def distance(a, b, metric: Metric) -> float:
    """Distance between two vectors: squared Euclidean (a monotone surrogate
    for the 1NN argmin) or cosine dissimilarity with 2.0 for zero vectors."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size != b.size:
        raise DimensionMismatch(f"dim {a.size} != {b.size}")
    if metric == Metric.EUCLIDEAN:
        d = a - b
        return float(np.sum(d * d))
    # sqrt of the product of squared norms keeps self-distance exactly zero
    denom = np.sqrt(np.sum(a * a) * np.sum(b * b))
    if denom == 0.0:
        return 2.0
    return float(1.0 - np.sum(a * b) / denom)


def pull(state: ArmState, train: EmbeddingMatrix, test: EmbeddingMatrix,
         labels: StudyLabels, batch_size: int) -> CurvePoint:
    """Consume the next batch of training rows and report the current loss.

    Rows ``[n_consumed, n_consumed + batch_size)`` (clipped at the stream
    end) are folded into the per-test-point nearest pairs; the returned point
    carries the 1NN error over the consumed prefix and its lower-bound
    transform. Marks the arm finished when the stream is exhausted.
    """
    if state.finished:
        raise ArmFinished(f"arm {state.transformation_id} already consumed its stream")
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    if train.dim != test.dim:
        raise ShapeMismatch(
            f"train dim {train.dim} != test dim {test.dim}", state.transformation_id)
    if test.n_rows != state.n_test or len(labels.test) != state.n_test:
        raise ShapeMismatch("test rows inconsistent with arm state",
                            state.transformation_id)
    if train.n_rows != labels.n_train:
        raise ShapeMismatch("train rows inconsistent with labels",
                            state.transformation_id)

    lo = state.n_consumed
    hi = min(lo + batch_size, train.n_rows)
    batch = train.values[lo:hi]
    kernels = _backend.get_kernels()
    if state.metric == Metric.EUCLIDEAN:
        kernels.update_nearest_sqeuclidean(test.values, batch, lo,
                                           state.nearest_dist, state.nearest_idx)
    else:
        kernels.update_nearest_cosine(test.values, batch, lo,
                                      state.nearest_dist, state.nearest_idx)
    state.n_consumed = hi
    state.finished = hi == train.n_rows

    err = recompute_error(state, labels)
    point = CurvePoint(hi, err, float(cover_hart_lower_bound(err, labels.n_classes)))
    state.curve.append(point)
    return point


def recompute_error(state: ArmState, labels: StudyLabels) -> float:
    """Current 1NN error from stored nearest indices: one pass over the test
    set, no distance work."""
    if state.n_consumed < 1:
        raise ValueError(f"arm {state.transformation_id} has not been pulled yet")
    predicted = labels.train.labels[state.nearest_idx]
    wrong = int(np.count_nonzero(predicted != labels.test.labels))
    return wrong / state.n_test


def apply_label_edits(state: ArmState, labels: StudyLabels, edits) -> float:
    """Apply ``[(global_index, new_label), ...]`` and return the refreshed
    1NN error over the consumed prefix.

    Equivalent to a full recompute on the edited labels restricted to that
    prefix, but costs one pass over the test set.
    """
    labels.apply_edits(edits)
    return recompute_error(state, labels)


def nn_error_full(train: EmbeddingMatrix, test: EmbeddingMatrix,
                  labels: StudyLabels, metric: Metric) -> float:
    """Exact 1NN test error by a full pairwise scan (independent oracle).

    Scans every training row per test point in one shot, taking the first
    minimum (ties -> smaller index, same rule as the streaming path).
    """
    _, idx = oracle_nearest(train, test, metric)
    predicted = labels.train.labels[idx]
    wrong = int(np.count_nonzero(predicted != labels.test.labels))
    return wrong / test.n_rows


def oracle_nearest(train: EmbeddingMatrix, test: EmbeddingMatrix,
                   metric: Metric) -> tuple[np.ndarray, np.ndarray]:
    """Per-test-point (distance, train index) by brute force, one full row
    scan per test point."""
    if train.dim != test.dim:
        raise ShapeMismatch(f"train dim {train.dim} != test dim {test.dim}")
    tr = train.values.astype(np.float64)
    n_test = test.n_rows
    dist = np.empty(n_test, dtype=np.float64)
    idx = np.empty(n_test, dtype=np.int64)
    if metric == Metric.COSINE:
        tr_norm2 = np.sum(tr * tr, axis=1)
    for i in range(n_test):
        q = test.values[i].astype(np.float64)
        if metric == Metric.EUCLIDEAN:
            d = np.sum((tr - q) ** 2, axis=1)
        else:
            denom = np.sqrt(tr_norm2 * np.sum(q * q))
            with np.errstate(invalid="ignore", divide="ignore"):
                d = 1.0 - np.sum(tr * q, axis=1) / denom
            d[denom == 0.0] = 2.0
        j = int(np.argmin(d))
        dist[i] = d[j]
        idx[i] = j
    return dist, idx
