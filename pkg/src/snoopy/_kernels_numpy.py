"""Pure numpy kernels for the streaming 1NN update.

Contract shared with the numba backend: given a batch of training rows whose
first row has stream index ``start``, fold the batch into the running
per-test-point nearest pair (``best_dist`` float64, ``best_idx`` int64,
updated in place). Comparison is strict ``<`` on float64 accumulators, so on
exact ties the smaller stream index wins. Distances: squared Euclidean, or
cosine dissimilarity with 2.0 for zero-norm vectors.

Reductions use ``np.sum`` over the contiguous last axis only (no BLAS), so a
pair's distance value does not depend on batch or chunk boundaries.
"""

from __future__ import annotations

import numpy as np

# Test points are processed in chunks to bound the (chunk, batch, dim) temp.
_CHUNK = 256


def update_nearest_sqeuclidean(test, batch, start, best_dist, best_idx):
    b64 = batch.astype(np.float64)
    m = test.shape[0]
    for lo in range(0, m, _CHUNK):
        hi = min(lo + _CHUNK, m)
        t64 = test[lo:hi].astype(np.float64)
        d2 = np.sum((t64[:, None, :] - b64[None, :, :]) ** 2, axis=2)
        j = np.argmin(d2, axis=1)
        dmin = d2[np.arange(hi - lo), j]
        upd = dmin < best_dist[lo:hi]
        best_dist[lo:hi][upd] = dmin[upd]
        best_idx[lo:hi][upd] = start + j[upd]


def update_nearest_cosine(test, batch, start, best_dist, best_idx):
    b64 = batch.astype(np.float64)
    bnorm2 = np.sum(b64 * b64, axis=1)
    m = test.shape[0]
    for lo in range(0, m, _CHUNK):
        hi = min(lo + _CHUNK, m)
        t64 = test[lo:hi].astype(np.float64)
        tnorm2 = np.sum(t64 * t64, axis=1)
        dot = np.sum(t64[:, None, :] * b64[None, :, :], axis=2)
        # sqrt of the squared-norm product keeps self-distance exactly zero
        denom = np.sqrt(tnorm2[:, None] * bnorm2[None, :])
        with np.errstate(invalid="ignore", divide="ignore"):
            d = 1.0 - dot / denom
        d[denom == 0.0] = 2.0
        j = np.argmin(d, axis=1)
        dmin = d[np.arange(hi - lo), j]
        upd = dmin < best_dist[lo:hi]
        best_dist[lo:hi][upd] = dmin[upd]
        best_idx[lo:hi][upd] = start + j[upd]
