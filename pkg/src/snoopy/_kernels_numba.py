"""Numba kernels for the streaming 1NN update.

Same contract as ``_kernels_numpy``: fold one batch of training rows into the
running per-test-point nearest pair, strict ``<`` on float64 accumulators so
the smaller stream index wins exact ties. Parallelism is over test points;
each point's scan is an independent sequential reduction, so results are
bit-identical for any thread count.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange


@njit(parallel=True, cache=True)
def update_nearest_sqeuclidean(test, batch, start, best_dist, best_idx):
    m, d = test.shape
    b = batch.shape[0]
    for i in prange(m):
        bd = best_dist[i]
        bi = best_idx[i]
        for j in range(b):
            acc = 0.0
            for k in range(d):
                diff = np.float64(test[i, k]) - np.float64(batch[j, k])
                acc += diff * diff
            if acc < bd:
                bd = acc
                bi = start + j
        best_dist[i] = bd
        best_idx[i] = bi


@njit(parallel=True, cache=True)
def update_nearest_cosine(test, batch, start, best_dist, best_idx):
    m, d = test.shape
    b = batch.shape[0]
    bnorm2 = np.empty(b, dtype=np.float64)
    for j in range(b):
        acc = 0.0
        for k in range(d):
            v = np.float64(batch[j, k])
            acc += v * v
        bnorm2[j] = acc
    for i in prange(m):
        acc = 0.0
        for k in range(d):
            v = np.float64(test[i, k])
            acc += v * v
        tnorm2 = acc
        bd = best_dist[i]
        bi = best_idx[i]
        for j in range(b):
            # sqrt of the squared-norm product keeps self-distance exactly zero
            denom = np.sqrt(tnorm2 * bnorm2[j])
            if denom == 0.0:
                dval = 2.0
            else:
                dot = 0.0
                for k in range(d):
                    dot += np.float64(test[i, k]) * np.float64(batch[j, k])
                dval = 1.0 - dot / denom
            if dval < bd:
                bd = dval
                bi = start + j
        best_dist[i] = bd
        best_idx[i] = bi
