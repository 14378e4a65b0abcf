"""Shared fixtures: small on-disk blob studies and backend warm-up."""

from __future__ import annotations

import warnings

import pytest

from snoopy import _backend, synth
from snoopy.datamodel import Metric, StudyLabels
from snoopy.engine import ArmState, pull


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the numba kernels once so timed tests measure work, not JIT."""
    train_x, train_y = synth.gaussian_blobs(32, 3, seed=0)
    test_x, test_y = synth.gaussian_blobs(8, 3, seed=1)
    labels = StudyLabels(train_y, test_y)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for metric in (Metric.EUCLIDEAN, Metric.COSINE):
            state = ArmState("warm", metric, 8)
            while not state.finished:
                pull(state, train_x, test_x, labels, 16)
    yield


@pytest.fixture(scope="session")
def clean_blob_study(tmp_path_factory):
    """2000/600 two-blob dataset, no label noise, target 0.9."""
    out = tmp_path_factory.mktemp("blobs_clean")
    return synth.write_blob_study(out, n_train=2000, n_test=600, dim=2,
                                  rho=0.0, target_accuracy=0.9, seed=11,
                                  batch_fraction=0.05)


@pytest.fixture(scope="session")
def noisy_blob_study(tmp_path_factory):
    """Same construction with 40% uniform label noise."""
    out = tmp_path_factory.mktemp("blobs_noisy")
    return synth.write_blob_study(out, n_train=2000, n_test=600, dim=2,
                                  rho=0.4, target_accuracy=0.9, seed=11,
                                  batch_fraction=0.05)


@pytest.fixture(scope="function")
def numpy_backend():
    _backend.use("numpy")
    yield
    _backend.use(None)
