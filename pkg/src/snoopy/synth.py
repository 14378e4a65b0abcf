"""Synthetic datasets for tests, benchmarks, and demo sessions."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from snoopy import datamodel, noise
from snoopy.datamodel import EmbeddingMatrix, LabelVector


def gaussian_blobs(n: int, dim: int = 2, offset: float = 1.0, *,
                   seed: int = 0) -> tuple[EmbeddingMatrix, LabelVector]:
    """Two-class isotropic Gaussian blobs with means at +-offset * (1,..,1).

    With unit covariance the Bayes error is Phi(-offset * sqrt(dim)), which
    makes these handy as an analytically checkable embedding stand-in.
    """
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, size=n)
    x = rng.standard_normal((n, dim))
    x += np.where(y[:, None] == 1, offset, -offset)
    return EmbeddingMatrix(x.astype(np.float32)), LabelVector(y, 2)


def write_blob_study(out_dir, n_train: int = 20000, n_test: int = 5000,
                     dim: int = 2, rho: float = 0.0, target_accuracy: float = 0.9,
                     seed: int = 7, batch_fraction: float = 0.02,
                     strategy: str = "SH", n_arms: int = 1) -> Path:
    """Materialize a blob dataset + manifest on disk; returns the manifest path.

    When ``rho > 0`` the label files carry uniform noise and the clean labels
    are kept next to them in ``clean_labels.json`` (global index order) so a
    cleaning loop can restore them.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train_x, train_y = gaussian_blobs(n_train, dim, seed=seed)
    test_x, test_y = gaussian_blobs(n_test, dim, seed=seed + 1)

    transformations = []
    for i in range(n_arms):
        tid = f"blob{dim}d" if i == 0 else f"blob{dim}d-v{i}"
        tr_path, te_path = out / f"{tid}_train.snpe", out / f"{tid}_test.snpe"
        if i == 0:
            datamodel.write_embedding_file(tr_path, train_x)
            datamodel.write_embedding_file(te_path, test_x)
        else:
            # extra arms see a degraded copy of the geometry (noisier features)
            rng = np.random.default_rng(seed + 100 + i)
            blur = 1.0 + 0.75 * i
            datamodel.write_embedding_file(tr_path, EmbeddingMatrix(
                train_x.values + blur * rng.standard_normal(train_x.values.shape).astype(np.float32)))
            datamodel.write_embedding_file(te_path, EmbeddingMatrix(
                test_x.values + blur * rng.standard_normal(test_x.values.shape).astype(np.float32)))
        transformations.append({
            "transformation_id": tid,
            "train_path": tr_path.name,
            "test_path": te_path.name,
            "metric": "Euclidean",
        })

    noisy_train = noise.inject_uniform_noise(train_y, rho, seed + 2) if rho else train_y
    noisy_test = noise.inject_uniform_noise(test_y, rho, seed + 3) if rho else test_y
    datamodel.write_label_file(out / "train_labels.snpl", noisy_train)
    datamodel.write_label_file(out / "test_labels.snpl", noisy_test)
    clean = np.concatenate([train_y.labels, test_y.labels]).tolist()
    (out / "clean_labels.json").write_text(json.dumps(clean))

    manifest = {
        "transformations": transformations,
        "train_labels": "train_labels.snpl",
        "test_labels": "test_labels.snpl",
        "target_accuracy": target_accuracy,
        "batch_fraction": batch_fraction,
        "strategy": strategy,
        "budget": "AUTO",
        "seed": seed,
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2))
    return manifest_path
