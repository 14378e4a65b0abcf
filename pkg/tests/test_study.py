"""Manifest-driven runs: verdicts, strategies, determinism, incremental edits."""

import numpy as np
import pytest

from snoopy import engine, study
from snoopy.datamodel import (
    Strategy,
    load_manifest,
    load_study_labels,
)


def run_from(manifest_path, **overrides):
    manifest = load_manifest(manifest_path)
    if overrides:
        from dataclasses import replace
        manifest = replace(manifest, **overrides)
    labels = load_study_labels(manifest)
    return manifest, labels, study.run_study(manifest, labels)


class TestVerdicts:
    def test_clean_blobs_realistic(self, clean_blob_study):
        _, _, outcome = run_from(clean_blob_study)
        assert outcome.result.verdict == "REALISTIC"
        # analytic BER of the construction is ~0.079 << 0.1
        assert outcome.result.aggregate < 0.1

    def test_noisy_blobs_unrealistic(self, noisy_blob_study):
        _, _, outcome = run_from(noisy_blob_study)
        assert outcome.result.verdict == "UNREALISTIC"
        # evolved BER ~0.247 >> 0.1
        assert outcome.result.aggregate > 0.15

    def test_rerun_is_deterministic(self, clean_blob_study):
        _, _, a = run_from(clean_blob_study)
        _, _, b = run_from(clean_blob_study)
        assert a.result == b.result
        assert a.run == b.run

    def test_aggregate_is_min_of_per_arm(self, clean_blob_study):
        _, _, outcome = run_from(clean_blob_study)
        assert outcome.result.aggregate == min(e.value for e in outcome.result.per_arm)


class TestStrategies:
    def test_uniform_auto_consumes_everything(self, clean_blob_study):
        manifest, labels, outcome = run_from(clean_blob_study,
                                             strategy=Strategy.UNIFORM)
        for arm in outcome.arms.values():
            assert arm.state.finished

    def test_sh_fixed_budget(self, clean_blob_study):
        _, _, outcome = run_from(clean_blob_study, budget=40)
        assert outcome.run.strategy == "SH"
        assert outcome.run.total_pulls <= 40

    def test_sh_tangent(self, clean_blob_study):
        _, _, outcome = run_from(clean_blob_study, strategy=Strategy.SH_TANGENT)
        assert outcome.run.strategy == "SH_TANGENT"
        assert outcome.result.verdict == "REALISTIC"

    def test_perfect_strategy(self, clean_blob_study):
        manifest, labels, outcome = run_from(
            clean_blob_study, strategy=Strategy.PERFECT, oracle_winner="blob2d")
        assert outcome.run.strategy == "PERFECT"
        assert outcome.run.winner == "blob2d"
        assert outcome.arms["blob2d"].state.finished

    def test_multi_arm_winner_is_informative_one(self, tmp_path):
        from snoopy import synth

        manifest_path = synth.write_blob_study(
            tmp_path, n_train=1200, n_test=400, rho=0.0, n_arms=3,
            batch_fraction=0.1, strategy="SH_TANGENT", seed=3)
        _, _, outcome = run_from(manifest_path)
        # the undegraded copy of the geometry must win
        assert outcome.result.winner == "blob2d"
        assert len(outcome.result.per_arm) == 3


class TestIncrementalEdits:
    def test_rebuild_matches_fresh_run_on_edited_labels(self, noisy_blob_study):
        manifest, labels, outcome = run_from(noisy_blob_study)
        rng = np.random.default_rng(5)
        edits = [(int(i), int(rng.integers(0, 2)))
                 for i in rng.choice(labels.n_total, size=300, replace=False)]
        labels.apply_edits(edits)
        incremental = study.rebuild_result(manifest, labels, outcome.arms)

        fresh = study.run_study(manifest, labels)  # from scratch, edited labels
        assert incremental.per_arm == fresh.result.per_arm
        assert incremental.aggregate == fresh.result.aggregate
        assert incremental.verdict == fresh.result.verdict

    def test_per_arm_error_matches_prefix_oracle(self, noisy_blob_study):
        manifest, labels, outcome = run_from(noisy_blob_study)
        rng = np.random.default_rng(6)
        edits = [(int(i), int(rng.integers(0, 2)))
                 for i in rng.choice(labels.n_total, size=100, replace=False)]
        labels.apply_edits(edits)
        for arm in outcome.arms.values():
            got = engine.recompute_error(arm.state, labels)
            arm.ensure_loaded()
            from snoopy.datamodel import EmbeddingMatrix

            prefix = EmbeddingMatrix(arm.train.values[:arm.state.n_consumed].copy())
            assert got == engine.nn_error_full(prefix, arm.test, labels,
                                               arm.spec.metric)


class TestOutcomeSerialization:
    def test_to_dict_shape(self, clean_blob_study):
        _, _, outcome = run_from(clean_blob_study)
        doc = outcome.to_dict()
        assert doc["verdict"] in ("REALISTIC", "UNREALISTIC")
        assert {"per_arm", "aggregate", "winner", "gap", "scheduler",
                "extrapolation", "projection"} <= set(doc)
        assert doc["scheduler"]["winner"] == outcome.run.winner
