"""Manifest-driven feasibility studies: arms, strategy dispatch, results.

A :class:`KnnArm` adapts one transformation's streaming 1NN state to the
scheduler's pull interface. Embedding matrices load lazily on the first pull
so that creating a study (or a service session) stays cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from snoopy import datamodel, engine, estimator, scheduler
from snoopy.datamodel import Metric, Strategy, StudyLabels, StudyManifest
from snoopy.errors import (
    DegenerateFit,
    InsufficientPoints,
    SnoopyError,
    ZeroErrorPoint,
)


class KnnArm(scheduler.Arm):
    """One transformation treated as a bandit arm; a pull streams one batch."""

    def __init__(self, spec: datamodel.TransformationSpec, labels: StudyLabels,
                 batch_size: int, n_train: int):
        super().__init__(spec.transformation_id)
        self.spec = spec
        self.labels = labels
        self.batch_size = batch_size
        self.n_train = n_train
        self.train: datamodel.EmbeddingMatrix | None = None
        self.test: datamodel.EmbeddingMatrix | None = None
        self.state = engine.ArmState(spec.transformation_id, spec.metric,
                                     labels.n_test)

    @property
    def max_pulls(self) -> int:
        return math.ceil(self.n_train / self.batch_size)

    def ensure_loaded(self) -> None:
        if self.train is None:
            self.train = datamodel.read_embedding_file(
                self.spec.train_path, self.spec.transformation_id)
            self.test = datamodel.read_embedding_file(
                self.spec.test_path, self.spec.transformation_id)

    def _pull_once(self) -> float:
        self.ensure_loaded()
        point = engine.pull(self.state, self.train, self.test, self.labels,
                            self.batch_size)
        return point.err_1nn

    def current_estimate(self) -> estimator.BerEstimate:
        """Estimate at the consumed prefix, from current labels (tracks edits)."""
        if not self.state.curve:
            raise SnoopyError(f"arm {self.arm_id} has no pulls yet")
        err = engine.recompute_error(self.state, self.labels)
        value = float(estimator.cover_hart_lower_bound(err, self.labels.n_classes))
        return estimator.BerEstimate(self.arm_id, err, value, self.state.n_consumed)


@dataclass
class StudyOutcome:
    """Everything a run produces: the verdict plus its supporting material."""

    result: estimator.StudyResult
    run: scheduler.SchedulerRun
    fit: estimator.ExtrapolationFit | None
    projection: estimator.SampleProjection | None
    arms: dict[str, KnnArm]

    def to_dict(self) -> dict:
        doc = self.result.to_dict()
        doc["scheduler"] = self.run.to_dict()
        doc["extrapolation"] = None if self.fit is None else {
            "alpha": self.fit.alpha,
            "intercept": self.fit.intercept,
            "fit_points": self.fit.fit_points,
            "residual": self.fit.residual,
        }
        doc["projection"] = None if self.projection is None else self.projection.to_dict()
        return doc


def batch_size_for(manifest: StudyManifest) -> int:
    return max(1, math.ceil(manifest.batch_fraction * manifest.n_train))


def build_arms(manifest: StudyManifest, labels: StudyLabels) -> dict[str, KnnArm]:
    batch = batch_size_for(manifest)
    return {
        spec.transformation_id: KnnArm(spec, labels, batch, manifest.n_train)
        for spec in manifest.transformations
    }


def run_study(manifest: StudyManifest, labels: StudyLabels,
              arms: dict[str, KnnArm] | None = None,
              extrapolation_window: int = 10) -> StudyOutcome:
    """Execute the manifest's strategy and assemble the feasibility verdict.

    The extrapolation fit targets the winning (minimal-estimate)
    transformation's convergence curve.
    """
    if arms is None:
        arms = build_arms(manifest, labels)
    arm_list = list(arms.values())

    if manifest.strategy in (Strategy.SH, Strategy.SH_TANGENT):
        tangent = manifest.strategy == Strategy.SH_TANGENT
        if manifest.auto_budget:
            run = scheduler.run_with_doubling(arm_list, use_tangent=tangent)
        else:
            run = scheduler.successive_halving(arm_list, manifest.budget,
                                               use_tangent=tangent)
    elif manifest.strategy == Strategy.UNIFORM:
        if manifest.auto_budget:
            budget = len(arm_list) * max(a.max_pulls for a in arm_list)
        else:
            budget = manifest.budget
        run = scheduler.uniform_allocation(arm_list, budget)
    else:
        run = scheduler.perfect_strategy(arm_list, manifest.oracle_winner)

    estimates = [a.current_estimate() for a in arm_list if a.state.curve]
    result = estimator.build_result(estimates, manifest.target_accuracy)

    fit = projection = None
    winner_arm = arms[result.winner]
    try:
        fit = estimator.fit_loglinear(winner_arm.state.curve, extrapolation_window)
    except (InsufficientPoints, ZeroErrorPoint):
        fit = None
    if fit is not None:
        try:
            projection = estimator.samples_to_target(
                fit, manifest.target_accuracy, labels.n_classes,
                winner_arm.state.n_consumed)
        except DegenerateFit:
            projection = None
    return StudyOutcome(result=result, run=run, fit=fit, projection=projection,
                        arms=arms)


def rebuild_result(manifest: StudyManifest, labels: StudyLabels,
                   arms: dict[str, KnnArm]) -> estimator.StudyResult:
    """Re-derive the verdict from current labels without any distance work."""
    estimates = [a.current_estimate() for a in arms.values() if a.state.curve]
    return estimator.build_result(estimates, manifest.target_accuracy)
