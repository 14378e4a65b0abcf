"""Bayes-error lower-bound estimation from 1NN errors.

The core transform maps a 1NN test error r into a BER lower-bound estimate

    r / (1 + sqrt(1 - C*r/(C-1)))

which is strictly increasing on [0, (C-1)/C] and satisfies r/2 <= value <= r.
Per-transformation estimates are aggregated by taking the minimum, and the
verdict is REALISTIC iff the aggregate is <= 1 - target_accuracy.

Sample-count extrapolation fits log(err) = -alpha*log(n) + C by least squares
over the tail of a convergence curve; that power law converges to zero, so a
projection far beyond the observed sample counts is flagged untrustworthy
rather than reported as fact.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Literal

import numpy as np

from snoopy.errors import (
    DegenerateFit,
    EmptyInput,
    InsufficientPoints,
    InvalidClassCount,
    OutOfRange,
    ZeroErrorPoint,
)

Verdict = Literal["REALISTIC", "UNREALISTIC"]

REALISTIC: Verdict = "REALISTIC"
UNREALISTIC: Verdict = "UNREALISTIC"


def cover_hart_lower_bound(r1nn, n_classes: int):
    """BER lower-bound estimate from a 1NN error rate.

    Accepts a scalar or an ndarray. Inputs above the formula's domain end
    (C-1)/C are clamped down with a warning; the radicand is floored at zero
    so boundary values stay exact.
    """
    if int(n_classes) != n_classes or n_classes < 2:
        raise InvalidClassCount(f"need an integer class count >= 2, got {n_classes}")
    c = float(n_classes)
    rmax = (c - 1.0) / c
    if isinstance(r1nn, (int, float)):
        r = float(r1nn)
        if r < 0.0:
            raise OutOfRange("1NN error must be >= 0")
        if r > rmax:
            warnings.warn(
                f"1NN error above (C-1)/C = {rmax:.6g}; clamping", stacklevel=2)
            r = rmax
        radicand = max(0.0, 1.0 - c * r / (c - 1.0))
        return r / (1.0 + math.sqrt(radicand))
    r = np.asarray(r1nn, dtype=np.float64)
    if np.any(r < 0.0):
        raise OutOfRange("1NN error must be >= 0")
    if np.any(r > rmax):
        warnings.warn(
            f"1NN error above (C-1)/C = {rmax:.6g}; clamping", stacklevel=2)
        r = np.minimum(r, rmax)
    radicand = np.maximum(0.0, 1.0 - c * r / (c - 1.0))
    return r / (1.0 + np.sqrt(radicand))


def invert_cover_hart(estimate: float, n_classes: int, tol: float = 1e-12) -> float:
    """The unique 1NN error whose lower-bound estimate equals ``estimate``.

    Solved by bisection on [0, (C-1)/C]; the transform is strictly
    increasing there.
    """
    if int(n_classes) != n_classes or n_classes < 2:
        raise InvalidClassCount(f"need an integer class count >= 2, got {n_classes}")
    c = float(n_classes)
    rmax = (c - 1.0) / c
    if not 0.0 <= estimate <= rmax + 1e-12:
        raise OutOfRange(f"estimate {estimate} not in [0, {rmax:.6g}]")
    if estimate <= 0.0:
        return 0.0
    lo, hi = 0.0, rmax
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if cover_hart_lower_bound(mid, n_classes) < estimate:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Aggregation and verdict
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BerEstimate:
    """A single transformation's estimate at ``n_used`` training samples."""

    transformation_id: str
    err_1nn: float
    value: float
    n_used: int


@dataclass(frozen=True)
class StudyResult:
    per_arm: tuple[BerEstimate, ...]
    aggregate: float
    winner: str
    verdict: Verdict
    target_accuracy: float
    gap: float

    def to_dict(self) -> dict:
        return {
            "per_arm": [
                {
                    "transformation_id": e.transformation_id,
                    "err_1nn": e.err_1nn,
                    "value": e.value,
                    "n_used": e.n_used,
                }
                for e in self.per_arm
            ],
            "aggregate": self.aggregate,
            "winner": self.winner,
            "verdict": self.verdict,
            "target_accuracy": self.target_accuracy,
            "gap": self.gap,
        }


def aggregate_min(estimates) -> tuple[float, str]:
    """Minimum estimate and its transformation (ties -> smallest id)."""
    estimates = list(estimates)
    if not estimates:
        raise EmptyInput("no estimates to aggregate")
    best = min(estimates, key=lambda e: (e.value, e.transformation_id))
    return best.value, best.transformation_id


def decide(aggregate: float, target_accuracy: float) -> Verdict:
    """REALISTIC iff the aggregated estimate is <= 1 - target_accuracy.

    The comparison carries a 1e-12 slack so that decimal boundary cases
    (estimate 0.2 against target 0.8) follow the rule's <= rather than the
    rounding of 1 - target.
    """
    if not 0.0 <= aggregate <= 1.0 or not 0.0 <= target_accuracy <= 1.0:
        raise OutOfRange("aggregate and target_accuracy must lie in [0, 1]")
    return REALISTIC if aggregate <= (1.0 - target_accuracy) + 1e-12 else UNREALISTIC


def build_result(estimates, target_accuracy: float) -> StudyResult:
    aggregate, winner = aggregate_min(estimates)
    verdict = decide(aggregate, target_accuracy)
    return StudyResult(
        per_arm=tuple(estimates),
        aggregate=aggregate,
        winner=winner,
        verdict=verdict,
        target_accuracy=target_accuracy,
        gap=(1.0 - aggregate) - target_accuracy,
    )


# ---------------------------------------------------------------------------
# Log-linear extrapolation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExtrapolationFit:
    """Least-squares fit of log(err) = -alpha*log(n) + intercept."""

    alpha: float
    intercept: float
    fit_points: int
    residual: float

    def error_at(self, n: float) -> float:
        return math.exp(self.intercept - self.alpha * math.log(n))


def fit_loglinear(curve, window: int = 10) -> ExtrapolationFit:
    """Fit the tail of a convergence curve in log-log space.

    ``curve`` yields points with ``n_consumed`` and ``err_1nn`` attributes.
    The last ``window`` points are used; zero-error points are dropped (their
    log is undefined). Raises InsufficientPoints when fewer than two usable
    points exist in the curve window, ZeroErrorPoint when the dropping is
    what caused that.
    """
    points = list(curve)[-window:]
    if len(points) < 2:
        raise InsufficientPoints(f"need >= 2 curve points, have {len(points)}")
    usable = [(p.n_consumed, p.err_1nn) for p in points if p.err_1nn > 0.0]
    if len(usable) < 2:
        raise ZeroErrorPoint("fewer than 2 non-zero loss points in the window")
    ns = np.array([n for n, _ in usable], dtype=np.float64)
    if np.unique(ns).size < 2:
        raise InsufficientPoints("curve points must have distinct sample counts")
    x = np.log(ns)
    y = np.log(np.array([e for _, e in usable], dtype=np.float64))
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((slope * x + intercept - y) ** 2)))
    return ExtrapolationFit(alpha=float(-slope), intercept=float(intercept),
                            fit_points=len(usable), residual=resid)


@dataclass(frozen=True)
class SampleProjection:
    """How many more training samples the fit says are needed."""

    status: Literal["OK", "UNREACHABLE", "UNTRUSTWORTHY"]
    needed: int | None
    n_star: float | None

    def to_dict(self) -> dict:
        return {"status": self.status, "needed": self.needed, "n_star": self.n_star}


def samples_to_target(fit: ExtrapolationFit, target_accuracy: float,
                      n_classes: int, n_current: int,
                      kappa: float = 5.0) -> SampleProjection:
    """Solve the fitted power law for the sample count reaching the target.

    The fit converges to zero error, so it will eventually promise any
    target; projections needing more than ``kappa`` times the current sample
    count are flagged UNTRUSTWORTHY instead of endorsed.
    """
    if fit.alpha <= 0.0:
        raise DegenerateFit(f"non-decreasing fit (alpha={fit.alpha:.6g})")
    target_estimate = 1.0 - target_accuracy
    rmax = (n_classes - 1.0) / n_classes
    if target_estimate >= rmax:
        # Any dataset satisfies such a target: the estimate never exceeds rmax.
        return SampleProjection("OK", 0, None)
    if target_estimate <= 0.0:
        return SampleProjection("UNREACHABLE", None, None)
    r_target = invert_cover_hart(target_estimate, n_classes)
    log_nstar = (fit.intercept - math.log(r_target)) / fit.alpha
    if log_nstar > 700.0:
        return SampleProjection("UNREACHABLE", None, None)
    n_star = math.exp(log_nstar)
    needed = max(0, math.ceil(n_star) - int(n_current))
    if needed > kappa * n_current:
        return SampleProjection("UNTRUSTWORTHY", needed, n_star)
    return SampleProjection("OK", needed, n_star)
