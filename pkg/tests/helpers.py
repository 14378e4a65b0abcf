"""Shared test machinery: synthetic arms, distributions, and transitions."""

from __future__ import annotations

import numpy as np

from snoopy import scheduler
from snoopy.noise import DiscreteJointDistribution, TransitionMatrix


class CurveArm(scheduler.Arm):
    """Arm whose loss curve is a deterministic function of the pull index."""

    def __init__(self, arm_id: str, fn, cap: int | None = None):
        super().__init__(arm_id)
        self.fn = fn
        self._cap = cap

    @property
    def max_pulls(self) -> int | None:
        return self._cap

    def _pull_once(self) -> float:
        return float(self.fn(len(self.losses) + 1))


def convex_decreasing_family(rng: np.random.Generator, n_arms: int,
                             cap: int | None = None) -> list[CurveArm]:
    """Arms with curves a + b/(k+c)^p: decreasing and convex in the pull index."""
    arms = []
    for i in range(n_arms):
        a = rng.uniform(0.0, 0.3)
        b = rng.uniform(0.2, 2.0)
        c = rng.uniform(0.0, 5.0)
        p = rng.uniform(0.3, 1.5)
        arms.append(CurveArm(f"arm{i:02d}",
                             lambda k, a=a, b=b, c=c, p=p: a + b / (k + c) ** p,
                             cap=cap))
    return arms


def random_distribution(rng: np.random.Generator, n_points: int,
                        n_classes: int) -> DiscreteJointDistribution:
    p_x = rng.dirichlet(np.ones(n_points))
    cond = rng.dirichlet(np.ones(n_classes), size=n_points)
    return DiscreteJointDistribution(p_x, cond)


def random_preserving_transition(rng: np.random.Generator, n_classes: int,
                                 dist: DiscreteJointDistribution,
                                 max_rho: float = 0.3,
                                 max_tries: int = 200) -> TransitionMatrix:
    """A random strongly-diagonal transition that keeps every point's argmax
    class after flipping the given distribution."""
    from snoopy.noise import flip_distribution

    y_x = np.argmax(dist.conditionals, axis=1)
    for _ in range(max_tries):
        t = np.zeros((n_classes, n_classes))
        for y in range(n_classes):
            rho = rng.uniform(0.0, max_rho)
            off = rng.dirichlet(np.ones(n_classes - 1)) * rho
            col = np.insert(off, y, 1.0 - rho)
            t[:, y] = col
        tm = TransitionMatrix(t)
        flipped = flip_distribution(dist, tm)
        post = flipped.conditionals
        at_yx = post[np.arange(post.shape[0]), y_x]
        if np.all(at_yx >= post.max(axis=1) - 1e-15):
            return tm
    raise RuntimeError("could not sample an argmax-preserving transition")


def transition_with_extremes(min_rho: float, max_rho: float, max_offdiag: float,
                             n_classes: int = 10) -> TransitionMatrix:
    """Column-stochastic matrix whose rho extremes and largest off-diagonal
    entry hit the given values exactly."""
    t = np.zeros((n_classes, n_classes))
    rhos = np.linspace(min_rho, max_rho, n_classes)
    for y in range(n_classes):
        rho = rhos[y]
        t[y, y] = 1.0 - rho
        remaining = rho
        row = (y + 1) % n_classes
        while remaining > 1e-15:
            put = min(max_offdiag, remaining)
            t[row, y] += put
            remaining -= put
            row = (row + 1) % n_classes
            if row == y:
                row = (row + 1) % n_classes
    # make sure the off-diagonal maximum is attained exactly
    assert abs(t[~np.eye(n_classes, dtype=bool)].max() - max_offdiag) < 1e-12
    return TransitionMatrix(t)
