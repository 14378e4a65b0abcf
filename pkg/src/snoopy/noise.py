"""Label-noise modeling: injection and closed-form BER evolution.

Class-dependent noise is described by a column-stochastic transition matrix
``t[noisy, true] = P(noisy label | true label)`` with per-class flip fraction
``rho(y) = 1 - t[y, y]``. On a discrete joint distribution the BER of the
flipped labels has the closed form

    R_flipped = R + E_X[rho(y_x) p(y_x|x)] - sum_{y != y_x} E_X[t[y_x, y] p(y|x)]

valid whenever flipping preserves each point's argmax class. Uniform flipping
(every class flips a rho fraction uniformly over all classes) reduces it to

    R_flipped = R + rho * (1 - 1/C - R)

and pairwise binary flipping to ``R + rho * (1 - 2R)``. When only a
state-of-the-art error ``s`` is known instead of the clean BER, the flipped
BER is still bracketed by

    [(1-s) * min_y rho(y) - s * max_offdiag,  s + max_y rho(y)]

with a companion point prediction ``s + E_Y[rho(y)] * (1-s)``.

Injection is deterministic given a seed: each sample draws from a
counter-based random stream keyed by (seed, sample index), so the result does
not depend on iteration order or array chunking.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from snoopy.datamodel import LabelVector
from snoopy.errors import (
    ClassCountMismatch,
    DomainError,
    InvalidRho,
    InvalidTransition,
)


class AssumptionViolatedWarning(UserWarning):
    """Flipping changed some point's argmax class; the closed form is off."""


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransitionMatrix:
    """Column-stochastic class-noise model, indexed ``t[noisy, true]``."""

    t: np.ndarray

    def __post_init__(self):
        t = np.ascontiguousarray(self.t, dtype=np.float64)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise InvalidTransition(f"transition matrix must be square, got {t.shape}")
        if t.shape[0] < 2:
            raise InvalidTransition("transition matrix needs C >= 2")
        if np.any(t < 0.0) or np.any(t > 1.0):
            raise InvalidTransition("transition entries must lie in [0, 1]")
        colsums = t.sum(axis=0)
        if np.any(np.abs(colsums - 1.0) > 1e-9):
            raise InvalidTransition(
                f"columns must sum to 1 within 1e-9, got {colsums}")
        object.__setattr__(self, "t", t)

    @property
    def n_classes(self) -> int:
        return self.t.shape[0]

    @property
    def rho(self) -> np.ndarray:
        """Per-class flip fraction 1 - t[y, y]."""
        return 1.0 - np.diag(self.t)

    @property
    def diagonal_dominant_rows(self) -> bool:
        """Each diagonal entry is the maximum of its row."""
        return bool(np.all(np.diag(self.t) >= self.t.max(axis=1) - 1e-15))

    @property
    def diagonal_dominant_cols(self) -> bool:
        """Each diagonal entry is the maximum of its column."""
        return bool(np.all(np.diag(self.t) >= self.t.max(axis=0) - 1e-15))

    @property
    def max_offdiagonal(self) -> float:
        off = self.t[~np.eye(self.n_classes, dtype=bool)]
        return float(off.max())

    @classmethod
    def identity(cls, n_classes: int) -> "TransitionMatrix":
        return cls(np.eye(n_classes))

    @classmethod
    def uniform(cls, n_classes: int, rho: float) -> "TransitionMatrix":
        """Uniform flipping: rho fraction redrawn uniformly over all classes."""
        if not 0.0 <= rho <= 1.0:
            raise InvalidRho(f"rho {rho} not in [0, 1]")
        t = np.full((n_classes, n_classes), rho / n_classes)
        np.fill_diagonal(t, 1.0 - rho + rho / n_classes)
        return cls(t)

    @classmethod
    def pairwise(cls, rho: float) -> "TransitionMatrix":
        """Binary flipping: rho fraction of each class moved to the other."""
        if not 0.0 <= rho <= 1.0:
            raise InvalidRho(f"rho {rho} not in [0, 1]")
        return cls(np.array([[1.0 - rho, rho], [rho, 1.0 - rho]]))

    def to_dict(self) -> dict:
        return {"C": self.n_classes, "t": self.t.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "TransitionMatrix":
        t = np.asarray(doc["t"], dtype=np.float64)
        if int(doc.get("C", t.shape[0])) != t.shape[0]:
            raise InvalidTransition("declared C does not match matrix shape")
        return cls(t)


@dataclass(frozen=True)
class DiscreteJointDistribution:
    """Finite-support p(x, y): point masses p_x with conditionals p(y|x)."""

    p_x: np.ndarray
    conditionals: np.ndarray
    x_ids: tuple = ()

    def __post_init__(self):
        p = np.ascontiguousarray(self.p_x, dtype=np.float64)
        cond = np.ascontiguousarray(self.conditionals, dtype=np.float64)
        if p.ndim != 1 or cond.ndim != 2 or cond.shape[0] != p.size:
            raise DomainError("need p_x (m,) and conditionals (m, C)")
        if np.any(p < 0.0) or np.any(cond < 0.0):
            raise DomainError("probabilities must be non-negative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise DomainError(f"p_x sums to {p.sum()}, not 1 within 1e-12")
        rowsums = cond.sum(axis=1)
        if np.any(np.abs(rowsums - 1.0) > 1e-12):
            raise DomainError("each conditional must sum to 1 within 1e-12")
        ids = self.x_ids or tuple(range(p.size))
        object.__setattr__(self, "p_x", p)
        object.__setattr__(self, "conditionals", cond)
        object.__setattr__(self, "x_ids", tuple(ids))

    @property
    def n_classes(self) -> int:
        return self.conditionals.shape[1]


@dataclass(frozen=True)
class NoiseBoundsInput:
    """State-of-the-art error plus the noise model and empirical class prior."""

    sota_error: float
    transition: TransitionMatrix
    class_prior: np.ndarray = field(default=None)

    def __post_init__(self):
        if not 0.0 <= self.sota_error <= 1.0:
            raise DomainError(f"sota_error {self.sota_error} not in [0, 1]")
        prior = self.class_prior
        if prior is None:
            prior = np.full(self.transition.n_classes, 1.0 / self.transition.n_classes)
        prior = np.ascontiguousarray(prior, dtype=np.float64)
        if prior.size != self.transition.n_classes:
            raise ClassCountMismatch("prior length != transition class count")
        if abs(prior.sum() - 1.0) > 1e-9:
            raise DomainError("class prior must sum to 1 within 1e-9")
        object.__setattr__(self, "class_prior", prior)


def empirical_prior(labels: LabelVector) -> np.ndarray:
    counts = np.bincount(labels.labels, minlength=labels.n_classes)
    return counts / counts.sum()


# ---------------------------------------------------------------------------
# Counter-based randomness (order-independent injection)
# ---------------------------------------------------------------------------

def _mix64(x: np.ndarray) -> np.ndarray:
    # splitmix64 finalizer; uint64 arithmetic wraps mod 2**64.
    z = x + np.uint64(0x9E3779B97F4A7C15)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def _u01(seed: int, indices: np.ndarray, salt: int) -> np.ndarray:
    """Uniform [0, 1) draws keyed by (seed, index, salt)."""
    with np.errstate(over="ignore"):
        base = _mix64(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) ^ _mix64(np.uint64(salt)))
        h = _mix64(base + indices.astype(np.uint64))
    return (h >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)


# ---------------------------------------------------------------------------
# Injection
# ---------------------------------------------------------------------------

def inject_uniform_noise(labels: LabelVector, rho: float, seed: int) -> LabelVector:
    """Replace each label, with probability rho, by a uniform class draw.

    The draw ranges over all C classes including the original one, so the
    realized changed fraction concentrates around rho * (1 - 1/C).
    """
    if not 0.0 <= rho <= 1.0:
        raise InvalidRho(f"rho {rho} not in [0, 1]")
    n = len(labels)
    idx = np.arange(n)
    flip = _u01(seed, idx, salt=0x75) < rho
    draw = np.minimum(
        (_u01(seed, idx, salt=0xC1) * labels.n_classes).astype(np.int64),
        labels.n_classes - 1)
    out = np.where(flip, draw, labels.labels)
    return LabelVector(out, labels.n_classes)


def inject_class_noise(labels: LabelVector, transition: TransitionMatrix,
                       seed: int) -> LabelVector:
    """Replace each label y by a draw from column y of the transition matrix."""
    if transition.n_classes != labels.n_classes:
        raise ClassCountMismatch(
            f"transition C={transition.n_classes} != labels C={labels.n_classes}")
    n = len(labels)
    u = _u01(seed, np.arange(n), salt=0x3D)
    cdf = np.cumsum(transition.t, axis=0)
    out = np.empty(n, dtype=np.int64)
    for y in range(labels.n_classes):
        mask = labels.labels == y
        if mask.any():
            out[mask] = np.searchsorted(cdf[:, y], u[mask], side="right")
    np.minimum(out, labels.n_classes - 1, out=out)
    return LabelVector(out, labels.n_classes)


# ---------------------------------------------------------------------------
# Exact BER and its evolution under noise
# ---------------------------------------------------------------------------

def ber_exact(dist: DiscreteJointDistribution) -> float:
    """E_X[1 - max_y p(y|x)] by enumeration."""
    return float(np.sum(dist.p_x * (1.0 - dist.conditionals.max(axis=1))))


def flip_distribution(dist: DiscreteJointDistribution,
                      transition: TransitionMatrix) -> DiscreteJointDistribution:
    """The joint distribution after pushing labels through the noise model."""
    if transition.n_classes != dist.n_classes:
        raise ClassCountMismatch("transition and distribution class counts differ")
    flipped = dist.conditionals @ transition.t.T
    return DiscreteJointDistribution(dist.p_x, flipped, dist.x_ids)


def ber_evolution_uniform(ber0: float, n_classes: int, rho: float) -> float:
    """Closed-form BER after uniform label flipping: ber0 + rho*(1 - 1/C - ber0)."""
    limit = 1.0 - 1.0 / n_classes
    if not -1e-12 <= ber0 <= limit + 1e-12:
        raise DomainError(f"ber0 {ber0} not in [0, {limit:.6g}]")
    if not 0.0 <= rho <= 1.0:
        raise DomainError(f"rho {rho} not in [0, 1]")
    return ber0 + rho * (limit - ber0)


@dataclass(frozen=True)
class EvolvedBer:
    """Closed-form and enumerated BER after class-dependent flipping."""

    value: float
    enumerated: float
    violations: tuple
    clean_ber: float

    @property
    def assumption_holds(self) -> bool:
        return not self.violations


def ber_evolution_exact(dist: DiscreteJointDistribution,
                        transition: TransitionMatrix) -> EvolvedBer:
    """Closed-form flipped BER, cross-checked against enumeration.

    Points whose argmax class changes after flipping violate the formula's
    assumption; they are reported (and warned about), with both the formula
    value and the enumerated truth returned.
    """
    if transition.n_classes != dist.n_classes:
        raise ClassCountMismatch("transition and distribution class counts differ")
    cond = dist.conditionals
    y_x = np.argmax(cond, axis=1)
    p_yx = cond[np.arange(cond.shape[0]), y_x]
    clean = float(np.sum(dist.p_x * (1.0 - p_yx)))

    rho = transition.rho
    term_gain = float(np.sum(dist.p_x * rho[y_x] * p_yx))
    # sum over y != y_x of t[y_x, y] * p(y|x): take the full row dot product
    # and subtract the diagonal contribution.
    rows = transition.t[y_x, :]
    full = np.sum(rows * cond, axis=1)
    diag = rows[np.arange(cond.shape[0]), y_x] * p_yx
    term_leak = float(np.sum(dist.p_x * (full - diag)))
    value = clean + term_gain - term_leak

    flipped = flip_distribution(dist, transition)
    enumerated = ber_exact(flipped)
    # the assumption is that y_x still attains the post-flip maximum (ties ok)
    post_at_yx = flipped.conditionals[np.arange(cond.shape[0]), y_x]
    bad = np.flatnonzero(post_at_yx < flipped.conditionals.max(axis=1) - 1e-15)
    violations = tuple(dist.x_ids[i] for i in bad)
    if violations:
        warnings.warn(
            f"argmax class changed after flipping at {len(violations)} point(s); "
            f"formula value {value:.6g} vs enumerated {enumerated:.6g}",
            AssumptionViolatedWarning, stacklevel=2)
    return EvolvedBer(value=value, enumerated=enumerated,
                      violations=violations, clean_ber=clean)


# ---------------------------------------------------------------------------
# Bounds from a state-of-the-art error
# ---------------------------------------------------------------------------

def ber_bounds(inp: NoiseBoundsInput) -> tuple[float, float]:
    """Valid lower/upper bounds on the flipped BER given a SOTA error.

    lower = (1-s) * min_y rho(y) - s * max_offdiag, floored at 0
    upper = min(1, s + max_y rho(y))
    """
    s = inp.sota_error
    rho = inp.transition.rho
    lo = (1.0 - s) * float(rho.min()) - s * inp.transition.max_offdiagonal
    hi = s + float(rho.max())
    return max(0.0, lo), min(1.0, hi)


def ber_predicted_mean(inp: NoiseBoundsInput) -> float:
    """Point prediction s + E_Y[rho(y)] * (1-s) using the empirical prior."""
    s = inp.sota_error
    mean_rho = float(np.dot(inp.class_prior, inp.transition.rho))
    return s + mean_rho * (1.0 - s)
