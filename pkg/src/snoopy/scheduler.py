"""Pull allocation across transformation arms.

Plain successive halving splits a pull budget B over ceil(log2(n)) rounds;
each round pulls every surviving arm r_k = floor(B / (|S_k| * rounds)) times,
ranks survivors by their loss at the cumulative pull count R_k, and keeps the
better half. The tangent variant pulls the better-ranked half in full, then
pulls worse-ranked arms one at a time, dropping an arm as soon as the line
through its two last-known curve points, evaluated at R_k, exceeds the worst
loss among the fully pulled half (strict >). For convex decreasing curves
that line under-predicts the true loss, so every dropped arm would have been
dropped by plain halving too: survivor sets per round are identical and only
pulls are saved.

Arms cache their loss curves, so restarting a schedule (the doubling trick)
never recomputes a pull. Exhausted arms report their final loss for any
later pull index; pulling them further is a no-op that costs nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from snoopy.errors import InsufficientBudget


class Arm:
    """A loss stream with a cached curve.

    Subclasses implement :meth:`_pull_once` producing the next loss value.
    ``max_pulls`` is the stream length, or ``None`` for unbounded synthetic
    arms. ``computed_pulls`` counts fresh computations only, so schedules
    replayed over cached prefixes cost nothing.
    """

    def __init__(self, arm_id: str):
        self.arm_id = arm_id
        self.losses: list[float] = []
        self.computed_pulls = 0

    @property
    def max_pulls(self) -> int | None:
        return None

    def _pull_once(self) -> float:
        raise NotImplementedError

    def clip(self, k: int) -> int:
        """Pull count k clipped at stream exhaustion."""
        cap = self.max_pulls
        return k if cap is None else min(k, cap)

    def loss_after(self, k: int) -> float:
        """Loss after k pulls (computing lazily; exhausted arms report their
        final loss)."""
        k = self.clip(k)
        if k < 1:
            raise ValueError("loss_after requires k >= 1")
        while len(self.losses) < k:
            self.losses.append(self._pull_once())
            self.computed_pulls += 1
        return self.losses[k - 1]


@dataclass(frozen=True)
class RoundLog:
    index: int
    arm_ids: tuple[str, ...]
    pulls: int
    cumulative: int


@dataclass(frozen=True)
class SchedulerRun:
    strategy: str
    budget: int
    rounds: tuple[RoundLog, ...]
    winner: str
    total_pulls: int
    tangent_break_count: int
    final_positions: dict[str, int] = field(default_factory=dict)

    def eliminated_round(self, arm_id: str) -> int | None:
        """Round at which an arm was dropped (the last one it took part in);
        None for the winner or an arm that never participated."""
        if arm_id == self.winner:
            return None
        last = None
        for r in self.rounds:
            if arm_id in r.arm_ids:
                last = r.index
        return last

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "budget": self.budget,
            "rounds": [
                {"index": r.index, "arm_ids": list(r.arm_ids),
                 "pulls": r.pulls, "cumulative": r.cumulative}
                for r in self.rounds
            ],
            "winner": self.winner,
            "total_pulls": self.total_pulls,
            "tangent_break_count": self.tangent_break_count,
            "final_positions": dict(self.final_positions),
        }


class _PullCounter:
    """Tracks per-run arm positions and logical pull work."""

    def __init__(self, arms):
        self.pos = {a.arm_id: 0 for a in arms}
        self.total = 0

    def advance_to(self, arm: Arm, target: int) -> float:
        new = arm.clip(target)
        old = self.pos[arm.arm_id]
        if new > old:
            self.total += new - old
            self.pos[arm.arm_id] = new
        return arm.loss_after(max(new, old, 1))


def _tangent_prediction(arm: Arm, pos: int, horizon: int) -> float:
    """Line through the last two known curve points, evaluated at the round's
    cumulative pull count.

    With a single known point no line exists, so the prediction stays at the
    initialization value 0, which never triggers a break (for a decreasing
    convex curve the two-point line under-predicts the future loss, which is
    what makes breaking sound; a flat one-point guess would over-predict).
    An exhausted arm's loss cannot change, so its prediction is its final
    loss."""
    cap = arm.max_pulls
    if cap is not None and pos >= cap:
        return arm.loss_after(cap)
    if pos < 2:
        return 0.0
    last = arm.loss_after(pos)
    prev = arm.loss_after(pos - 1)
    return last + (last - prev) * (horizon - pos)


def pulls_with_tangent_breaks(survivors, r: int, cumulative: int, predictions: dict,
                              threshold: float, counter: _PullCounter):
    """Pull each arm up to r times, dropping it as soon as its tangent
    prediction at the round end exceeds the threshold (strict >).

    Returns (kept arms, number of arms dropped). Predictions persist across
    rounds in ``predictions``.
    """
    kept = []
    breaks = 0
    for arm in survivors:
        broken = False
        for _ in range(r):
            if predictions[arm.arm_id] > threshold:
                broken = True
                break
            counter.advance_to(arm, counter.pos[arm.arm_id] + 1)
            predictions[arm.arm_id] = _tangent_prediction(
                arm, counter.pos[arm.arm_id], cumulative)
        if broken:
            breaks += 1
        else:
            kept.append(arm)
    return kept, breaks


def successive_halving(arms, budget: int, use_tangent: bool = False) -> SchedulerRun:
    """Allocate ``budget`` pulls over halving rounds; returns the winner.

    Arms are ranked by loss at the round's cumulative pull count, ties broken
    by id. The first round treats the given arm order as the ranking.
    """
    arms = list(arms)
    if not arms:
        raise InsufficientBudget("no arms to schedule")
    ids = [a.arm_id for a in arms]
    if len(set(ids)) != len(ids):
        raise ValueError("arm ids must be unique")
    n = len(arms)
    rounds = max(1, math.ceil(math.log2(n)))
    if budget < rounds * n:
        raise InsufficientBudget(
            f"budget {budget} < rounds*arms = {rounds * n}")

    counter = _PullCounter(arms)
    predictions = {a.arm_id: 0.0 for a in arms}
    survivors = arms[:]
    cumulative = 0
    breaks = 0
    log = []
    for k in range(rounds):
        L = len(survivors)
        r_k = budget // (L * rounds)
        cumulative += r_k
        log.append(RoundLog(k, tuple(a.arm_id for a in survivors), r_k, cumulative))
        half = L // 2
        if half == 0:
            # lone survivor: no halving left, just spend the round's pulls
            counter.advance_to(survivors[0], cumulative)
            continue
        first, second = survivors[:half], survivors[half:]
        for arm in first:
            counter.advance_to(arm, cumulative)
        if use_tangent:
            threshold = max(arm.loss_after(arm.clip(cumulative)) for arm in first)
            # a stored prediction is the tangent evaluated at R, so it must be
            # re-evaluated at this round's horizon before the break checks
            for arm in second:
                predictions[arm.arm_id] = _tangent_prediction(
                    arm, counter.pos[arm.arm_id], cumulative)
            second, dropped = pulls_with_tangent_breaks(
                second, r_k, cumulative, predictions, threshold, counter)
            breaks += dropped
        else:
            for arm in second:
                counter.advance_to(arm, cumulative)
        pool = first + second
        pool.sort(key=lambda a: (a.loss_after(a.clip(cumulative)), a.arm_id))
        survivors = pool[:half]

    winner = min(survivors, key=lambda a: (a.loss_after(a.clip(cumulative)), a.arm_id))
    return SchedulerRun(
        strategy="SH_TANGENT" if use_tangent else "SH",
        budget=budget,
        rounds=tuple(log),
        winner=winner.arm_id,
        total_pulls=counter.total,
        tangent_break_count=breaks,
        final_positions=dict(counter.pos),
    )


def run_with_doubling(arms, use_tangent: bool = False,
                      max_doublings: int = 60) -> SchedulerRun:
    """Successive halving under the doubling trick.

    Starts from the minimal feasible budget and doubles it, restarting the
    schedule (cached curves make restarts free), until the winning arm has
    consumed its full training stream.
    """
    arms = list(arms)
    if any(a.max_pulls is None for a in arms):
        raise ValueError("doubling requires bounded arms")
    n = len(arms)
    budget = max(1, math.ceil(math.log2(n))) * n
    run = None
    for _ in range(max_doublings):
        run = successive_halving(arms, budget, use_tangent)
        winner = next(a for a in arms if a.arm_id == run.winner)
        if run.final_positions[winner.arm_id] >= winner.max_pulls:
            return run
        budget *= 2
    raise RuntimeError("doubling did not exhaust the winner's stream")


def uniform_allocation(arms, budget: int) -> SchedulerRun:
    """Every arm gets floor(budget / n) pulls; lowest final loss wins."""
    arms = list(arms)
    if not arms:
        raise InsufficientBudget("no arms to schedule")
    r = budget // len(arms)
    if r < 1:
        raise InsufficientBudget(f"budget {budget} gives no pull per arm")
    counter = _PullCounter(arms)
    for arm in arms:
        counter.advance_to(arm, r)
    winner = min(arms, key=lambda a: (a.loss_after(a.clip(r)), a.arm_id))
    return SchedulerRun(
        strategy="UNIFORM",
        budget=budget,
        rounds=(RoundLog(0, tuple(a.arm_id for a in arms), r, r),),
        winner=winner.arm_id,
        total_pulls=counter.total,
        tangent_break_count=0,
        final_positions=dict(counter.pos),
    )


def perfect_strategy(arms, oracle_winner: str) -> SchedulerRun:
    """Pull only the known-best arm to completion (benchmark lower bound)."""
    arms = list(arms)
    by_id = {a.arm_id: a for a in arms}
    if oracle_winner not in by_id:
        raise ValueError(f"oracle winner {oracle_winner!r} is not an arm")
    arm = by_id[oracle_winner]
    if arm.max_pulls is None:
        raise ValueError("perfect strategy requires a bounded winner")
    counter = _PullCounter(arms)
    counter.advance_to(arm, arm.max_pulls)
    return SchedulerRun(
        strategy="PERFECT",
        budget=arm.max_pulls,
        rounds=(RoundLog(0, (arm.arm_id,), arm.max_pulls, arm.max_pulls),),
        winner=arm.arm_id,
        total_pulls=counter.total,
        tangent_break_count=0,
        final_positions=dict(counter.pos),
    )
