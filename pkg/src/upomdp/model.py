"""Core model types for POMDPs with interval-valued transition probabilities.

A model couples a finite POMDP graph with an interval of probabilities per
transition entry.  Every concrete instantiation picks one probability inside
each interval, per row, summing to one.  Two structural rules keep all
instantiations graph-equivalent and verification well-posed:

* graph preservation: an entry's lower bound is positive unless the entry is
  identically zero, so the support graph never depends on the instantiation;
* goal absorption: goal states carry a single zero-reward self-loop.

Policies are observation-based and strictly positive.  Mixing a policy into a
model yields an interval-valued Markov chain (one row per state) where
interval endpoints combine by interval arithmetic; dependencies between
entries of a shared source row are deliberately ignored (per-state
rectangularity).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Literal, Mapping

__all__ = [
    "Interval",
    "SpecThreshold",
    "UPomdp",
    "Policy",
    "IntervalMC",
    "Violation",
    "validate",
    "validate_policy",
    "instantiate",
    "nominal",
    "induce_imc",
    "uniform_policy",
    "MAXIMIZE",
    "MINIMIZE",
]

MAXIMIZE = "maximize-reward"
MINIMIZE = "minimize-cost"

# Feasibility slack for row-sum checks; interval endpoints themselves are exact.
SUM_TOL = 1e-9


@dataclass(frozen=True, order=True)
class Interval:
    """Closed probability interval [lower, upper]."""

    lower: float
    upper: float

    def is_point(self) -> bool:
        return self.lower == self.upper

    def contains(self, p: float, tol: float = 0.0) -> bool:
        return self.lower - tol <= p <= self.upper + tol

    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def scaled(self, w: float) -> "Interval":
        return Interval(self.lower * w, self.upper * w)

    def plus(self, other: "Interval") -> "Interval":
        return Interval(self.lower + other.lower, self.upper + other.upper)

    def times(self, other: "Interval") -> "Interval":
        # Product of independent nonnegative factors.
        return Interval(self.lower * other.lower, self.upper * other.upper)


@dataclass(frozen=True)
class SpecThreshold:
    """Expected-reward requirement at the initial state."""

    kappa: float
    direction: Literal["maximize-reward", "minimize-cost"] = MAXIMIZE

    def satisfied_by(self, value: float, tol: float = 0.0) -> bool:
        if self.direction == MAXIMIZE:
            return value >= self.kappa - tol
        return value <= self.kappa + tol


Row = tuple[tuple[int, Interval], ...]


@dataclass(frozen=True)
class UPomdp:
    """Uncertain POMDP.  Treated as immutable after construction.

    ``trans`` maps (state, action) to a successor row sorted by successor id;
    ``reward`` may omit zero entries.  ``avail`` lists action ids in their
    declared order, which states sharing an observation must agree on.
    """

    num_states: int
    num_actions: int
    num_observations: int
    initial: int
    goal: frozenset[int]
    obs: tuple[int, ...]
    avail: tuple[tuple[int, ...], ...]
    trans: dict[tuple[int, int], Row]
    reward: dict[tuple[int, int], float] = field(default_factory=dict)

    def actions(self, s: int) -> tuple[int, ...]:
        return self.avail[s]

    def row(self, s: int, a: int) -> Row:
        return self.trans[(s, a)]

    def reward_of(self, s: int, a: int) -> float:
        return self.reward.get((s, a), 0.0)

    def observation(self, s: int) -> int:
        return self.obs[s]

    def is_point_model(self) -> bool:
        return all(
            iv.is_point() for row in self.trans.values() for _, iv in row
        )

    def states_with_obs(self) -> dict[int, list[int]]:
        by_obs: dict[int, list[int]] = {}
        for s, z in enumerate(self.obs):
            by_obs.setdefault(z, []).append(s)
        return by_obs


@dataclass(frozen=True)
class Policy:
    """Observation-based randomized policy: obs id -> ((action, prob), ...)."""

    rows: dict[int, tuple[tuple[int, float], ...]]

    def dist(self, z: int) -> tuple[tuple[int, float], ...]:
        return self.rows[z]

    def prob(self, z: int, a: int) -> float:
        for act, p in self.rows[z]:
            if act == a:
                return p
        return 0.0


@dataclass(frozen=True)
class IntervalMC:
    """Policy-free interval Markov chain: one row and one reward per state."""

    num_states: int
    initial: int
    goal: frozenset[int]
    rows: tuple[Row, ...]
    rewards: tuple[float, ...]


@dataclass(frozen=True)
class Violation:
    """One broken invariant, located by state/action coordinates."""

    kind: str
    where: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind} at {self.where}: {self.detail}"


def validate(model: UPomdp) -> list[Violation]:
    """Check every structural invariant; return all violations found."""
    out: list[Violation] = []

    def bad(kind: str, where: str, detail: str) -> None:
        out.append(Violation(kind, where, detail))

    n, m, k = model.num_states, model.num_actions, model.num_observations
    if n <= 0:
        bad("size", "model", "num_states must be positive")
        return out
    if not (0 <= model.initial < n):
        bad("id-range", "initial", f"initial state {model.initial} out of range")
    for g in model.goal:
        if not (0 <= g < n):
            bad("id-range", f"goal {g}", "goal state out of range")
    if len(model.obs) != n or len(model.avail) != n:
        bad("size", "model", "obs/avail length must equal num_states")
        return out

    for s in range(n):
        if not (0 <= model.obs[s] < k):
            bad("id-range", f"state {s}", f"observation {model.obs[s]} out of range")
        acts = model.avail[s]
        if not acts:
            bad("no-action", f"state {s}", "empty action set")
        if len(set(acts)) != len(acts):
            bad("duplicate-action", f"state {s}", f"repeated action in {acts}")
        for a in acts:
            if not (0 <= a < m):
                bad("id-range", f"state {s} action {a}", "action id out of range")
                continue
            row = model.trans.get((s, a))
            if row is None:
                bad("missing-row", f"state {s} action {a}", "no transition row")
                continue
            lo_sum = 0.0
            hi_sum = 0.0
            seen: set[int] = set()
            prev = -1
            for succ, iv in row:
                where = f"state {s} action {a} successor {succ}"
                if not (0 <= succ < n):
                    bad("id-range", where, "successor out of range")
                if succ in seen:
                    bad("duplicate-successor", where, "repeated successor")
                seen.add(succ)
                if succ <= prev:
                    bad("row-order", where, "successors not sorted ascending")
                prev = succ
                if not (
                    0.0 <= iv.lower <= iv.upper <= 1.0
                ) or math.isnan(iv.lower) or math.isnan(iv.upper):
                    bad(
                        "interval-bounds",
                        where,
                        f"[{iv.lower}, {iv.upper}] outside [0, 1] or inverted",
                    )
                elif iv.lower == 0.0 and iv.upper > 0.0:
                    bad(
                        "graph-preservation",
                        where,
                        f"[{iv.lower}, {iv.upper}] has zero lower with positive upper",
                    )
                lo_sum += iv.lower
                hi_sum += iv.upper
            if row and not (lo_sum <= 1.0 + SUM_TOL and hi_sum >= 1.0 - SUM_TOL):
                bad(
                    "empty-polytope",
                    f"state {s} action {a}",
                    f"sum of lowers {lo_sum} / uppers {hi_sum} cannot bracket 1",
                )
            if not row:
                bad("missing-row", f"state {s} action {a}", "empty transition row")
        for a in range(m):
            if a not in acts and (s, a) in model.trans:
                bad(
                    "spurious-row",
                    f"state {s} action {a}",
                    "transition row for unavailable action",
                )

    for (s, a), r in model.reward.items():
        if not (0 <= s < n) or a not in model.avail[s]:
            bad("spurious-reward", f"state {s} action {a}", "reward off the action set")
        if r < 0 or math.isnan(r):
            bad("negative-reward", f"state {s} action {a}", f"reward {r} < 0")

    # States sharing an observation must expose the identical ordered action set.
    for z, states in sorted(model.states_with_obs().items()):
        ref = model.avail[states[0]]
        for s in states[1:]:
            if model.avail[s] != ref:
                bad(
                    "observation-consistency",
                    f"observation {z}",
                    f"state {states[0]} has actions {ref} but state {s} has {model.avail[s]}",
                )

    for g in sorted(model.goal):
        if not (0 <= g < n):
            continue
        acts = model.avail[g]
        if len(acts) != 1:
            bad("goal-absorption", f"goal {g}", f"expected 1 action, found {len(acts)}")
            continue
        a = acts[0]
        row = model.trans.get((g, a), ())
        if [entry for entry in row if entry[1].upper > 0.0] != [
            (g, Interval(1.0, 1.0))
        ]:
            bad("goal-absorption", f"goal {g}", "not a Dirac self-loop")
        if model.reward_of(g, a) != 0.0:
            bad("goal-absorption", f"goal {g}", "self-loop reward must be 0")

    return out


def validate_policy(model: UPomdp, policy: Policy) -> list[Violation]:
    """Check a policy against a model: coverage, positivity, normalization."""
    out: list[Violation] = []
    for z, states in sorted(model.states_with_obs().items()):
        acts = model.avail[states[0]]
        row = policy.rows.get(z)
        if row is None:
            out.append(Violation("missing-observation", f"observation {z}", "no policy row"))
            continue
        keys = tuple(a for a, _ in row)
        if set(keys) != set(acts) or len(keys) != len(set(keys)):
            out.append(
                Violation(
                    "action-mismatch",
                    f"observation {z}",
                    f"policy actions {keys} do not match available {acts}",
                )
            )
            continue
        total = 0.0
        for a, p in row:
            if not p > 0.0:
                out.append(
                    Violation("nonpositive", f"observation {z} action {a}", f"prob {p}")
                )
            total += p
        if abs(total - 1.0) > 1e-12:
            out.append(
                Violation("normalization", f"observation {z}", f"sums to {total!r}")
            )
    return out


def _require_valid(model: UPomdp) -> None:
    problems = validate(model)
    if problems:
        listing = "; ".join(str(v) for v in problems[:8])
        raise ValueError(f"invalid model ({len(problems)} violations): {listing}")


def instantiate(
    model: UPomdp, pick: Callable[[int, int, int], float], tol: float = 1e-12
) -> UPomdp:
    """Fix one probability inside every interval, returning a point model.

    ``pick(s, a, succ)`` chooses the probability of each entry.  Rejects picks
    outside their interval or rows not summing to one.
    """
    trans: dict[tuple[int, int], Row] = {}
    for s in range(model.num_states):
        for a in model.avail[s]:
            row = model.trans[(s, a)]
            chosen: list[tuple[int, Interval]] = []
            total = 0.0
            for succ, iv in row:
                p = pick(s, a, succ)
                if not iv.contains(p, tol):
                    raise ValueError(
                        f"pick {p!r} outside [{iv.lower}, {iv.upper}] "
                        f"at state {s} action {a} successor {succ}"
                    )
                chosen.append((succ, Interval(p, p)))
                total += p
            if abs(total - 1.0) > SUM_TOL:
                raise ValueError(
                    f"picked row sums to {total!r} at state {s} action {a}"
                )
            trans[(s, a)] = tuple(chosen)
    return UPomdp(
        num_states=model.num_states,
        num_actions=model.num_actions,
        num_observations=model.num_observations,
        initial=model.initial,
        goal=model.goal,
        obs=model.obs,
        avail=model.avail,
        trans=trans,
        reward=dict(model.reward),
    )


def nominal(model: UPomdp) -> UPomdp:
    """Midpoint instantiation, renormalized proportionally within bounds.

    Midpoints of a feasible row bracket 1, so scaling the midpoint offsets
    toward the lower (or upper) endpoints always lands exactly on a
    distribution without leaving any interval.
    """
    picks: dict[tuple[int, int, int], float] = {}
    for s in range(model.num_states):
        for a in model.avail[s]:
            row = model.trans[(s, a)]
            mids = [iv.midpoint() for _, iv in row]
            total = sum(mids)
            if abs(total - 1.0) <= 1e-15:
                scaled = mids
            elif total > 1.0:
                lo_sum = sum(iv.lower for _, iv in row)
                denom = total - lo_sum
                assert denom > 0.0, "renormalization infeasible on nonempty polytope"
                t = (1.0 - lo_sum) / denom
                scaled = [
                    iv.lower + (mid - iv.lower) * t for (_, iv), mid in zip(row, mids)
                ]
            else:
                hi_sum = sum(iv.upper for _, iv in row)
                denom = hi_sum - total
                assert denom > 0.0, "renormalization infeasible on nonempty polytope"
                t = (1.0 - total) / denom
                scaled = [
                    mid + (iv.upper - mid) * t for (_, iv), mid in zip(row, mids)
                ]
            for (succ, _), p in zip(row, scaled):
                picks[(s, a, succ)] = p
    return instantiate(model, lambda s, a, d: picks[(s, a, d)], tol=1e-9)


def uniform_policy(model: UPomdp) -> Policy:
    """Uniform distribution over the available actions of each observation."""
    rows: dict[int, tuple[tuple[int, float], ...]] = {}
    for z, states in sorted(model.states_with_obs().items()):
        acts = model.avail[states[0]]
        p = 1.0 / len(acts)
        rows[z] = tuple((a, p) for a in acts)
    return Policy(rows)


def induce_imc(model: UPomdp, policy: Policy, check: bool = True) -> IntervalMC:
    """Mix a strictly positive policy into the model, one interval row per state.

    Endpoints combine by interval arithmetic over the policy weights; entries
    that are identically zero after mixing are dropped so the support graph
    stays the positive-entry graph.
    """
    if check:
        problems = validate_policy(model, policy)
        if problems:
            listing = "; ".join(str(v) for v in problems[:8])
            raise ValueError(f"policy does not fit model: {listing}")
    rows: list[Row] = []
    rewards: list[float] = []
    for s in range(model.num_states):
        z = model.obs[s]
        weights = dict(policy.rows[z])
        lo_acc: dict[int, float] = {}
        hi_acc: dict[int, float] = {}
        rew = 0.0
        for a in model.avail[s]:
            w = weights[a]
            rew += w * model.reward_of(s, a)
            for succ, iv in model.trans[(s, a)]:
                lo_acc[succ] = lo_acc.get(succ, 0.0) + w * iv.lower
                hi_acc[succ] = hi_acc.get(succ, 0.0) + w * iv.upper
        row = tuple(
            (succ, Interval(lo_acc[succ], hi_acc[succ]))
            for succ in sorted(hi_acc)
            if hi_acc[succ] > 0.0
        )
        rows.append(row)
        rewards.append(rew)
    return IntervalMC(
        num_states=model.num_states,
        initial=model.initial,
        goal=model.goal,
        rows=tuple(rows),
        rewards=tuple(rewards),
    )
