"""Exact robust verification of interval Markov chains.

Nature resolves every interval row adversarially, per state, subject only to
the row's box and the sum-to-one budget.  The inner optimization per row has a
greedy closed form (fill mass in value order starting from the lower bounds),
so robust values are computed by value iteration with one greedy resolution
per row per sweep.  The sweep runs in a compiled kernel when available and in
a bit-identical pure-Python fallback otherwise.

Also provides two independent oracles used throughout the test suite: an
exponential vertex-enumeration evaluator for tiny instances and a simplex-grid
policy search.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .model import (
    MAXIMIZE,
    Interval,
    IntervalMC,
    Policy,
    SpecThreshold,
    UPomdp,
    induce_imc,
)

try:  # compiled extension, with pure fallback
    from . import _kernels as _kern

    COMPILED_KERNELS = True
except ImportError:  # pragma: no cover - depends on build environment
    from . import _kernels_py as _kern

    COMPILED_KERNELS = False

__all__ = [
    "COMPILED_KERNELS",
    "RobustResult",
    "inner_opt",
    "robust_value_iteration",
    "brute_force_robust_value",
    "grid_search_policy",
    "exact_point_values",
    "pack_imc",
]


@dataclass(frozen=True, eq=False)
class RobustResult:
    """Robust values plus nature's witness at the fixpoint."""

    values: np.ndarray
    beta: float
    iterations: int
    residual: float
    witness: tuple[tuple[tuple[int, float], ...], ...]


def inner_opt(
    values, row: tuple[tuple[int, Interval], ...], direction: str
) -> tuple[tuple[tuple[int, float], ...], float]:
    """Nature's one-row optimization over the interval box meeting the simplex.

    ``values`` is indexable by successor id; ``direction`` is "min" or "max".
    Returns the chosen distribution and its expected value.  The optimum sits
    at a greedy vertex: start all entries at their lower bounds and hand the
    leftover mass to successors in value order (ties by ascending id).
    """
    if direction not in ("min", "max"):
        raise ValueError(f"direction must be 'min' or 'max', got {direction!r}")
    probs = [iv.lower for _, iv in row]
    slack = 1.0 - sum(probs)
    order = sorted(
        range(len(row)),
        key=(
            (lambda i: (values[row[i][0]], row[i][0]))
            if direction == "min"
            else (lambda i: (-values[row[i][0]], row[i][0]))
        ),
    )
    for i in order:
        if slack <= 0.0:
            break
        take = min(row[i][1].upper - row[i][1].lower, slack)
        probs[i] += take
        slack -= take
    value = sum(p * values[succ] for p, (succ, _) in zip(probs, row))
    return tuple((succ, p) for (succ, _), p in zip(row, probs)), value


def pack_imc(imc: IntervalMC):
    """CSR arrays (indptr, indices, lo, hi, reward, goal mask) for the kernels."""
    indptr = np.zeros(imc.num_states + 1, dtype=np.int64)
    for s, row in enumerate(imc.rows):
        indptr[s + 1] = indptr[s] + len(row)
    nnz = int(indptr[-1])
    indices = np.zeros(nnz, dtype=np.int64)
    lo = np.zeros(nnz, dtype=np.float64)
    hi = np.zeros(nnz, dtype=np.float64)
    pos = 0
    for row in imc.rows:
        for succ, iv in row:
            indices[pos] = succ
            lo[pos] = iv.lower
            hi[pos] = iv.upper
            pos += 1
    reward = np.asarray(imc.rewards, dtype=np.float64)
    goal = np.zeros(imc.num_states, dtype=np.uint8)
    for g in imc.goal:
        goal[g] = 1
    return indptr, indices, lo, hi, reward, goal


def _check_no_dead_ends(imc: IntervalMC) -> None:
    # Backward reachability to the goal over the support graph.  Graph
    # preservation makes the support instantiation-independent.
    preds: list[list[int]] = [[] for _ in range(imc.num_states)]
    for s, row in enumerate(imc.rows):
        for succ, iv in row:
            if iv.upper > 0.0:
                preds[succ].append(s)
    reached = [False] * imc.num_states
    frontier = [g for g in imc.goal]
    for g in frontier:
        reached[g] = True
    while frontier:
        t = frontier.pop()
        for p in preds[t]:
            if not reached[p]:
                reached[p] = True
                frontier.append(p)
    for s, ok in enumerate(reached):
        if not ok:
            raise ValueError(
                f"dead end: state {s} cannot reach the goal under any instantiation"
            )


def robust_value_iteration(
    imc: IntervalMC,
    spec: SpecThreshold,
    tol: float = 1e-9,
    max_iters: int = 10**6,
) -> RobustResult:
    """Adversarial expected reward to the goal, per state.

    For maximize-reward requirements nature minimizes; for minimize-cost it
    maximizes.  Values start at zero and increase monotonically to the
    fixpoint of v(s) = R(s) + opt_u u . v; iteration stops when the sup-norm
    residual drops below ``tol``.
    """
    _check_no_dead_ends(imc)
    minimize = spec.direction == MAXIMIZE
    indptr, indices, lo, hi, reward, goal = pack_imc(imc)
    max_row = int(max((indptr[1:] - indptr[:-1]).max(), 1)) if imc.num_states else 1
    scratch = np.zeros(max_row, dtype=np.int64)
    v = np.zeros(imc.num_states, dtype=np.float64)
    v_next = np.zeros_like(v)
    iterations = 0
    residual = math.inf
    while iterations < max_iters:
        residual = _kern.vi_sweep(
            indptr, indices, lo, hi, reward, goal, v, v_next, minimize, scratch
        )
        v, v_next = v_next, v
        iterations += 1
        if residual < tol:
            break
    else:
        raise RuntimeError(
            f"value iteration did not converge in {max_iters} sweeps "
            f"(residual {residual:.3e})"
        )
    probs = np.zeros(len(indices), dtype=np.float64)
    _kern.extremal_rows(indptr, indices, lo, hi, v, minimize, scratch, probs)
    witness = tuple(
        tuple(
            (int(indices[i]), float(probs[i]))
            for i in range(int(indptr[s]), int(indptr[s + 1]))
        )
        for s in range(imc.num_states)
    )
    return RobustResult(
        values=v,
        beta=float(v[imc.initial]),
        iterations=iterations,
        residual=float(residual),
        witness=witness,
    )


def exact_point_values(imc: IntervalMC) -> np.ndarray:
    """Expected reward to goal of a point chain by direct linear solve."""
    n = imc.num_states
    P = np.zeros((n, n), dtype=np.float64)
    R = np.zeros(n, dtype=np.float64)
    for s, row in enumerate(imc.rows):
        for succ, iv in row:
            if not iv.is_point():
                raise ValueError(f"row of state {s} is not point-valued")
            P[s, succ] = iv.lower
        R[s] = imc.rewards[s]
    free = sorted(set(range(n)) - imc.goal)
    if not free:
        return np.zeros(n)
    idx = {s: i for i, s in enumerate(free)}
    A = np.eye(len(free)) - P[np.ix_(free, free)]
    v_free = np.linalg.solve(A, R[free])
    v = np.zeros(n)
    for s, i in idx.items():
        v[s] = v_free[i]
    return v


def _row_vertices(row: tuple[tuple[int, Interval], ...]) -> list[tuple[float, ...]]:
    """All vertices of {lo <= u <= hi, sum u = 1}: at most one fractional entry."""
    m = len(row)
    seen: set[tuple[float, ...]] = set()
    out: list[tuple[float, ...]] = []
    for frac in range(-1, m):
        others = [i for i in range(m) if i != frac]
        for picks in itertools.product((0, 1), repeat=len(others)):
            u = [0.0] * m
            total = 0.0
            for i, up in zip(others, picks):
                u[i] = row[i][1].upper if up else row[i][1].lower
                total += u[i]
            if frac < 0:
                if abs(total - 1.0) > 1e-12:
                    continue
            else:
                rest = 1.0 - total
                iv = row[frac][1]
                if rest < iv.lower - 1e-12 or rest > iv.upper + 1e-12:
                    continue
                u[frac] = min(max(rest, iv.lower), iv.upper)
            key = tuple(round(x, 12) for x in u)
            if key not in seen:
                seen.add(key)
                out.append(tuple(u))
    return out


def brute_force_robust_value(
    model: UPomdp, policy: Policy, spec: SpecThreshold, max_combinations: int = 2_000_000
) -> float:
    """Exact robust value by enumerating row-polytope vertices of the induced chain.

    Exponential; guarded to chains with at most 12 uncertain entries.  The
    adversary's optimum is attained at a per-row vertex, so scanning all
    vertex combinations and solving each point chain exactly brackets the
    robust value.
    """
    imc = induce_imc(model, policy)
    uncertain = sum(
        1 for row in imc.rows for _, iv in row if not iv.is_point()
    )
    if uncertain > 12:
        raise ValueError(
            f"brute force guarded to <= 12 uncertain transitions, found {uncertain}"
        )
    per_state: list[list[tuple[float, ...]]] = []
    combos = 1
    for s, row in enumerate(imc.rows):
        if s in imc.goal or all(iv.is_point() for _, iv in row):
            per_state.append([tuple(iv.lower for _, iv in row)])
        else:
            verts = _row_vertices(row)
            if not verts:
                raise ValueError(f"empty row polytope at state {s}")
            per_state.append(verts)
        combos *= len(per_state[-1])
        if combos > max_combinations:
            raise ValueError("vertex combination count exceeds the guard")

    n = imc.num_states
    best = None
    minimize = spec.direction == MAXIMIZE
    for assignment in itertools.product(*per_state):
        P = np.zeros((n, n))
        for s, (row, probs) in enumerate(zip(imc.rows, assignment)):
            for (succ, _), p in zip(row, probs):
                P[s, succ] = p
        free = sorted(set(range(n)) - imc.goal)
        A = np.eye(len(free)) - P[np.ix_(free, free)]
        R = np.array([imc.rewards[s] for s in free])
        v_free = np.linalg.solve(A, R)
        if imc.initial in imc.goal:
            value = 0.0
        else:
            value = float(v_free[free.index(imc.initial)])
        if best is None:
            best = value
        elif minimize:
            best = min(best, value)
        else:
            best = max(best, value)
    assert best is not None
    return best


def _simplex_grid(n_actions: int, resolution: int):
    """Compositions of ``resolution`` into ``n_actions`` parts, as floored
    strictly positive distributions."""
    for combo in itertools.combinations(
        range(resolution + n_actions - 1), n_actions - 1
    ):
        counts = []
        prev = -1
        for c in combo:
            counts.append(c - prev - 1)
            prev = c
        counts.append(resolution + n_actions - 2 - prev)
        probs = [c / resolution for c in counts]
        floored = [max(p, 1e-9) for p in probs]
        total = sum(floored)
        yield tuple(p / total for p in floored)


def grid_search_policy(
    model: UPomdp,
    spec: SpecThreshold,
    resolution: int = 20,
    tol: float = 1e-9,
) -> tuple[Policy, float]:
    """Exhaustive policy search on a simplex grid; tiny instances only.

    Guarded to at most 3 observations carrying a choice, at most 3 actions
    per observation, and resolution <= 20.  Returns the best grid policy and
    its robust value.
    """
    if resolution > 20 or resolution < 1:
        raise ValueError("resolution must be in 1..20")
    by_obs = sorted(model.states_with_obs().items())
    choice_obs = [
        (z, model.avail[states[0]]) for z, states in by_obs if len(model.avail[states[0]]) > 1
    ]
    if len(choice_obs) > 3:
        raise ValueError("grid search guarded to <= 3 observations with choices")
    for _, acts in choice_obs:
        if len(acts) > 3:
            raise ValueError("grid search guarded to <= 3 actions per observation")

    fixed_rows: dict[int, tuple[tuple[int, float], ...]] = {}
    for z, states in by_obs:
        acts = model.avail[states[0]]
        if len(acts) == 1:
            fixed_rows[z] = ((acts[0], 1.0),)

    grids = [list(_simplex_grid(len(acts), resolution)) for _, acts in choice_obs]
    best_policy = None
    best_value = None
    minimize_nature = spec.direction == MAXIMIZE
    for point in itertools.product(*grids) if grids else [()]:
        rows = dict(fixed_rows)
        for (z, acts), probs in zip(choice_obs, point):
            rows[z] = tuple(zip(acts, probs))
        policy = Policy(rows)
        res = robust_value_iteration(
            induce_imc(model, policy, check=False), spec, tol=tol
        )
        if best_value is None:
            better = True
        elif minimize_nature:
            better = res.beta > best_value
        else:
            better = res.beta < best_value
        if better:
            best_value = res.beta
            best_policy = policy
    assert best_policy is not None and best_value is not None
    return best_policy, best_value
