"""Dual form of the per-state inner optimization over interval rows.

Each uncertainty state's feasible distributions form a polytope written as
``C u + g >= 0``: one row per lower bound (+e_i, g = -lo_i), one per upper
bound (-e_i, g = +hi_i), then the two simplex rows (sum >= 1 with g = -1,
sum <= 1 with g = +1).  LP duality turns the worst-case successor mix

    min { v . u : C u + g >= 0 }

into

    max { -g . mu : C^T mu = v, mu >= 0 },

which replaces the inner minimization by linear rows in the outer program:
the state's value r_s is bounded by r_s + g . mu_s <= R(s) together with
C^T mu_s = r_successors.  Each uncertainty state with n successors brings
2n + 2 dual variables.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lp import LinearProgram
from .model import Interval
from .transform import SimpleForm

__all__ = [
    "StatePolytope",
    "DualBlock",
    "DualSystem",
    "build_polytope",
    "dual_constraints",
    "value_bound_lp",
]


@dataclass(frozen=True, eq=False)
class StatePolytope:
    """Feasible-distribution polytope of one interval row, as C u + g >= 0."""

    successors: tuple[int, ...]
    C: np.ndarray
    g: np.ndarray

    def num_rows(self) -> int:
        return self.C.shape[0]

    def contains(self, u, tol: float = 1e-9) -> bool:
        u = np.asarray(u, dtype=np.float64)
        return bool(np.all(self.C @ u + self.g >= -tol))


@dataclass(frozen=True, eq=False)
class DualBlock:
    """Dual variables and data for one uncertainty state's inner problem."""

    state: int
    successors: tuple[int, ...]
    C: np.ndarray
    g: np.ndarray
    reward: float

    def num_dual_vars(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True)
class DualSystem:
    blocks: tuple[DualBlock, ...]

    def num_dual_vars(self) -> int:
        return sum(b.num_dual_vars() for b in self.blocks)


def build_polytope(row: tuple[tuple[int, Interval], ...]) -> StatePolytope:
    """Constraint matrix and offsets for one interval row's distributions."""
    if not row:
        raise ValueError("empty transition row has no distribution polytope")
    n = len(row)
    successors = tuple(succ for succ, _ in row)
    C = np.zeros((2 * n + 2, n), dtype=np.float64)
    g = np.zeros(2 * n + 2, dtype=np.float64)
    for i, (_, iv) in enumerate(row):
        C[i, i] = 1.0
        g[i] = -iv.lower
        C[n + i, i] = -1.0
        g[n + i] = iv.upper
    C[2 * n, :] = 1.0
    g[2 * n] = -1.0
    C[2 * n + 1, :] = -1.0
    g[2 * n + 1] = 1.0
    return StatePolytope(successors=successors, C=C, g=g)


def dual_constraints(form: SimpleForm) -> DualSystem:
    """One dual block per non-goal uncertainty state of a simple-form model."""
    model = form.simple
    blocks: list[DualBlock] = []
    for s in form.uncertainty_states():
        if s in model.goal:
            continue
        a = model.avail[s][0]
        poly = build_polytope(model.trans[(s, a)])
        blocks.append(
            DualBlock(
                state=s,
                successors=poly.successors,
                C=poly.C,
                g=poly.g,
                reward=model.reward_of(s, a),
            )
        )
    return DualSystem(blocks=tuple(blocks))


def value_bound_lp(
    poly: StatePolytope, reward: float, values
) -> LinearProgram:
    """LP whose optimum is ``reward`` plus the worst-case successor mix.

    Maximizes ``reward - g . mu`` over ``mu >= 0`` with ``C^T mu = values``;
    by strong duality the optimum equals ``reward + min_u values . u`` over
    the polytope.  Used to cross-check the dual rows against the direct
    greedy inner optimization.
    """
    values = np.asarray(values, dtype=np.float64)
    n = len(poly.successors)
    if values.shape != (n,):
        raise ValueError(f"expected {n} successor values, got {values.shape}")
    lp = LinearProgram(sense="max", name="value_bound")
    mu = [lp.add_var(f"mu{i}", lb=0.0) for i in range(poly.num_rows())]
    lp.set_objective({mu[i]: -poly.g[i] for i in range(poly.num_rows())})
    for j in range(n):
        coeffs = {
            mu[i]: poly.C[i, j]
            for i in range(poly.num_rows())
            if poly.C[i, j] != 0.0
        }
        lp.add_row(f"succ{poly.successors[j]}", coeffs, "==", float(values[j]))
    lp.constant = reward
    return lp
