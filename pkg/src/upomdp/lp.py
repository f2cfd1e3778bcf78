"""Sparse linear programs with swappable solver backends.

The program container is solver-agnostic: named variables with box bounds,
named rows with <=, >=, or == senses, and a linear objective.  ``solve_lp``
dispatches to one of two backends behind the same contract:

* ``highs``: scipy's HiGHS interface, the default, robust at desk scale
  (around 1e5 sparse variables and rows);
* ``simplex``: a self-contained dense bounded-variable revised simplex kept
  as an independent reference implementation for small programs.

Solutions reported optimal are re-checked for primal feasibility (1e-7)
before being returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["LinearProgram", "LpSolution", "solve_lp", "write_lp_text"]

_INF = math.inf


@dataclass(eq=False)
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded" | "error"
    x: np.ndarray | None
    objective: float | None
    backend: str
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


@dataclass(eq=False)
class LinearProgram:
    """Incrementally built LP.  ``add_var`` returns the variable's index."""

    sense: str = "max"
    name: str = ""
    var_names: list[str] = field(default_factory=list)
    lb: list[float] = field(default_factory=list)
    ub: list[float] = field(default_factory=list)
    objective: dict[int, float] = field(default_factory=dict)
    constant: float = 0.0
    rows: list[tuple[str, list[tuple[int, float]], str, float]] = field(
        default_factory=list
    )

    def add_var(
        self, name: str, lb: float | None = 0.0, ub: float | None = None
    ) -> int:
        self.var_names.append(name)
        self.lb.append(-_INF if lb is None else lb)
        self.ub.append(_INF if ub is None else ub)
        return len(self.var_names) - 1

    def add_row(
        self,
        name: str,
        coeffs: dict[int, float] | list[tuple[int, float]],
        sense: str,
        rhs: float,
    ) -> None:
        if sense not in ("<=", ">=", "=="):
            raise ValueError(f"bad row sense {sense!r}")
        items = sorted(coeffs.items()) if isinstance(coeffs, dict) else list(coeffs)
        self.rows.append((name, items, sense, rhs))

    def set_objective(self, coeffs: dict[int, float]) -> None:
        self.objective = dict(coeffs)

    @property
    def num_vars(self) -> int:
        return len(self.var_names)

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    def set_bounds(self, var: int, lb: float | None, ub: float | None) -> None:
        self.lb[var] = -_INF if lb is None else lb
        self.ub[var] = _INF if ub is None else ub


def _feasibility_error(lp: LinearProgram, x: np.ndarray) -> float:
    worst = 0.0
    for j in range(lp.num_vars):
        worst = max(worst, lp.lb[j] - x[j], x[j] - lp.ub[j])
    for _, items, sense, rhs in lp.rows:
        lhs = sum(c * x[j] for j, c in items)
        if sense == "<=":
            worst = max(worst, lhs - rhs)
        elif sense == ">=":
            worst = max(worst, rhs - lhs)
        else:
            worst = max(worst, abs(lhs - rhs))
    return worst


def _objective_value(lp: LinearProgram, x: np.ndarray) -> float:
    return float(lp.constant + sum(c * x[j] for j, c in lp.objective.items()))


def solve_lp(lp: LinearProgram, backend: str = "auto") -> LpSolution:
    """Solve, returning status rather than raising on solver-side failure."""
    if backend == "auto":
        backend = "highs"
    if backend == "highs":
        sol = _solve_highs(lp)
    elif backend == "simplex":
        sol = _solve_simplex(lp)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    if sol.status == "optimal":
        err = _feasibility_error(lp, sol.x)
        if err > 1e-7:
            return LpSolution(
                status="error",
                x=sol.x,
                objective=sol.objective,
                backend=sol.backend,
                message=f"claimed optimal but infeasible by {err:.3e}",
            )
    return sol


def _solve_highs(lp: LinearProgram) -> LpSolution:
    import scipy.sparse as sp
    from scipy.optimize import linprog

    n = lp.num_vars
    sign = -1.0 if lp.sense == "max" else 1.0
    c = np.zeros(n)
    for j, coef in lp.objective.items():
        c[j] = sign * coef

    ub_rows: list[tuple[list[tuple[int, float]], float]] = []
    eq_rows: list[tuple[list[tuple[int, float]], float]] = []
    for _, items, sense, rhs in lp.rows:
        if sense == "<=":
            ub_rows.append((items, rhs))
        elif sense == ">=":
            ub_rows.append(([(j, -coef) for j, coef in items], -rhs))
        else:
            eq_rows.append((items, rhs))

    def build(rows):
        if not rows:
            return None, None
        data, ri, ci, rhs_vec = [], [], [], []
        for i, (items, rhs) in enumerate(rows):
            rhs_vec.append(rhs)
            for j, coef in items:
                ri.append(i)
                ci.append(j)
                data.append(coef)
        mat = sp.csr_matrix((data, (ri, ci)), shape=(len(rows), n))
        return mat, np.array(rhs_vec)

    A_ub, b_ub = build(ub_rows)
    A_eq, b_eq = build(eq_rows)
    bounds = [
        (None if lp.lb[j] == -_INF else lp.lb[j], None if lp.ub[j] == _INF else lp.ub[j])
        for j in range(n)
    ]
    res = linprog(
        c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs"
    )
    if res.status == 0:
        x = np.asarray(res.x)
        return LpSolution("optimal", x, _objective_value(lp, x), "highs")
    status = {2: "infeasible", 3: "unbounded"}.get(res.status, "error")
    return LpSolution(status, None, None, "highs", message=res.message)


# ---------------------------------------------------------------------------
# Reference backend: dense bounded-variable revised simplex, two phases.

_AT_LB, _AT_UB, _FREE = 0, 1, 2
_RC_TOL = 1e-9
_PIV_TOL = 1e-10


def _solve_simplex(lp: LinearProgram, max_iters: int = 20000) -> LpSolution:
    n = lp.num_vars
    m = lp.num_rows
    sign = -1.0 if lp.sense == "max" else 1.0

    # Equality form: structural vars, one slack per row, one artificial per row.
    total = n + m + m
    A = np.zeros((m, total))
    b = np.zeros(m)
    lo = np.zeros(total)
    hi = np.zeros(total)
    lo[:n] = lp.lb
    hi[:n] = lp.ub
    for i, (_, items, sense, rhs) in enumerate(lp.rows):
        for j, coef in items:
            A[i, j] += coef
        b[i] = rhs
        s = n + i
        A[i, s] = 1.0
        if sense == "<=":
            lo[s], hi[s] = 0.0, _INF
        elif sense == ">=":
            lo[s], hi[s] = -_INF, 0.0
        else:
            lo[s], hi[s] = 0.0, 0.0

    status = np.zeros(total, dtype=np.int64)
    x = np.zeros(total)
    for j in range(n + m):
        if lo[j] > -_INF:
            x[j], status[j] = lo[j], _AT_LB
        elif hi[j] < _INF:
            x[j], status[j] = hi[j], _AT_UB
        else:
            x[j], status[j] = 0.0, _FREE

    resid = b - A[:, : n + m] @ x[: n + m]
    basis = []
    for i in range(m):
        art = n + m + i
        A[i, art] = 1.0 if resid[i] >= 0.0 else -1.0
        lo[art], hi[art] = 0.0, _INF
        x[art] = abs(resid[i])
        basis.append(art)

    def run_phase(cost: np.ndarray, allow: np.ndarray) -> str:
        iters = 0
        while True:
            iters += 1
            if iters > max_iters:
                return "error"
            B = A[:, basis]
            try:
                Binv_b_part = np.linalg.solve(B, b - A @ np.where(np.isin(np.arange(total), basis), 0.0, x))
            except np.linalg.LinAlgError:
                return "error"
            for k, jb in enumerate(basis):
                x[jb] = Binv_b_part[k]
            try:
                y = np.linalg.solve(B.T, cost[basis])
            except np.linalg.LinAlgError:
                return "error"
            d = cost - A.T @ y
            entering = -1
            best = 0.0
            bland = iters > max_iters // 2
            for j in range(total):
                if j in basis or not allow[j]:
                    continue
                if status[j] == _AT_LB and d[j] < -_RC_TOL:
                    score = -d[j]
                elif status[j] == _AT_UB and d[j] > _RC_TOL:
                    score = d[j]
                elif status[j] == _FREE and abs(d[j]) > _RC_TOL:
                    score = abs(d[j])
                else:
                    continue
                if bland:
                    entering = j
                    break
                if score > best:
                    best = score
                    entering = j
            if entering < 0:
                return "optimal"

            if status[entering] == _AT_UB:
                direction = -1.0
            elif status[entering] == _AT_LB:
                direction = 1.0
            else:
                direction = 1.0 if d[entering] < 0 else -1.0
            try:
                w = np.linalg.solve(B, A[:, entering])
            except np.linalg.LinAlgError:
                return "error"

            limit = hi[entering] - lo[entering] if status[entering] != _FREE else _INF
            leaving = -1
            leave_to = _AT_LB
            for k, jb in enumerate(basis):
                delta = -direction * w[k]
                if delta > _PIV_TOL and hi[jb] < _INF:
                    t = (hi[jb] - x[jb]) / delta
                    if t < limit - 1e-12:
                        limit, leaving, leave_to = t, k, _AT_UB
                elif delta < -_PIV_TOL and lo[jb] > -_INF:
                    t = (lo[jb] - x[jb]) / delta
                    if t < limit - 1e-12:
                        limit, leaving, leave_to = t, k, _AT_LB
            if limit == _INF:
                return "unbounded"
            limit = max(limit, 0.0)

            x[entering] += direction * limit
            for k, jb in enumerate(basis):
                x[jb] -= direction * limit * w[k]
            if leaving < 0:
                # Bound flip: entering travels to its opposite bound.
                status[entering] = _AT_UB if direction > 0 else _AT_LB
            else:
                out = basis[leaving]
                status[out] = leave_to
                x[out] = hi[out] if leave_to == _AT_UB else lo[out]
                basis[leaving] = entering
                status[entering] = _FREE

    # Phase 1: drive artificials to zero.
    cost1 = np.zeros(total)
    cost1[n + m :] = 1.0
    allow1 = np.ones(total, dtype=bool)
    verdict = run_phase(cost1, allow1)
    if verdict != "optimal":
        return LpSolution("error" if verdict == "error" else verdict, None, None, "simplex",
                          message=f"phase 1 ended {verdict}")
    art_sum = float(x[n + m :].sum())
    if art_sum > 1e-7:
        return LpSolution("infeasible", None, None, "simplex",
                          message=f"phase 1 residual {art_sum:.3e}")

    # Phase 2: artificials pinned at zero, original objective.
    hi[n + m :] = 0.0
    for j in range(n + m, total):
        if j not in basis:
            status[j] = _AT_LB
            x[j] = 0.0
    cost2 = np.zeros(total)
    for j, coef in lp.objective.items():
        cost2[j] = sign * coef
    allow2 = np.ones(total, dtype=bool)
    allow2[n + m :] = False
    verdict = run_phase(cost2, allow2)
    if verdict == "optimal":
        xs = x[:n].copy()
        return LpSolution("optimal", xs, _objective_value(lp, xs), "simplex")
    if verdict == "unbounded":
        return LpSolution("unbounded", None, None, "simplex")
    return LpSolution("error", None, None, "simplex", message="phase 2 stalled")


def write_lp_text(lp: LinearProgram) -> str:
    """Human-readable LP listing in a conventional interchange layout."""

    def clean(name: str, fallback: str) -> str:
        out = "".join(ch if ch.isalnum() or ch in "_.[]" else "_" for ch in name)
        return out or fallback

    def term(j: int, coef: float, first: bool) -> str:
        mag = f"{abs(coef)!r} {clean(lp.var_names[j], f'x{j}')}"
        if first:
            return (f"- {mag}" if coef < 0 else mag)
        return (f"- {mag}" if coef < 0 else f"+ {mag}")

    lines = []
    if lp.name:
        lines.append(f"\\ {lp.name}")
    lines.append("Maximize" if lp.sense == "max" else "Minimize")
    obj_terms = [
        term(j, coef, i == 0)
        for i, (j, coef) in enumerate(sorted(lp.objective.items()))
        if coef != 0.0
    ]
    lines.append(" obj: " + (" ".join(obj_terms) if obj_terms else "0"))
    lines.append("Subject To")
    for idx, (name, items, sense, rhs) in enumerate(lp.rows):
        body = " ".join(
            term(j, coef, i == 0) for i, (j, coef) in enumerate(items) if coef != 0.0
        )
        op = {"<=": "<=", ">=": ">=", "==": "="}[sense]
        lines.append(f" {clean(name, f'r{idx}')}: {body or '0'} {op} {rhs!r}")
    lines.append("Bounds")
    for j in range(lp.num_vars):
        nm = clean(lp.var_names[j], f"x{j}")
        lo_j, hi_j = lp.lb[j], lp.ub[j]
        if lo_j == -_INF and hi_j == _INF:
            lines.append(f" {nm} free")
        elif hi_j == _INF:
            lines.append(f" {nm} >= {lo_j!r}")
        elif lo_j == -_INF:
            lines.append(f" {nm} <= {hi_j!r}")
        elif lo_j == hi_j:
            lines.append(f" {nm} = {lo_j!r}")
        else:
            lines.append(f" {lo_j!r} <= {nm} <= {hi_j!r}")
    lines.append("End")
    return "\n".join(lines) + "\n"
