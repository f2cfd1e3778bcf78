"""Policy synthesis by sequential convex programming.

The policy constraints are bilinear: a state's value bound multiplies branch
probabilities by successor values.  Each product is replaced by its affine
expansion around the current iterate (``linearize_h``), the trust region
keeps the LP honest near the expansion point, and penalty variables on the
policy rows and the threshold row keep it feasible far from it.  Every
candidate policy is re-verified exactly by robust value iteration on the
induced interval chain; a candidate is only accepted, and the trust region
only widened, when the verified value improves.

The solver works on the memory product of the input model (memoryless
policies on the product are finite-memory controllers for the source) in
binary simple form, where every bilinear row has exactly two branches and
every uncertainty row is linear through its dualization.

Two chains are checked per iterate: the product chain under the candidate
controller gives the reported value (policy mixing folds into the interval
rows there, which is the conservative reading), while the simple-form chain
gives per-state values used as the next expansion point.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .dualize import DualSystem, dual_constraints
from .lp import LinearProgram, solve_lp
from .model import (
    MAXIMIZE,
    Policy,
    SpecThreshold,
    UPomdp,
    induce_imc,
    uniform_policy,
)
from .robustcheck import RobustResult, robust_value_iteration
from .transform import (
    Fsc,
    MemoryProduct,
    SimpleForm,
    memory_product,
    product_policy_to_fsc,
    simple_policy_to_source,
    source_policy_to_simple,
    to_simple,
)

__all__ = [
    "ScpConfig",
    "TraceRow",
    "ScpTrace",
    "ScpVars",
    "LinearizationPoint",
    "LinearizedProduct",
    "ScpResult",
    "linearize_h",
    "build_scp_lp",
    "scp_solve",
]


@dataclass(frozen=True)
class ScpConfig:
    tau: float = 1e4  # penalty weight
    delta0: float = 1.5  # initial trust-region growth factor
    gamma: float = 1.5  # trust-region expand/shrink factor
    omega: float = 1e-4  # stop when an accepted step improves by less
    max_iters: int = 200
    trust_floor: float = 1e-6  # below this an anchor's lower bound drops to 0
    sigma_floor: float = 1e-8  # extracted branch probabilities at least this
    vi_tol: float = 1e-9
    lp_backend: str = "auto"


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    time_s: float
    beta: float
    delta: float
    accepted: bool
    lp_obj: float | None
    penalty_sum: float | None
    lp_status: str


@dataclass
class ScpTrace:
    rows: list[TraceRow] = field(default_factory=list)

    HEADER = "iter,time_s,beta,delta,accepted,lp_obj,penalty_sum,lp_status"

    def to_csv(self) -> str:
        lines = [self.HEADER]
        for r in self.rows:
            lines.append(
                ",".join(
                    (
                        str(r.iteration),
                        repr(r.time_s),
                        repr(r.beta),
                        repr(r.delta),
                        str(int(r.accepted)),
                        "" if r.lp_obj is None else repr(r.lp_obj),
                        "" if r.penalty_sum is None else repr(r.penalty_sum),
                        r.lp_status,
                    )
                )
            )
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class LinearizedProduct:
    """Affine expansion of d * sigma * value around (sigma_hat, value_hat)."""

    weight: float
    sigma_hat: float
    value_hat: float

    @property
    def coef_sigma(self) -> float:
        return self.weight * self.value_hat

    @property
    def coef_value(self) -> float:
        return self.weight * self.sigma_hat

    @property
    def constant(self) -> float:
        return -self.weight * self.sigma_hat * self.value_hat

    def exact(self, sigma: float, value: float) -> float:
        return self.weight * sigma * value

    def affine(self, sigma: float, value: float) -> float:
        return self.coef_sigma * sigma + self.coef_value * value + self.constant

    def gap(self, sigma: float, value: float) -> float:
        return self.weight * (sigma - self.sigma_hat) * (value - self.value_hat)


def linearize_h(weight: float, sigma_hat: float, value_hat: float) -> LinearizedProduct:
    """Expansion of the bilinear term; exact at the expansion point, and the
    residual factors as weight * (sigma - sigma_hat) * (value - value_hat)."""
    return LinearizedProduct(weight=weight, sigma_hat=sigma_hat, value_hat=value_hat)


@dataclass(frozen=True)
class LinearizationPoint:
    """Current iterate: branch probabilities keyed by (observation, branch)
    plus per-state value anchors for the simple-form states."""

    sigma: dict[tuple[int, int], float]
    values: np.ndarray


@dataclass(frozen=True)
class ScpVars:
    r: tuple[int, ...]
    sigma: dict[tuple[int, int], int]
    k: dict[int, int]
    k_spec: int


@dataclass(eq=False)
class ScpResult:
    satisfied: bool
    beta: float
    policy: Policy  # memoryless policy on the product model
    fsc: Fsc
    verification: RobustResult  # robust check of the product chain
    values: np.ndarray  # simple-form state values of the best iterate
    trace: ScpTrace
    product: MemoryProduct
    form: SimpleForm
    iterations: int
    stop_reason: str


def _trust_bounds(anchor: float, dprime: float, floor: float) -> tuple[float, float]:
    lo = anchor / dprime if anchor >= floor else 0.0
    hi = max(anchor, floor) * dprime
    return lo, hi


def _choice_obs(form: SimpleForm) -> tuple[int, ...]:
    out = []
    for _, splits in sorted(form.obs_splits.items()):
        out.extend(obs_id for obs_id, _, _ in splits)
    return tuple(sorted(out))


def _sigma_to_policy(form: SimpleForm, sigma: dict[tuple[int, int], float]) -> Policy:
    rows: dict[int, tuple[tuple[int, float], ...]] = {}
    for zz in _choice_obs(form):
        rows[zz] = ((0, sigma[(zz, 0)]), (1, sigma[(zz, 1)]))
    for (_, _), zz in form.leaf_obs.items():
        rows[zz] = ((0, 1.0),)
    return Policy(rows)


def _policy_to_sigma(form: SimpleForm, policy: Policy) -> dict[tuple[int, int], float]:
    sigma: dict[tuple[int, int], float] = {}
    for zz in _choice_obs(form):
        for branch, p in policy.rows[zz]:
            sigma[(zz, branch)] = p
    return sigma


def build_scp_lp(
    form: SimpleForm,
    dual: DualSystem,
    spec: SpecThreshold,
    point: LinearizationPoint,
    delta: float,
    config: ScpConfig = ScpConfig(),
) -> tuple[LinearProgram, ScpVars]:
    """One convexified policy LP at the given expansion point.

    Maximizing specs bound each value from above and relax with -k; for
    minimizing specs all senses flip.  Penalties sit on the choice rows and
    the threshold row only; dualized uncertainty rows are exact.
    """
    model = form.simple
    maximize = spec.direction == MAXIMIZE
    dprime = delta + 1.0
    lp = LinearProgram(sense="max" if maximize else "min", name="scp_iterate")

    r_idx: list[int] = []
    for s in range(model.num_states):
        if s in model.goal:
            r_idx.append(lp.add_var(f"r{s}", lb=0.0, ub=0.0))
        else:
            lo, hi = _trust_bounds(float(point.values[s]), dprime, config.trust_floor)
            r_idx.append(lp.add_var(f"r{s}", lb=lo, ub=hi))

    sigma_idx: dict[tuple[int, int], int] = {}
    for zz in _choice_obs(form):
        for branch in (0, 1):
            anchor = point.sigma[(zz, branch)]
            lo, hi = _trust_bounds(anchor, dprime, config.trust_floor)
            sigma_idx[(zz, branch)] = lp.add_var(
                f"sg{zz}_{branch}", lb=min(lo, 1.0), ub=min(hi, 1.0)
            )

    k_idx: dict[int, int] = {}
    for s in form.action_states():
        k_idx[s] = lp.add_var(f"k{s}", lb=0.0)
    k_spec = lp.add_var("kspec", lb=0.0)

    choice_sense = "<=" if maximize else ">="
    k_sign = -1.0 if maximize else 1.0
    for s in form.action_states():
        zz = model.obs[s]
        coeffs: dict[int, float] = {r_idx[s]: 1.0, k_idx[s]: k_sign}
        rhs = 0.0
        for branch in (0, 1):
            child = model.trans[(s, branch)][0][0]
            lin = linearize_h(
                1.0, point.sigma[(zz, branch)], float(point.values[child])
            )
            coeffs[r_idx[child]] = coeffs.get(r_idx[child], 0.0) - lin.coef_value
            sj = sigma_idx[(zz, branch)]
            coeffs[sj] = coeffs.get(sj, 0.0) - lin.coef_sigma
            rhs += lin.constant
        lp.add_row(f"choice{s}", coeffs, choice_sense, rhs)

    mu_sign = 1.0 if maximize else -1.0
    for block in dual.blocks:
        mu = [
            lp.add_var(f"mu{block.state}_{i}", lb=0.0)
            for i in range(block.num_dual_vars())
        ]
        bound: dict[int, float] = {r_idx[block.state]: 1.0}
        for i in range(block.num_dual_vars()):
            if block.g[i] != 0.0:
                bound[mu[i]] = mu_sign * block.g[i]
        lp.add_row(
            f"bound{block.state}", bound, "<=" if maximize else ">=", block.reward
        )
        for j, succ in enumerate(block.successors):
            eq: dict[int, float] = {}
            for i in range(block.num_dual_vars()):
                if block.C[i, j] != 0.0:
                    eq[mu[i]] = eq.get(mu[i], 0.0) + block.C[i, j]
            eq[r_idx[succ]] = eq.get(r_idx[succ], 0.0) + (-1.0 if maximize else 1.0)
            lp.add_row(f"flow{block.state}_{succ}", eq, "==", 0.0)

    for zz in _choice_obs(form):
        lp.add_row(
            f"norm{zz}",
            {sigma_idx[(zz, 0)]: 1.0, sigma_idx[(zz, 1)]: 1.0},
            "==",
            1.0,
        )

    init = r_idx[model.initial]
    if maximize:
        lp.add_row("spec", {init: 1.0, k_spec: 1.0}, ">=", spec.kappa)
    else:
        lp.add_row("spec", {init: 1.0, k_spec: -1.0}, "<=", spec.kappa)

    obj = {init: 1.0, k_spec: -config.tau if maximize else config.tau}
    for s, kj in k_idx.items():
        obj[kj] = -config.tau if maximize else config.tau
    lp.set_objective(obj)

    return lp, ScpVars(
        r=tuple(r_idx), sigma=sigma_idx, k=k_idx, k_spec=k_spec
    )


def _extract_sigma(
    form: SimpleForm, sol_x: np.ndarray, svars: ScpVars, floor: float
) -> dict[tuple[int, int], float]:
    sigma: dict[tuple[int, int], float] = {}
    for zz in _choice_obs(form):
        a = max(floor, float(sol_x[svars.sigma[(zz, 0)]]))
        b = max(floor, float(sol_x[svars.sigma[(zz, 1)]]))
        sigma[(zz, 0)] = a / (a + b)
        sigma[(zz, 1)] = b / (a + b)
    return sigma


def _verify(
    product: MemoryProduct,
    form: SimpleForm,
    spec: SpecThreshold,
    sigma: dict[tuple[int, int], float],
    tol: float,
):
    """Robust values of the candidate on both chains.

    Returns (product policy, product check, simple-form values).
    """
    simple_policy = _sigma_to_policy(form, sigma)
    product_policy = simple_policy_to_source(form, simple_policy)
    res_product = robust_value_iteration(
        induce_imc(product.product, product_policy), spec, tol=tol
    )
    res_simple = robust_value_iteration(
        induce_imc(form.simple, simple_policy), spec, tol=tol
    )
    return product_policy, res_product, res_simple


def scp_solve(
    model: UPomdp,
    spec: SpecThreshold,
    memory: int = 1,
    config: ScpConfig = ScpConfig(),
    init_policy: Policy | None = None,
) -> ScpResult:
    """Find a finite-memory observation-based policy meeting the threshold.

    ``init_policy`` is a policy on the memory product's observations; the
    default is uniform.  The result's policy and verification always refer
    to the product model; ``fsc`` is the same controller factored into
    action and memory-update distributions.
    """
    maximize = spec.direction == MAXIMIZE
    product = memory_product(model, memory)
    form = to_simple(product.product)
    dual = dual_constraints(form)

    if init_policy is None:
        init_policy = uniform_policy(product.product)
    simple_init = source_policy_to_simple(form, init_policy)
    sigma_hat = _policy_to_sigma(form, simple_init)

    trace = ScpTrace()
    t0 = time.perf_counter()

    def better(a: float, b: float) -> bool:
        return a > b if maximize else a < b

    best_policy, best_check, simple_check = _verify(
        product, form, spec, sigma_hat, config.vi_tol
    )
    beta = best_check.beta
    values_hat = np.asarray(simple_check.values, dtype=np.float64)
    best_values = values_hat
    delta = config.delta0
    trace.rows.append(
        TraceRow(0, time.perf_counter() - t0, beta, delta, True, None, None, "init")
    )

    def finish(reason: str, iterations: int) -> ScpResult:
        return ScpResult(
            satisfied=spec.satisfied_by(beta),
            beta=beta,
            policy=best_policy,
            fsc=product_policy_to_fsc(product, best_policy),
            verification=best_check,
            values=best_values,
            trace=trace,
            product=product,
            form=form,
            iterations=iterations,
            stop_reason=reason,
        )

    if spec.satisfied_by(beta):
        return finish("satisfied", 0)

    point = LinearizationPoint(sigma=sigma_hat, values=values_hat)
    for it in range(1, config.max_iters + 1):
        lp, svars = build_scp_lp(form, dual, spec, point, delta, config)
        sol = solve_lp(lp, backend=config.lp_backend)
        if not sol.ok:
            # One retry with a tighter region before giving up.
            delta = delta / config.gamma
            lp, svars = build_scp_lp(form, dual, spec, point, delta, config)
            sol = solve_lp(lp, backend=config.lp_backend)
            if not sol.ok:
                trace.rows.append(
                    TraceRow(
                        it,
                        time.perf_counter() - t0,
                        beta,
                        delta,
                        False,
                        None,
                        None,
                        sol.status,
                    )
                )
                return finish("lp-failure", it)

        penalty = float(sol.x[svars.k_spec]) + sum(
            float(sol.x[j]) for j in svars.k.values()
        )
        sigma_new = _extract_sigma(form, sol.x, svars, config.sigma_floor)
        cand_policy, cand_check, cand_simple = _verify(
            product, form, spec, sigma_new, config.vi_tol
        )
        cand_beta = cand_check.beta

        accepted = better(cand_beta, beta)
        trace.rows.append(
            TraceRow(
                it,
                time.perf_counter() - t0,
                cand_beta,
                delta,
                accepted,
                sol.objective,
                penalty,
                sol.status,
            )
        )

        if accepted:
            improvement = abs(cand_beta - beta)
            beta = cand_beta
            best_policy, best_check = cand_policy, cand_check
            best_values = np.asarray(cand_simple.values, dtype=np.float64)
            point = LinearizationPoint(sigma=sigma_new, values=best_values)
            delta = delta * config.gamma
            if spec.satisfied_by(beta):
                return finish("satisfied", it)
            if improvement < config.omega:
                return finish("converged", it)
        else:
            delta = delta / config.gamma
            if delta < 1e-9:
                return finish("trust-region-collapse", it)

    return finish("max-iters", config.max_iters)
