"""Model transformations: memory unfolding, binary simple form, observation
determinization.  Each returns a record that carries the id bookkeeping needed
to map policies back to the original model.

The simple form rewrites every state into a left-leaning balanced binary tree
of two-action "chooser" states (Dirac successors, zero reward) over one
single-action leaf per original action; the leaf carries the action's interval
row and reward.  Values are preserved under corresponding policies, and the
rewrite leaves every state with either a pure action choice or a pure
uncertainty row, never both.

The memory product folds a finite-state controller's memory into the state,
observation, and action spaces (memory update encoded in the action); a
memoryless policy on the product is exactly a finite-memory controller for
the source.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import Interval, Policy, UPomdp, validate

__all__ = [
    "MemoryProduct",
    "SimpleForm",
    "Fsc",
    "ObsDeterminized",
    "memory_product",
    "to_simple",
    "determinize_observations",
    "map_policy_back",
    "simple_policy_to_source",
    "source_policy_to_simple",
    "product_policy_to_fsc",
]


@dataclass(frozen=True)
class MemoryProduct:
    """Product of a model with k memory states.

    Ids are strided: state (s, n) -> s*k + n, observation (z, n) -> z*k + n,
    action (a, n') -> a*k + n'.  Goal states keep their single self-loop with
    the memory frozen, so goal absorption survives the product.
    """

    product: UPomdp
    memory_size: int
    state_map: dict[tuple[int, int], int]
    obs_map: dict[tuple[int, int], int]
    action_map: dict[tuple[int, int], int]


@dataclass(frozen=True)
class SimpleForm:
    """Binary rewrite of a model plus the bookkeeping to undo policies.

    ``part`` holds "action" or "uncertainty" per simple state; ``origin`` maps
    each simple state to (source state, tree position); ``roots`` gives each
    source state's tree root.  ``obs_splits`` lists, per source observation,
    the chooser observations with the source actions reachable through their
    left and right branches; ``leaf_obs`` locates each action's leaf
    observation.
    """

    simple: UPomdp
    part: tuple[str, ...]
    origin: tuple[tuple[int, str], ...]
    roots: tuple[int, ...]
    leaf_action: dict[int, int]
    obs_splits: dict[int, tuple[tuple[int, tuple[int, ...], tuple[int, ...]], ...]]
    leaf_obs: dict[tuple[int, int], int]

    def action_states(self) -> tuple[int, ...]:
        return tuple(i for i, kind in enumerate(self.part) if kind == "action")

    def uncertainty_states(self) -> tuple[int, ...]:
        return tuple(i for i, kind in enumerate(self.part) if kind == "uncertainty")


@dataclass(frozen=True)
class Fsc:
    """Finite-state controller: action choice and memory update per (memory,
    observation), both strictly positive distributions."""

    memory_size: int
    action_rows: dict[tuple[int, int], tuple[tuple[int, float], ...]]
    update_rows: dict[tuple[int, int, int], tuple[tuple[int, float], ...]]


@dataclass(frozen=True)
class ObsDeterminized:
    """Point-observation rewrite record: state copies keyed by (state, obs)."""

    model: UPomdp
    state_map: dict[tuple[int, int], int]
    pre_initial: int | None


def _tree_nodes(actions: tuple[int, ...]):
    """Preorder nodes of the left-leaning balanced tree over ``actions``.

    Yields (position, kind, payload): payload is (left, right) action tuples
    for internal nodes and the action id for leaves.
    """
    nodes: list[tuple[str, str, object]] = []

    def rec(pos: str, acts: tuple[int, ...]) -> None:
        if len(acts) == 1:
            nodes.append((pos, "leaf", acts[0]))
            return
        mid = (len(acts) + 1) // 2
        left, right = acts[:mid], acts[mid:]
        nodes.append((pos, "internal", (left, right)))
        rec(pos + "0", left)
        rec(pos + "1", right)

    rec("", tuple(actions))
    return nodes


def to_simple(model: UPomdp) -> SimpleForm:
    """Split every state into choosers plus one uncertainty leaf per action."""
    problems = validate(model)
    if problems:
        raise ValueError(f"to_simple requires a valid model: {problems[0]}")

    by_obs = model.states_with_obs()
    obs_of_z: dict[tuple[int, str], int] = {}
    obs_splits: dict[int, list[tuple[int, tuple[int, ...], tuple[int, ...]]]] = {}
    leaf_obs: dict[tuple[int, int], int] = {}
    next_obs = 0
    for z in sorted(by_obs):
        acts = model.avail[by_obs[z][0]]
        obs_splits[z] = []
        for pos, kind, payload in _tree_nodes(acts):
            obs_of_z[(z, pos)] = next_obs
            if kind == "internal":
                left, right = payload  # type: ignore[misc]
                obs_splits[z].append((next_obs, left, right))
            else:
                leaf_obs[(z, payload)] = next_obs  # type: ignore[index]
            next_obs += 1

    part: list[str] = []
    origin: list[tuple[int, str]] = []
    roots: list[int] = []
    leaf_action: dict[int, int] = {}
    state_obs: list[int] = []
    local_ids: list[dict[str, int]] = []
    next_state = 0
    for s in range(model.num_states):
        nodes = _tree_nodes(model.avail[s])
        ids: dict[str, int] = {}
        roots.append(next_state)
        for pos, kind, payload in nodes:
            ids[pos] = next_state
            part.append("action" if kind == "internal" else "uncertainty")
            origin.append((s, pos))
            state_obs.append(obs_of_z[(model.obs[s], pos)])
            if kind == "leaf":
                leaf_action[next_state] = payload  # type: ignore[assignment]
            next_state += 1
        local_ids.append(ids)

    any_internal = any(kind == "action" for kind in part)
    avail: list[tuple[int, ...]] = []
    trans: dict[tuple[int, int], tuple[tuple[int, Interval], ...]] = {}
    reward: dict[tuple[int, int], float] = {}
    for s in range(model.num_states):
        for pos, kind, payload in _tree_nodes(model.avail[s]):
            sid = local_ids[s][pos]
            if kind == "internal":
                avail.append((0, 1))
                trans[(sid, 0)] = ((local_ids[s][pos + "0"], Interval(1.0, 1.0)),)
                trans[(sid, 1)] = ((local_ids[s][pos + "1"], Interval(1.0, 1.0)),)
            else:
                a = payload  # type: ignore[assignment]
                avail.append((0,))
                trans[(sid, 0)] = tuple(
                    (roots[succ], iv) for succ, iv in model.trans[(s, a)]
                )
                r = model.reward_of(s, a)
                if r != 0.0:
                    reward[(sid, 0)] = r

    simple = UPomdp(
        num_states=next_state,
        num_actions=2 if any_internal else 1,
        num_observations=next_obs,
        initial=roots[model.initial],
        goal=frozenset(roots[g] for g in model.goal),
        obs=tuple(state_obs),
        avail=tuple(avail),
        trans=trans,
        reward=reward,
    )
    return SimpleForm(
        simple=simple,
        part=tuple(part),
        origin=tuple(origin),
        roots=tuple(roots),
        leaf_action=leaf_action,
        obs_splits={z: tuple(v) for z, v in obs_splits.items()},
        leaf_obs=leaf_obs,
    )


def memory_product(model: UPomdp, memory_size: int) -> MemoryProduct:
    """Fold ``memory_size`` controller states into the model."""
    if memory_size < 1:
        raise ValueError("memory_size must be >= 1")
    problems = validate(model)
    if problems:
        raise ValueError(f"memory_product requires a valid model: {problems[0]}")
    goal_obs = {model.obs[g] for g in model.goal}
    for s in range(model.num_states):
        if s not in model.goal and model.obs[s] in goal_obs:
            raise ValueError(
                f"observation {model.obs[s]} is shared by goal and non-goal "
                f"state {s}; the memory product needs goal-exclusive observations"
            )

    k = memory_size
    state_map = {
        (s, n): s * k + n for s in range(model.num_states) for n in range(k)
    }
    obs_map = {
        (z, n): z * k + n for z in range(model.num_observations) for n in range(k)
    }
    action_map = {
        (a, n): a * k + n for a in range(model.num_actions) for n in range(k)
    }

    obs: list[int] = []
    avail: list[tuple[int, ...]] = []
    trans: dict[tuple[int, int], tuple[tuple[int, Interval], ...]] = {}
    reward: dict[tuple[int, int], float] = {}
    for s in range(model.num_states):
        for n in range(k):
            ps = state_map[(s, n)]
            obs.append(obs_map[(model.obs[s], n)])
            if s in model.goal:
                a = model.avail[s][0]
                pa = action_map[(a, n)]
                avail.append((pa,))
                trans[(ps, pa)] = ((ps, Interval(1.0, 1.0)),)
                continue
            acts = tuple(
                action_map[(a, n2)] for a in model.avail[s] for n2 in range(k)
            )
            avail.append(acts)
            for a in model.avail[s]:
                r = model.reward_of(s, a)
                for n2 in range(k):
                    pa = action_map[(a, n2)]
                    trans[(ps, pa)] = tuple(
                        (state_map[(succ, n2)], iv)
                        for succ, iv in model.trans[(s, a)]
                    )
                    if r != 0.0:
                        reward[(ps, pa)] = r

    product = UPomdp(
        num_states=model.num_states * k,
        num_actions=model.num_actions * k,
        num_observations=model.num_observations * k,
        initial=state_map[(model.initial, 0)],
        goal=frozenset(state_map[(g, n)] for g in model.goal for n in range(k)),
        obs=tuple(obs),
        avail=tuple(avail),
        trans=trans,
        reward=reward,
    )
    return MemoryProduct(
        product=product,
        memory_size=k,
        state_map=state_map,
        obs_map=obs_map,
        action_map=action_map,
    )


def determinize_observations(
    model: UPomdp, obs_rows: dict[int, tuple[tuple[int, float], ...]]
) -> ObsDeterminized:
    """Rewrite stochastic (point-valued) observations into deterministic ones.

    State s splits into one copy per observation it can emit; transition mass
    into s is weighted by the emission probability, as point factors on the
    interval endpoints.  Interval-valued observation rows are not supported.
    A non-Dirac initial row adds a fresh pre-initial state.
    """
    for s, row in obs_rows.items():
        total = 0.0
        for z, p in row:
            if isinstance(p, Interval):
                raise ValueError(
                    "interval-valued observation functions are not supported"
                )
            if not 0.0 < p <= 1.0:
                raise ValueError(f"observation prob {p!r} at state {s} not in (0, 1]")
            if not 0 <= z < model.num_observations:
                raise ValueError(f"observation {z} out of range at state {s}")
            total += p
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"observation row of state {s} sums to {total!r}")
    for s in range(model.num_states):
        if s not in obs_rows:
            raise ValueError(f"no observation row for state {s}")

    emitting: dict[int, list[int]] = {}
    for s in range(model.num_states):
        for z, _ in obs_rows[s]:
            emitting.setdefault(z, []).append(s)
    for z, states in sorted(emitting.items()):
        ref = model.avail[states[0]]
        for s in states[1:]:
            if model.avail[s] != ref:
                raise ValueError(
                    f"states {states[0]} and {s} can both emit observation {z} "
                    f"but have different action sets"
                )

    pairs = sorted(
        (s, z) for s in range(model.num_states) for z, _ in obs_rows[s]
    )
    state_map = {pair: i for i, pair in enumerate(pairs)}

    obs: list[int] = []
    avail: list[tuple[int, ...]] = []
    trans: dict[tuple[int, int], tuple[tuple[int, Interval], ...]] = {}
    reward: dict[tuple[int, int], float] = {}
    for s, z in pairs:
        sid = state_map[(s, z)]
        obs.append(z)
        avail.append(model.avail[s])
        for a in model.avail[s]:
            if s in model.goal:
                trans[(sid, a)] = ((sid, Interval(1.0, 1.0)),)
                continue
            entries: list[tuple[int, Interval]] = []
            for succ, iv in model.trans[(s, a)]:
                for z2, q in obs_rows[succ]:
                    entries.append((state_map[(succ, z2)], iv.scaled(q)))
            trans[(sid, a)] = tuple(sorted(entries))
            r = model.reward_of(s, a)
            if r != 0.0:
                reward[(sid, a)] = r

    init_row = obs_rows[model.initial]
    pre_initial: int | None = None
    num_states = len(pairs)
    num_obs = model.num_observations
    if len(init_row) == 1:
        initial = state_map[(model.initial, init_row[0][0])]
    else:
        pre_initial = num_states
        num_states += 1
        obs.append(model.num_observations)
        num_obs += 1
        a0 = model.avail[model.initial][0]
        avail.append((a0,))
        trans[(pre_initial, a0)] = tuple(
            sorted(
                (state_map[(model.initial, z)], Interval(p, p)) for z, p in init_row
            )
        )
        initial = pre_initial

    out = UPomdp(
        num_states=num_states,
        num_actions=model.num_actions,
        num_observations=num_obs,
        initial=initial,
        goal=frozenset(
            state_map[(g, z)] for g in model.goal for z, _ in obs_rows[g]
        ),
        obs=tuple(obs),
        avail=tuple(avail),
        trans=trans,
        reward=reward,
    )
    return ObsDeterminized(model=out, state_map=state_map, pre_initial=pre_initial)


def source_policy_to_simple(form: SimpleForm, policy: Policy) -> Policy:
    """Forward policy mapping: branch probability = branch leaf mass ratio."""
    rows: dict[int, tuple[tuple[int, float], ...]] = {}
    for z, splits in sorted(form.obs_splits.items()):
        probs = dict(policy.rows[z])
        for obs_id, left, right in splits:
            lmass = sum(probs[a] for a in left)
            rmass = sum(probs[a] for a in right)
            total = lmass + rmass
            rows[obs_id] = ((0, lmass / total), (1, rmass / total))
    for (_, _), obs_id in sorted(form.leaf_obs.items(), key=lambda kv: kv[1]):
        rows[obs_id] = ((0, 1.0),)
    return Policy(rows)


def simple_policy_to_source(form: SimpleForm, policy: Policy) -> Policy:
    """Backward policy mapping: action probability = product along its path."""
    rows: dict[int, tuple[tuple[int, float], ...]] = {}
    for z, splits in sorted(form.obs_splits.items()):
        if not splits:
            continue
        acts = list(splits[0][1]) + list(splits[0][2])
        probs = {a: 1.0 for a in acts}
        for obs_id, left, right in splits:
            bl = policy.prob(obs_id, 0)
            br = policy.prob(obs_id, 1)
            for a in left:
                probs[a] *= bl
            for a in right:
                probs[a] *= br
        total = sum(probs.values())
        rows[z] = tuple((a, probs[a] / total) for a in acts)
    # Observations without splits are single-action in the source.
    for (z, a), _ in sorted(form.leaf_obs.items()):
        if z not in rows:
            rows[z] = ((a, 1.0),)
    return Policy(rows)


def product_policy_to_fsc(record: MemoryProduct, policy: Policy) -> Fsc:
    """Read a memoryless product policy as a finite-state controller."""
    k = record.memory_size
    model = record.product
    source_obs = len(set(z for z, _ in record.obs_map)) if record.obs_map else 0
    action_rows: dict[tuple[int, int], tuple[tuple[int, float], ...]] = {}
    update_rows: dict[tuple[int, int, int], tuple[tuple[int, float], ...]] = {}
    for z in range(source_obs):
        for n in range(k):
            pz = record.obs_map[(z, n)]
            if pz not in policy.rows:
                continue
            joint = dict(policy.rows[pz])
            by_action: dict[int, dict[int, float]] = {}
            for pa, p in joint.items():
                a, n2 = divmod(pa, k)
                by_action.setdefault(a, {})[n2] = by_action.get(a, {}).get(n2, 0.0) + p
            acts = sorted(by_action)
            marg = {a: sum(by_action[a].values()) for a in acts}
            action_rows[(n, z)] = tuple((a, marg[a]) for a in acts)
            for a in acts:
                updates = by_action[a]
                total = marg[a]
                update_rows[(n, z, a)] = tuple(
                    (n2, updates[n2] / total) for n2 in sorted(updates)
                )
    return Fsc(memory_size=k, action_rows=action_rows, update_rows=update_rows)


def map_policy_back(record, policy: Policy):
    """Undo a transformation on a policy computed for the transformed model."""
    if isinstance(record, SimpleForm):
        return simple_policy_to_source(record, policy)
    if isinstance(record, MemoryProduct):
        return product_policy_to_fsc(record, policy)
    raise TypeError(f"no policy mapping for record type {type(record).__name__}")
