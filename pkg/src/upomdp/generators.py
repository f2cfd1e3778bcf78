"""Benchmark model generators.

Two families with interval-valued dynamics:

* ``gen_spacecraft``: pick orbits on a ring over a finite mission horizon,
  dodging debris cells.  Switching orbits succeeds with an uncertain
  probability and otherwise diverts to a neighbor of the intended orbit;
  crossing a debris cell is survived with an uncertain detection
  probability.  Reaching the end of the horizon pays reward 1, so the
  robust value is the worst-case survival probability.

* ``gen_aircraft``: relative-motion collision avoidance on a bounded grid.
  Own acceleration takes effect only when the pilot responds in time
  (uncertain probability); the intruder accelerates each axis up or down
  with an uncertain probability.  Leaving the grid is safe (reward 1),
  coming within one cell of the intruder in both axes is a collision.

Both emit models whose states sharing an observation share action sets, so
any further coarsening of the observation map stays well-formed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import Interval, UPomdp, validate

__all__ = [
    "SpacecraftParams",
    "AircraftParams",
    "gen_spacecraft",
    "gen_aircraft",
]


@dataclass(frozen=True)
class SpacecraftParams:
    orbit_count: int = 6
    horizon: int = 20
    switch_radius: int = 1
    switch_success: Interval = Interval(0.5, 0.95)
    detect_success: Interval = Interval(0.5, 0.95)
    objects: frozenset = frozenset()
    initial_orbit: int = 0


@dataclass(frozen=True)
class AircraftParams:
    position_size: int = 5
    speed_size: int = 3
    pilot_responsive: Interval = Interval(0.7, 0.9)
    intruder_accel: Interval = Interval(0.2, 0.8)
    sensor_quantization: int = 1


def _accumulate(entries: dict[int, list[float]], succ: int, lo: float, hi: float):
    if hi == 0.0:
        return
    cell = entries.setdefault(succ, [0.0, 0.0])
    cell[0] += lo
    cell[1] += hi


def _finish_row(entries: dict[int, list[float]], context: str):
    for succ, (lo, hi) in entries.items():
        if lo == 0.0 and hi > 0.0:
            raise ValueError(
                f"{context}: successor {succ} gets probability [0, {hi!r}], "
                f"which breaks graph preservation; tighten the interval "
                f"parameters away from 0 and 1"
            )
    # Merged outcomes can push an upper endpoint past 1; probabilities never
    # exceed 1, so capping loses no feasible distribution.
    return tuple(
        (succ, Interval(lo, min(hi, 1.0))) for succ, (lo, hi) in sorted(entries.items())
    )


def _switch_offsets(orbit_count: int, radius: int) -> tuple[int, ...]:
    # Relative encoding keeps the action set identical across orbits.
    offsets = [0]
    seen = {0}
    for d in range(1, radius + 1):
        for off in (d, -d):
            if off % orbit_count not in seen:
                seen.add(off % orbit_count)
                offsets.append(off)
    return tuple(offsets)


def gen_spacecraft(params: SpacecraftParams) -> UPomdp:
    n_orb, horizon = params.orbit_count, params.horizon
    if n_orb < 2:
        raise ValueError("orbit_count must be at least 2")
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if params.switch_radius < 0:
        raise ValueError("switch_radius must be nonnegative")
    if not 0 <= params.initial_orbit < n_orb:
        raise ValueError("initial_orbit out of range")
    for orbit, time in params.objects:
        if not (0 <= orbit < n_orb and 0 <= time < horizon):
            raise ValueError(f"object cell ({orbit}, {time}) out of range")

    offsets = _switch_offsets(n_orb, params.switch_radius)
    num_actions = len(offsets)
    ss, ds = params.switch_success, params.detect_success

    def core(orbit: int, time: int) -> int:
        return orbit * horizon + time

    sink = n_orb * horizon
    goal = sink + 1
    q = max(1, math.ceil(horizon / 40))
    cells = math.ceil(horizon / q)
    sink_obs = n_orb * cells
    goal_obs = sink_obs + 1

    obs: list[int] = [0] * (n_orb * horizon) + [sink_obs, goal_obs]
    avail: list[tuple[int, ...]] = [tuple(range(num_actions))] * (n_orb * horizon)
    avail += [(0,), (0,)]
    trans: dict[tuple[int, int], tuple[tuple[int, Interval], ...]] = {}
    reward: dict[tuple[int, int], float] = {}

    for orbit in range(n_orb):
        for time in range(horizon):
            s = core(orbit, time)
            obs[s] = orbit * cells + time // q
            if time == horizon - 1:
                # Mission complete: every action closes out with reward 1.
                for a in range(num_actions):
                    trans[(s, a)] = ((goal, Interval(1.0, 1.0)),)
                    reward[(s, a)] = 1.0
                continue
            land_time = time + 1
            for a, off in enumerate(offsets):
                landing: dict[int, list[float]] = {}
                if off == 0:
                    _accumulate(landing, orbit, 1.0, 1.0)
                else:
                    target = (orbit + off) % n_orb
                    _accumulate(landing, target, ss.lower, ss.upper)
                    div_lo, div_hi = (1.0 - ss.upper) / 2.0, (1.0 - ss.lower) / 2.0
                    for nb in ((target + 1) % n_orb, (target - 1) % n_orb):
                        _accumulate(landing, nb, div_lo, div_hi)
                entries: dict[int, list[float]] = {}
                for dest, (lo, hi) in landing.items():
                    if (dest, land_time) in params.objects:
                        _accumulate(
                            entries, core(dest, land_time), lo * ds.lower, hi * ds.upper
                        )
                        _accumulate(entries, sink, lo * (1.0 - ds.upper), hi * (1.0 - ds.lower))
                    else:
                        _accumulate(entries, core(dest, land_time), lo, hi)
                trans[(s, a)] = _finish_row(
                    entries, f"orbit {orbit} time {time} action {a}"
                )

    trans[(sink, 0)] = ((goal, Interval(1.0, 1.0)),)
    trans[(goal, 0)] = ((goal, Interval(1.0, 1.0)),)

    model = UPomdp(
        num_states=n_orb * horizon + 2,
        num_actions=num_actions,
        num_observations=sink_obs + 2,
        initial=core(params.initial_orbit, 0),
        goal=frozenset({goal}),
        obs=tuple(obs),
        avail=tuple(avail),
        trans=trans,
        reward=reward,
    )
    problems = validate(model)
    if problems:
        raise ValueError(f"generated spacecraft model is invalid: {problems[0]}")
    return model


def gen_aircraft(params: AircraftParams) -> UPomdp:
    pos, spd = params.position_size, params.speed_size
    if pos < 3 or pos % 2 == 0:
        raise ValueError("position_size must be odd and at least 3")
    if spd < 3 or spd % 2 == 0:
        raise ValueError("speed_size must be odd and at least 3")
    if params.sensor_quantization < 1:
        raise ValueError("sensor_quantization must be at least 1")
    pr, ia = params.pilot_responsive, params.intruder_accel
    for name, iv in (("pilot_responsive", pr), ("intruder_accel", ia)):
        if not 0.0 < iv.lower <= iv.upper < 1.0:
            raise ValueError(f"{name} must lie strictly inside (0, 1)")

    pc, vc = pos // 2, spd // 2

    def sid(ix: int, iy: int, ivx: int, ivy: int) -> int:
        return ((ix * pos + iy) * spd + ivx) * spd + ivy

    n_core = pos * pos * spd * spd
    done, coll, goal = n_core, n_core + 1, n_core + 2
    q = params.sensor_quantization
    pcells = math.ceil(pos / q)
    done_obs = pcells * pcells
    coll_obs, goal_obs = done_obs + 1, done_obs + 2

    # Factor outcomes: (responsive?, intruder x kick, intruder y kick).
    resp_cases = ((1, pr.lower, pr.upper), (0, 1.0 - pr.upper, 1.0 - pr.lower))
    kick_cases = ((1, ia.lower, ia.upper), (-1, 1.0 - ia.upper, 1.0 - ia.lower))

    obs: list[int] = [0] * n_core + [done_obs, coll_obs, goal_obs]
    avail: list[tuple[int, ...]] = [tuple(range(9))] * n_core + [(0,), (0,), (0,)]
    trans: dict[tuple[int, int], tuple[tuple[int, Interval], ...]] = {}

    for ix in range(pos):
        for iy in range(pos):
            for ivx in range(spd):
                for ivy in range(spd):
                    s = sid(ix, iy, ivx, ivy)
                    obs[s] = (ix // q) * pcells + iy // q
                    x, y = ix - pc, iy - pc
                    vx, vy = ivx - vc, ivy - vc
                    for ax in (-1, 0, 1):
                        for ay in (-1, 0, 1):
                            a = (ax + 1) * 3 + (ay + 1)
                            entries: dict[int, list[float]] = {}
                            for resp, r_lo, r_hi in resp_cases:
                                for kx, kx_lo, kx_hi in kick_cases:
                                    for ky, ky_lo, ky_hi in kick_cases:
                                        nvx = max(-vc, min(vc, vx - resp * ax + kx))
                                        nvy = max(-vc, min(vc, vy - resp * ay + ky))
                                        nx, ny = x + nvx, y + nvy
                                        if abs(nx) > pc or abs(ny) > pc:
                                            succ = done
                                        elif abs(nx) <= 1 and abs(ny) <= 1:
                                            succ = coll
                                        else:
                                            succ = sid(
                                                nx + pc, ny + pc, nvx + vc, nvy + vc
                                            )
                                        _accumulate(
                                            entries,
                                            succ,
                                            r_lo * kx_lo * ky_lo,
                                            r_hi * kx_hi * ky_hi,
                                        )
                            trans[(s, a)] = _finish_row(
                                entries, f"cell ({x}, {y}) speed ({vx}, {vy})"
                            )

    trans[(done, 0)] = ((goal, Interval(1.0, 1.0)),)
    trans[(coll, 0)] = ((goal, Interval(1.0, 1.0)),)
    trans[(goal, 0)] = ((goal, Interval(1.0, 1.0)),)
    reward = {(done, 0): 1.0}

    model = UPomdp(
        num_states=n_core + 3,
        num_actions=9,
        num_observations=done_obs + 3,
        initial=sid(0, 0, vc, vc),
        goal=frozenset({goal}),
        obs=tuple(obs),
        avail=tuple(avail),
        trans=trans,
        reward=reward,
    )
    problems = validate(model)
    if problems:
        raise ValueError(f"generated aircraft model is invalid: {problems[0]}")
    return model
