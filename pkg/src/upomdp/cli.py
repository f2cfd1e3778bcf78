"""Command-line front end.

Subcommands: ``solve`` (policy synthesis), ``verify`` (robust check of a
given policy), ``generate`` (benchmark families), ``transform`` (model
rewrites).  Exit codes: 0 when the requested threshold is met, 2 when the
run finished but the best policy misses it, 1 on any error.

Runs that produce files can also write a JSON manifest capturing the
options and outcome; manifests and all other outputs are deterministic for
fixed inputs, except the wall-clock column of solver traces.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .generators import AircraftParams, SpacecraftParams, gen_aircraft, gen_spacecraft
from .ingest import UpmError, parse_model, parse_policy, write_model, write_policy
from .model import (
    MAXIMIZE,
    MINIMIZE,
    Interval,
    Policy,
    SpecThreshold,
    UPomdp,
    induce_imc,
    validate_policy,
)
from .robustcheck import robust_value_iteration
from .scp import ScpConfig, scp_solve
from .transform import memory_product, to_simple

__all__ = ["main"]


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are errors, not "best effort"
        self.print_usage(sys.stderr)
        raise CliError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="upomdp", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"upomdp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="synthesize a policy")
    solve.add_argument("--model", required=True, help="model file")
    solve.add_argument("--kappa", type=float, required=True, help="value threshold")
    solve.add_argument(
        "--direction", choices=[MAXIMIZE, MINIMIZE], default=MAXIMIZE
    )
    solve.add_argument("--memory", type=int, default=1, help="controller memory size")
    solve.add_argument("--restarts", type=int, default=1)
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--out-policy", help="write the best policy here")
    solve.add_argument("--out-trace", help="write the iteration trace CSV here")
    solve.add_argument("--out-manifest", help="write a JSON run manifest here")
    solve.add_argument("--tau", type=float, default=ScpConfig.tau)
    solve.add_argument("--delta0", type=float, default=ScpConfig.delta0)
    solve.add_argument("--gamma", type=float, default=ScpConfig.gamma)
    solve.add_argument("--omega", type=float, default=ScpConfig.omega)
    solve.add_argument("--max-iters", type=int, default=ScpConfig.max_iters)
    solve.add_argument(
        "--backend", choices=["auto", "highs", "simplex"], default="auto"
    )
    solve.set_defaults(func=_cmd_solve)

    verify = sub.add_parser("verify", help="robust-check a policy file")
    verify.add_argument("--model", required=True)
    verify.add_argument("--policy", required=True)
    verify.add_argument("--kappa", type=float, required=True)
    verify.add_argument(
        "--direction", choices=[MAXIMIZE, MINIMIZE], default=MAXIMIZE
    )
    verify.add_argument("--out-manifest")
    verify.set_defaults(func=_cmd_verify)

    gen = sub.add_parser("generate", help="write a benchmark model")
    gen.add_argument("--family", choices=["spacecraft", "aircraft"], required=True)
    gen.add_argument("--out", required=True)
    gen.add_argument("--orbits", type=int, default=SpacecraftParams.orbit_count)
    gen.add_argument("--horizon", type=int, default=SpacecraftParams.horizon)
    gen.add_argument(
        "--switch-radius", type=int, default=SpacecraftParams.switch_radius
    )
    gen.add_argument("--switch-lo", type=float, default=SpacecraftParams.switch_success.lower)
    gen.add_argument("--switch-hi", type=float, default=SpacecraftParams.switch_success.upper)
    gen.add_argument("--detect-lo", type=float, default=SpacecraftParams.detect_success.lower)
    gen.add_argument("--detect-hi", type=float, default=SpacecraftParams.detect_success.upper)
    gen.add_argument(
        "--objects", default="", help="debris cells as orbit:time,orbit:time,..."
    )
    gen.add_argument(
        "--initial-orbit", type=int, default=SpacecraftParams.initial_orbit
    )
    gen.add_argument(
        "--position-size", type=int, default=AircraftParams.position_size
    )
    gen.add_argument("--speed-size", type=int, default=AircraftParams.speed_size)
    gen.add_argument("--pilot-lo", type=float, default=AircraftParams.pilot_responsive.lower)
    gen.add_argument("--pilot-hi", type=float, default=AircraftParams.pilot_responsive.upper)
    gen.add_argument("--intruder-lo", type=float, default=AircraftParams.intruder_accel.lower)
    gen.add_argument("--intruder-hi", type=float, default=AircraftParams.intruder_accel.upper)
    gen.add_argument(
        "--sensor-quantization", type=int, default=AircraftParams.sensor_quantization
    )
    gen.set_defaults(func=_cmd_generate)

    trans = sub.add_parser("transform", help="rewrite a model")
    trans.add_argument("--model", required=True)
    trans.add_argument("--op", choices=["simple", "product"], required=True)
    trans.add_argument("--memory", type=int, default=2, help="for --op product")
    trans.add_argument("--out", required=True)
    trans.add_argument("--out-map", help="write the id bookkeeping JSON here")
    trans.set_defaults(func=_cmd_transform)

    return parser


def _load_model(path: str) -> UPomdp:
    return parse_model(Path(path).read_text(encoding="utf-8"))


def _write_text(path: str, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def _write_json(path: str, obj) -> None:
    _write_text(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _perturbed_uniform(model: UPomdp, seed: int) -> Policy:
    """Uniform policy with mild multiplicative noise, for restarts."""
    rng = np.random.default_rng(seed)
    rows: dict[int, tuple[tuple[int, float], ...]] = {}
    for z, states in sorted(model.states_with_obs().items()):
        acts = model.avail[states[0]]
        weights = 1.0 + 0.25 * rng.random(len(acts))
        weights /= weights.sum()
        rows[z] = tuple((a, float(p)) for a, p in zip(acts, weights))
    return Policy(rows)


def _cmd_solve(args) -> int:
    model = _load_model(args.model)
    spec = SpecThreshold(kappa=args.kappa, direction=args.direction)
    config = ScpConfig(
        tau=args.tau,
        delta0=args.delta0,
        gamma=args.gamma,
        omega=args.omega,
        max_iters=args.max_iters,
        lp_backend=args.backend,
    )
    if args.memory < 1:
        raise CliError("--memory must be at least 1")
    if args.restarts < 1:
        raise CliError("--restarts must be at least 1")

    product_model = memory_product(model, args.memory).product
    best = None
    best_restart = 0
    for restart in range(args.restarts):
        init = (
            None
            if restart == 0
            else _perturbed_uniform(product_model, args.seed + restart)
        )
        result = scp_solve(
            model, spec, memory=args.memory, config=config, init_policy=init
        )
        if best is None or (
            result.beta > best.beta
            if args.direction == MAXIMIZE
            else result.beta < best.beta
        ):
            best, best_restart = result, restart
        if best.satisfied:
            break

    verdict = "satisfied" if best.satisfied else "unsatisfied"
    print(
        f"solve: beta {best.beta!r} kappa {args.kappa!r} {verdict} "
        f"iterations {best.iterations} stop {best.stop_reason}"
    )
    if args.out_policy:
        _write_text(args.out_policy, write_policy(best.policy, args.memory))
    if args.out_trace:
        _write_text(args.out_trace, best.trace.to_csv())
    if args.out_manifest:
        _write_json(
            args.out_manifest,
            {
                "command": "solve",
                "package": f"upomdp {__version__}",
                "options": {
                    "model": args.model,
                    "kappa": args.kappa,
                    "direction": args.direction,
                    "memory": args.memory,
                    "restarts": args.restarts,
                    "seed": args.seed,
                    "tau": config.tau,
                    "delta0": config.delta0,
                    "gamma": config.gamma,
                    "omega": config.omega,
                    "max_iters": config.max_iters,
                    "backend": config.lp_backend,
                },
                "results": {
                    "beta": best.beta,
                    "satisfied": best.satisfied,
                    "iterations": best.iterations,
                    "stop_reason": best.stop_reason,
                    "restart": best_restart,
                },
                "outputs": {
                    "policy": args.out_policy,
                    "trace": args.out_trace,
                },
            },
        )
    return 0 if best.satisfied else 2


def _cmd_verify(args) -> int:
    model = _load_model(args.model)
    spec = SpecThreshold(kappa=args.kappa, direction=args.direction)
    policy, memory = parse_policy(Path(args.policy).read_text(encoding="utf-8"))
    target = model if memory == 1 else memory_product(model, memory).product
    problems = validate_policy(target, policy)
    if problems:
        raise CliError(f"policy does not fit the model: {problems[0]}")
    result = robust_value_iteration(induce_imc(target, policy), spec)
    satisfied = spec.satisfied_by(result.beta)
    verdict = "satisfied" if satisfied else "unsatisfied"
    print(f"verify: beta {result.beta!r} kappa {args.kappa!r} {verdict}")
    if args.out_manifest:
        _write_json(
            args.out_manifest,
            {
                "command": "verify",
                "package": f"upomdp {__version__}",
                "options": {
                    "model": args.model,
                    "policy": args.policy,
                    "kappa": args.kappa,
                    "direction": args.direction,
                    "memory": memory,
                },
                "results": {
                    "beta": result.beta,
                    "satisfied": satisfied,
                    "iterations": result.iterations,
                },
            },
        )
    return 0 if satisfied else 2


def _parse_objects(text: str) -> frozenset:
    cells = set()
    if text.strip():
        for chunk in text.split(","):
            parts = chunk.strip().split(":")
            if len(parts) != 2:
                raise CliError(f"bad object cell {chunk!r}, expected orbit:time")
            try:
                cells.add((int(parts[0]), int(parts[1])))
            except ValueError:
                raise CliError(f"bad object cell {chunk!r}") from None
    return frozenset(cells)


def _cmd_generate(args) -> int:
    if args.family == "spacecraft":
        model = gen_spacecraft(
            SpacecraftParams(
                orbit_count=args.orbits,
                horizon=args.horizon,
                switch_radius=args.switch_radius,
                switch_success=Interval(args.switch_lo, args.switch_hi),
                detect_success=Interval(args.detect_lo, args.detect_hi),
                objects=_parse_objects(args.objects),
                initial_orbit=args.initial_orbit,
            )
        )
    else:
        model = gen_aircraft(
            AircraftParams(
                position_size=args.position_size,
                speed_size=args.speed_size,
                pilot_responsive=Interval(args.pilot_lo, args.pilot_hi),
                intruder_accel=Interval(args.intruder_lo, args.intruder_hi),
                sensor_quantization=args.sensor_quantization,
            )
        )
    _write_text(args.out, write_model(model))
    print(
        f"generate: wrote {args.out} ({model.num_states} states, "
        f"{model.num_actions} actions, {model.num_observations} observations)"
    )
    return 0


def _cmd_transform(args) -> int:
    model = _load_model(args.model)
    if args.op == "simple":
        form = to_simple(model)
        _write_text(args.out, write_model(form.simple))
        if args.out_map:
            _write_json(
                args.out_map,
                {
                    "op": "simple",
                    "roots": list(form.roots),
                    "part": list(form.part),
                    "origin": [[s, pos] for s, pos in form.origin],
                    "leaf_action": {
                        str(sid): a for sid, a in sorted(form.leaf_action.items())
                    },
                },
            )
        out_model = form.simple
    else:
        if args.memory < 1:
            raise CliError("--memory must be at least 1")
        record = memory_product(model, args.memory)
        _write_text(args.out, write_model(record.product))
        if args.out_map:
            _write_json(
                args.out_map,
                {
                    "op": "product",
                    "memory": record.memory_size,
                    "state_map": {
                        f"{s}:{n}": i for (s, n), i in sorted(record.state_map.items())
                    },
                    "obs_map": {
                        f"{z}:{n}": i for (z, n), i in sorted(record.obs_map.items())
                    },
                    "action_map": {
                        f"{a}:{n}": i
                        for (a, n), i in sorted(record.action_map.items())
                    },
                },
            )
        out_model = record.product
    print(
        f"transform: wrote {args.out} ({out_model.num_states} states, "
        f"{out_model.num_observations} observations)"
    )
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (UpmError, ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
