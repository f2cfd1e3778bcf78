"""Plain-text model format: parse and canonical write.

A model file is line-oriented, LF-separated, with ``#`` starting a comment
that runs to end of line.  Directives appear in a fixed order:

    upomdp
    states N
    actions M
    observations K
    initial s
    goal s ...
    obs s z                 one line per state
    avail s a ...           omitted state: all actions available
    reward s a r            omitted pair: reward 0
    trans s a s' lo hi      one line per interval entry

The canonical writer emits sorted directives, explicit avail lines, only
nonzero rewards, and shortest round-trip float formatting, so parsing a
written file reproduces the model exactly.
"""

from __future__ import annotations

from .model import Interval, Policy, UPomdp, validate

__all__ = [
    "UpmError",
    "parse_model",
    "write_model",
    "parse_policy",
    "write_policy",
]

_ORDER = {
    "upomdp": 0,
    "states": 1,
    "actions": 2,
    "observations": 3,
    "initial": 4,
    "goal": 5,
    "obs": 6,
    "avail": 7,
    "reward": 8,
    "trans": 9,
}


class UpmError(ValueError):
    """Malformed model text; ``line`` is 1-based, 0 for file-level problems."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


def _int(tok: str, line: int, what: str) -> int:
    try:
        return int(tok, 10)
    except ValueError:
        raise UpmError(line, f"expected integer {what}, got {tok!r}") from None


def _float(tok: str, line: int, what: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise UpmError(line, f"expected number {what}, got {tok!r}") from None


def parse_model(text: str, check: bool = True) -> UPomdp:
    """Parse model text; with ``check`` the result must pass validation."""
    num_states = num_actions = num_obs = None
    initial = None
    goal: set[int] = set()
    obs: dict[int, int] = {}
    avail: dict[int, tuple[int, ...]] = {}
    reward: dict[tuple[int, int], float] = {}
    trans: dict[tuple[int, int], dict[int, Interval]] = {}
    seen_header = False
    last_order = -1

    for lineno, raw in enumerate(text.split("\n"), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        toks = body.split()
        key = toks[0]
        if key not in _ORDER:
            raise UpmError(lineno, f"unknown directive {key!r}")
        if not seen_header and key != "upomdp":
            raise UpmError(lineno, "file must start with the 'upomdp' directive")
        if _ORDER[key] < last_order:
            raise UpmError(lineno, f"{key!r} directive out of order")
        last_order = _ORDER[key]

        if key == "upomdp":
            if seen_header:
                raise UpmError(lineno, "duplicate 'upomdp' directive")
            if len(toks) != 1:
                raise UpmError(lineno, "'upomdp' takes no arguments")
            seen_header = True
        elif key in ("states", "actions", "observations"):
            if len(toks) != 2:
                raise UpmError(lineno, f"'{key}' takes one count")
            val = _int(toks[1], lineno, "count")
            if val < 1:
                raise UpmError(lineno, f"'{key}' count must be positive")
            if key == "states":
                if num_states is not None:
                    raise UpmError(lineno, "duplicate 'states' directive")
                num_states = val
            elif key == "actions":
                if num_actions is not None:
                    raise UpmError(lineno, "duplicate 'actions' directive")
                num_actions = val
            else:
                if num_obs is not None:
                    raise UpmError(lineno, "duplicate 'observations' directive")
                num_obs = val
        elif key == "initial":
            if len(toks) != 2:
                raise UpmError(lineno, "'initial' takes one state id")
            if initial is not None:
                raise UpmError(lineno, "duplicate 'initial' directive")
            initial = _int(toks[1], lineno, "state id")
        elif key == "goal":
            for tok in toks[1:]:
                g = _int(tok, lineno, "state id")
                if g in goal:
                    raise UpmError(lineno, f"duplicate goal state {g}")
                goal.add(g)
        elif key == "obs":
            if len(toks) != 3:
                raise UpmError(lineno, "'obs' takes a state id and an observation id")
            s = _int(toks[1], lineno, "state id")
            if s in obs:
                raise UpmError(lineno, f"duplicate observation for state {s}")
            obs[s] = _int(toks[2], lineno, "observation id")
        elif key == "avail":
            if len(toks) < 3:
                raise UpmError(lineno, "'avail' takes a state id and action ids")
            s = _int(toks[1], lineno, "state id")
            if s in avail:
                raise UpmError(lineno, f"duplicate 'avail' for state {s}")
            avail[s] = tuple(_int(t, lineno, "action id") for t in toks[2:])
        elif key == "reward":
            if len(toks) != 4:
                raise UpmError(lineno, "'reward' takes state, action, value")
            s = _int(toks[1], lineno, "state id")
            a = _int(toks[2], lineno, "action id")
            if (s, a) in reward:
                raise UpmError(lineno, f"duplicate reward for state {s} action {a}")
            reward[(s, a)] = _float(toks[3], lineno, "reward")
        else:  # trans
            if len(toks) != 6:
                raise UpmError(
                    lineno, "'trans' takes state, action, successor, lower, upper"
                )
            s = _int(toks[1], lineno, "state id")
            a = _int(toks[2], lineno, "action id")
            succ = _int(toks[3], lineno, "successor id")
            lo = _float(toks[4], lineno, "lower bound")
            hi = _float(toks[5], lineno, "upper bound")
            row = trans.setdefault((s, a), {})
            if succ in row:
                raise UpmError(
                    lineno, f"duplicate entry for state {s} action {a} successor {succ}"
                )
            row[succ] = Interval(lo, hi)

    if not seen_header:
        raise UpmError(0, "missing 'upomdp' directive")
    for name, val in (
        ("states", num_states),
        ("actions", num_actions),
        ("observations", num_obs),
    ):
        if val is None:
            raise UpmError(0, f"missing '{name}' directive")
    if initial is None:
        raise UpmError(0, "missing 'initial' directive")
    for s in range(num_states):
        if s not in obs:
            raise UpmError(0, f"state {s} has no observation")
    for label, keys in (("obs", obs), ("avail", avail)):
        for s in keys:
            if not 0 <= s < num_states:
                raise UpmError(0, f"'{label}' references unknown state {s}")

    model = UPomdp(
        num_states=num_states,
        num_actions=num_actions,
        num_observations=num_obs,
        initial=initial,
        goal=frozenset(goal),
        obs=tuple(obs[s] for s in range(num_states)),
        avail=tuple(
            avail.get(s, tuple(range(num_actions))) for s in range(num_states)
        ),
        trans={
            key: tuple(sorted(row.items())) for key, row in sorted(trans.items())
        },
        reward={key: r for key, r in sorted(reward.items()) if r != 0.0},
    )
    if check:
        problems = validate(model)
        if problems:
            listing = "; ".join(str(p) for p in problems[:5])
            raise UpmError(0, f"model fails validation: {listing}")
    return model


def write_model(model: UPomdp) -> str:
    """Canonical text form; ``parse_model(write_model(m)) == m``."""
    lines = [
        "upomdp",
        f"states {model.num_states}",
        f"actions {model.num_actions}",
        f"observations {model.num_observations}",
        f"initial {model.initial}",
    ]
    if model.goal:
        lines.append("goal " + " ".join(str(g) for g in sorted(model.goal)))
    for s in range(model.num_states):
        lines.append(f"obs {s} {model.obs[s]}")
    for s in range(model.num_states):
        lines.append(f"avail {s} " + " ".join(str(a) for a in model.avail[s]))
    for (s, a), r in sorted(model.reward.items()):
        if r != 0.0:
            lines.append(f"reward {s} {a} {r!r}")
    for (s, a), row in sorted(model.trans.items()):
        for succ, iv in row:
            lines.append(f"trans {s} {a} {succ} {iv.lower!r} {iv.upper!r}")
    return "\n".join(lines) + "\n"


def write_policy(policy: Policy, memory_size: int = 1) -> str:
    """Policy text: one ``policy z a:p ...`` line per observation.

    A controller with more than one memory state gets an ``fsc k`` header;
    its policy lines then use memory-product observation and action ids.
    """
    lines = []
    if memory_size > 1:
        lines.append(f"fsc {memory_size}")
    for z in sorted(policy.rows):
        body = " ".join(f"{a}:{p!r}" for a, p in policy.rows[z])
        lines.append(f"policy {z} {body}")
    return "\n".join(lines) + "\n"


def parse_policy(text: str) -> tuple[Policy, int]:
    """Parse policy text, returning the policy and its memory size."""
    memory_size = 1
    rows: dict[int, tuple[tuple[int, float], ...]] = {}
    seen_any = False
    for lineno, raw in enumerate(text.split("\n"), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        toks = body.split()
        if toks[0] == "fsc":
            if seen_any or memory_size != 1:
                raise UpmError(lineno, "'fsc' must be the first directive")
            if len(toks) != 2:
                raise UpmError(lineno, "'fsc' takes one memory size")
            memory_size = _int(toks[1], lineno, "memory size")
            if memory_size < 1:
                raise UpmError(lineno, "memory size must be positive")
        elif toks[0] == "policy":
            if len(toks) < 3:
                raise UpmError(lineno, "'policy' takes an observation and entries")
            seen_any = True
            z = _int(toks[1], lineno, "observation id")
            if z in rows:
                raise UpmError(lineno, f"duplicate policy row for observation {z}")
            entries = []
            for tok in toks[2:]:
                parts = tok.split(":")
                if len(parts) != 2:
                    raise UpmError(lineno, f"expected 'action:prob', got {tok!r}")
                entries.append(
                    (
                        _int(parts[0], lineno, "action id"),
                        _float(parts[1], lineno, "probability"),
                    )
                )
            rows[z] = tuple(entries)
        else:
            raise UpmError(lineno, f"unknown directive {toks[0]!r}")
    if not rows:
        raise UpmError(0, "policy file has no 'policy' lines")
    return Policy(rows), memory_size
