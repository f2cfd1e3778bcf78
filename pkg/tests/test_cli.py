import json

import pytest

from upomdp import SpecThreshold, induce_imc, uniform_policy
from upomdp.cli import main
from upomdp.ingest import parse_model
from upomdp.robustcheck import robust_value_iteration

COST_MODEL = """\
upomdp
states 2
actions 2
observations 2
initial 0
goal 1
obs 0 0
obs 1 1
avail 0 0 1
avail 1 0
reward 0 0 1.0
reward 0 1 2.0
trans 0 0 0 0.2 0.8
trans 0 0 1 0.2 0.8
trans 0 1 1 1.0 1.0
trans 1 0 1 1.0 1.0
"""

GEN_ARGS = [
    "generate",
    "--family",
    "spacecraft",
    "--orbits",
    "4",
    "--horizon",
    "6",
    "--objects",
    "0:3",
]


def gen_model(tmp_path, name="model.upm"):
    path = tmp_path / name
    assert main(GEN_ARGS + ["--out", str(path)]) == 0
    return path


def test_version_flag():
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0


def test_generate_writes_parseable_model(tmp_path, capsys):
    path = gen_model(tmp_path)
    model = parse_model(path.read_text())
    assert model.num_states == 4 * 6 + 2
    out = capsys.readouterr().out
    assert "26 states" in out


def test_generate_aircraft_family(tmp_path):
    path = tmp_path / "air.upm"
    code = main(
        [
            "generate",
            "--family",
            "aircraft",
            "--position-size",
            "3",
            "--out",
            str(path),
        ]
    )
    assert code == 0
    model = parse_model(path.read_text())
    assert model.num_actions == 9


def test_solve_verify_round_trip(tmp_path, capsys):
    model_path = gen_model(tmp_path)
    policy_path = tmp_path / "policy.txt"
    solve_manifest = tmp_path / "solve.json"
    verify_manifest = tmp_path / "verify.json"
    code = main(
        [
            "solve",
            "--model",
            str(model_path),
            "--kappa",
            "0.4",
            "--out-policy",
            str(policy_path),
            "--out-manifest",
            str(solve_manifest),
        ]
    )
    assert code == 0
    assert "satisfied" in capsys.readouterr().out
    code = main(
        [
            "verify",
            "--model",
            str(model_path),
            "--policy",
            str(policy_path),
            "--kappa",
            "0.4",
            "--out-manifest",
            str(verify_manifest),
        ]
    )
    assert code == 0
    solved = json.loads(solve_manifest.read_text())
    verified = json.loads(verify_manifest.read_text())
    # the policy file reproduces the solver's final value
    assert abs(solved["results"]["beta"] - verified["results"]["beta"]) <= 1e-9
    assert solved["results"]["satisfied"] is True


def test_unsatisfied_exit_code(tmp_path):
    model_path = gen_model(tmp_path)
    policy_path = tmp_path / "policy.txt"
    code = main(
        [
            "solve",
            "--model",
            str(model_path),
            "--kappa",
            "0.999",
            "--max-iters",
            "5",
            "--out-policy",
            str(policy_path),
        ]
    )
    assert code == 2
    code = main(
        [
            "verify",
            "--model",
            str(model_path),
            "--policy",
            str(policy_path),
            "--kappa",
            "0.999",
        ]
    )
    assert code == 2


def test_error_exit_codes(tmp_path, capsys):
    # missing file
    assert main(["solve", "--model", str(tmp_path / "no.upm"), "--kappa", "0.5"]) == 1
    # malformed model text
    bad = tmp_path / "bad.upm"
    bad.write_text("upomdp\nstates zero\n")
    assert main(["solve", "--model", str(bad), "--kappa", "0.5"]) == 1
    # usage error: unknown flag
    assert main(["solve", "--model", str(bad), "--frobnicate"]) == 1
    # bad debris cell spec
    assert (
        main(
            [
                "generate",
                "--family",
                "spacecraft",
                "--objects",
                "3",
                "--out",
                str(tmp_path / "x.upm"),
            ]
        )
        == 1
    )
    # mismatched policy file
    model_path = gen_model(tmp_path)
    orphan = tmp_path / "orphan.txt"
    orphan.write_text("policy 0 0:1.0\n")
    assert (
        main(
            [
                "verify",
                "--model",
                str(model_path),
                "--policy",
                str(orphan),
                "--kappa",
                "0.5",
            ]
        )
        == 1
    )
    assert "error:" in capsys.readouterr().err


def test_solve_minimize_cost_direction(tmp_path):
    model_path = tmp_path / "cost.upm"
    model_path.write_text(COST_MODEL)
    code = main(
        [
            "solve",
            "--model",
            str(model_path),
            "--kappa",
            "2.2",
            "--direction",
            "minimize-cost",
        ]
    )
    assert code == 0


def test_restarts_recorded_in_manifest(tmp_path):
    model_path = gen_model(tmp_path)
    manifest = tmp_path / "m.json"
    code = main(
        [
            "solve",
            "--model",
            str(model_path),
            "--kappa",
            "0.999",
            "--max-iters",
            "3",
            "--restarts",
            "2",
            "--seed",
            "7",
            "--out-manifest",
            str(manifest),
        ]
    )
    assert code == 2
    data = json.loads(manifest.read_text())
    assert data["options"]["restarts"] == 2
    assert data["options"]["seed"] == 7
    assert data["results"]["restart"] in (0, 1)


def test_identical_runs_are_byte_identical(tmp_path):
    # same manifest of options: model, policy, trace and manifest files match
    # byte for byte, except the wall-clock column of the trace
    out = {}
    for tag in ("a", "b"):
        d = tmp_path / tag
        d.mkdir()
        model_path = d / "model.upm"
        assert main(GEN_ARGS + ["--out", str(model_path)]) == 0
        args = [
            "solve",
            "--model",
            str(model_path),
            "--kappa",
            "0.999",
            "--max-iters",
            "8",
            "--out-policy",
            str(d / "policy.txt"),
            "--out-trace",
            str(d / "trace.csv"),
        ]
        assert main(args) == 2
        out[tag] = d
    a, b = out["a"], out["b"]
    assert (a / "model.upm").read_bytes() == (b / "model.upm").read_bytes()
    assert (a / "policy.txt").read_bytes() == (b / "policy.txt").read_bytes()
    ta = (a / "trace.csv").read_text().strip().split("\n")
    tb = (b / "trace.csv").read_text().strip().split("\n")
    assert len(ta) == len(tb)
    for la, lb in zip(ta, tb):
        ca, cb = la.split(","), lb.split(",")
        del ca[1], cb[1]  # time_s differs between runs
        assert ca == cb


def test_transform_product_identity_is_value_equivalent(tmp_path):
    model_path = gen_model(tmp_path)
    product_path = tmp_path / "product.upm"
    map_path = tmp_path / "map.json"
    code = main(
        [
            "transform",
            "--model",
            str(model_path),
            "--op",
            "product",
            "--memory",
            "1",
            "--out",
            str(product_path),
            "--out-map",
            str(map_path),
        ]
    )
    assert code == 0
    base = parse_model(model_path.read_text())
    product = parse_model(product_path.read_text())
    spec = SpecThreshold(0.5)
    v_base = robust_value_iteration(induce_imc(base, uniform_policy(base)), spec).beta
    v_prod = robust_value_iteration(
        induce_imc(product, uniform_policy(product)), spec
    ).beta
    assert abs(v_base - v_prod) <= 1e-9
    mapping = json.loads(map_path.read_text())
    assert mapping["op"] == "product"
    assert mapping["memory"] == 1


def test_transform_simple_writes_valid_model(tmp_path):
    model_path = gen_model(tmp_path)
    simple_path = tmp_path / "simple.upm"
    map_path = tmp_path / "simple_map.json"
    code = main(
        [
            "transform",
            "--model",
            str(model_path),
            "--op",
            "simple",
            "--out",
            str(simple_path),
            "--out-map",
            str(map_path),
        ]
    )
    assert code == 0
    simple = parse_model(simple_path.read_text())
    assert simple.num_actions <= 2
    mapping = json.loads(map_path.read_text())
    assert set(mapping) == {"op", "roots", "part", "origin", "leaf_action"}
    assert len(mapping["part"]) == simple.num_states
