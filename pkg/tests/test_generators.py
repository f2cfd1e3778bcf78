import pytest

from upomdp import Interval, Policy, SpecThreshold, induce_imc, nominal, uniform_policy, validate
from upomdp.generators import (
    AircraftParams,
    SpacecraftParams,
    _switch_offsets,
    gen_aircraft,
    gen_spacecraft,
)
from upomdp.robustcheck import exact_point_values, robust_value_iteration

iv = Interval


def stay_policy(model, horizon=20):
    # full action list per row so zero-mass actions drop out cleanly
    rows = {}
    for z, states in sorted(model.states_with_obs().items()):
        acts = model.avail[states[0]]
        rows[z] = tuple((a, 1.0 if a == acts[0] else 0.0) for a in acts)
    return Policy(rows)


def test_switch_offsets_dedupe():
    assert _switch_offsets(6, 1) == (0, 1, -1)
    assert _switch_offsets(6, 2) == (0, 1, -1, 2, -2)
    # on a 4-ring, offsets past the antipode collapse into earlier ones
    assert _switch_offsets(4, 3) == (0, 1, -1, 2)
    assert _switch_offsets(5, 0) == (0,)


def test_spacecraft_default_shape():
    model = gen_spacecraft(SpacecraftParams())
    assert model.num_states == 6 * 20 + 2
    assert model.num_actions == 3
    assert model.num_observations == 6 * 20 + 2
    assert model.initial == 0
    sink, goal = 120, 121
    assert model.goal == frozenset({goal})
    assert not validate(model)
    # core cells are fully observable, one observation each
    assert len(set(model.obs)) == model.num_observations
    # last time slot closes out with reward 1 on every action
    for orbit in range(6):
        s = orbit * 20 + 19
        for a in range(3):
            assert model.trans[(s, a)] == ((goal, iv(1.0, 1.0)),)
            assert model.reward_of(s, a) == 1.0
    # sink still reaches the goal, without reward
    assert model.trans[(sink, 0)] == ((goal, iv(1.0, 1.0)),)
    assert model.reward_of(sink, 0) == 0.0


def test_spacecraft_row_structure():
    model = gen_spacecraft(SpacecraftParams())
    # stay is deterministic on clean cells
    assert model.trans[(0, 0)] == ((1, iv(1.0, 1.0)),)
    # switching from orbit 0 up: target orbit 1, diversions to orbits 0 and 2
    div = iv((1.0 - 0.95) / 2.0, (1.0 - 0.5) / 2.0)
    row = dict(model.trans[(0, 1)])
    t1 = 1
    assert row[1 * 20 + t1] == iv(0.5, 0.95)
    assert row[0 * 20 + t1] == div
    assert row[2 * 20 + t1] == div
    # switching down targets orbit 5 with diversions to 4 and 0
    row = dict(model.trans[(0, 2)])
    assert row[5 * 20 + t1] == iv(0.5, 0.95)
    assert row[4 * 20 + t1] == div
    assert row[0 * 20 + t1] == div


def test_spacecraft_object_cell_splits_mass():
    model = gen_spacecraft(SpacecraftParams(objects=frozenset({(0, 5)})))
    sink = 120
    # staying into the debris cell keeps [0.5, 0.95] and leaks the rest
    row = dict(model.trans[(0 * 20 + 4, 0)])
    assert row[0 * 20 + 5] == iv(0.5, 0.95)
    assert row[sink] == iv(1.0 - 0.95, 1.0 - 0.5)
    # a switch landing on the debris cell scales both factors
    row = dict(model.trans[(1 * 20 + 4, 2)])
    assert row[0 * 20 + 5] == iv(0.5 * 0.5, 0.95 * 0.95)
    assert row[sink] == iv(0.5 * (1.0 - 0.95), 0.95 * (1.0 - 0.5))


def test_spacecraft_without_debris_is_safe():
    model = gen_spacecraft(SpacecraftParams())
    res = robust_value_iteration(
        induce_imc(model, uniform_policy(model)), SpecThreshold(1.0)
    )
    assert res.beta == pytest.approx(1.0, abs=1e-6)


def test_spacecraft_single_static_anchor_values():
    # staying home and crossing one debris cell: the crossing probability is
    # exactly the detection interval
    model = gen_spacecraft(SpacecraftParams(objects=frozenset({(0, 10)})))
    policy = stay_policy(model)
    imc = induce_imc(model, policy, check=False)
    robust = robust_value_iteration(imc, SpecThreshold(1.0)).beta
    assert robust == pytest.approx(0.5, abs=1e-6)
    nom = exact_point_values(induce_imc(nominal(model), policy, check=False))
    assert nom[model.initial] == pytest.approx(0.725, abs=1e-9)


def test_spacecraft_long_horizon_coarsens_observations():
    model = gen_spacecraft(SpacecraftParams(horizon=50))
    # quantization 2: 25 observation cells per orbit
    assert model.num_observations == 6 * 25 + 2
    assert not validate(model)


def test_spacecraft_param_guards():
    with pytest.raises(ValueError):
        gen_spacecraft(SpacecraftParams(orbit_count=1))
    with pytest.raises(ValueError):
        gen_spacecraft(SpacecraftParams(horizon=0))
    with pytest.raises(ValueError):
        gen_spacecraft(SpacecraftParams(switch_radius=-1))
    with pytest.raises(ValueError):
        gen_spacecraft(SpacecraftParams(initial_orbit=6))
    with pytest.raises(ValueError):
        gen_spacecraft(SpacecraftParams(objects=frozenset({(0, 20)})))
    # a switch interval touching 1 leaves zero-lower diversion mass
    with pytest.raises(ValueError, match="graph preservation"):
        gen_spacecraft(SpacecraftParams(switch_success=iv(0.5, 1.0)))


def test_aircraft_default_shape():
    model = gen_aircraft(AircraftParams())
    assert model.num_states == 5 * 5 * 3 * 3 + 3
    assert model.num_actions == 9
    assert model.num_observations == 25 + 3
    done, coll, goal = 225, 226, 227
    assert model.goal == frozenset({goal})
    assert model.reward == {(done, 0): 1.0}
    assert model.trans[(coll, 0)] == ((goal, iv(1.0, 1.0)),)
    assert not validate(model)
    # observations expose position only; velocities stay hidden
    per_obs = {}
    for s in range(225):
        per_obs.setdefault(model.obs[s], []).append(s)
    assert len(per_obs) == 25
    assert all(len(group) == 9 for group in per_obs.values())


def test_aircraft_quantized_sensor():
    model = gen_aircraft(AircraftParams(sensor_quantization=2))
    # ceil(5/2) = 3 cells per axis
    assert model.num_observations == 9 + 3
    assert not validate(model)


def test_aircraft_interval_params_nest_rows():
    wide = gen_aircraft(AircraftParams(intruder_accel=iv(0.2, 0.8)))
    narrow = gen_aircraft(AircraftParams(intruder_accel=iv(0.4, 0.6)))
    assert wide.trans.keys() == narrow.trans.keys()
    for key, wrow in wide.trans.items():
        nrow = dict(narrow.trans[key])
        for succ, we in wrow:
            ne = nrow[succ]
            assert we.lower <= ne.lower + 1e-12
            assert ne.upper <= we.upper + 1e-12


def test_aircraft_param_guards():
    with pytest.raises(ValueError):
        gen_aircraft(AircraftParams(position_size=4))
    with pytest.raises(ValueError):
        gen_aircraft(AircraftParams(speed_size=1))
    with pytest.raises(ValueError):
        gen_aircraft(AircraftParams(sensor_quantization=0))
    with pytest.raises(ValueError):
        gen_aircraft(AircraftParams(pilot_responsive=iv(0.7, 1.0)))
    with pytest.raises(ValueError):
        gen_aircraft(AircraftParams(intruder_accel=iv(0.0, 0.5)))


def test_aircraft_robust_value_sane():
    model = gen_aircraft(AircraftParams())
    policy = uniform_policy(model)
    spec = SpecThreshold(0.5)
    robust = robust_value_iteration(induce_imc(model, policy), spec).beta
    nom = exact_point_values(induce_imc(nominal(model), policy))[model.initial]
    assert 0.0 <= robust <= 1.0 + 1e-9
    assert robust <= nom + 1e-9
