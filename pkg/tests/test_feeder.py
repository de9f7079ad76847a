import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from dsr.feeder import (
    DanglingReferenceError,
    DimensionError,
    DuplicateIdError,
    FeederSyntaxError,
    Phase,
    demand_at,
    feeder_from_dict,
    feeder_to_dict,
    load_feeder,
    parse_feeder,
    serialize_feeder,
    validate_feeder,
)
from dsr.synth import SynthConfig, random_feeder_dict

from conftest import fixture_dict, fixture_path

MINIMAL = {
    "base_kva": 1000.0,
    "base_kv": 4.16,
    "horizon": {"n_steps": 1, "dt_hours": 1.0},
    "buses": [{"id": "A", "phases": ["a"], "vmin": 0.9, "vmax": 1.1}],
    "lines": [],
    "loads": [{"id": "L", "bus": "A", "phases": ["a"], "demand": [5.0, 1.0]}],
    "generators": [],
    "batteries": [],
}


def test_phase_ordinals():
    assert [p.ordinal for p in (Phase.a, Phase.b, Phase.c)] == [0, 1, 2]
    assert sorted([Phase.c, Phase.a, Phase.b]) == [Phase.a, Phase.b, Phase.c]


def test_minimal_file():
    m = parse_feeder(json.dumps(MINIMAL))
    assert len(m.buses) == 1 and len(m.lines) == 0
    assert demand_at(m, "L", Phase.a, 0) == 5 + 1j


def test_tri_block_counts():
    m = load_feeder(fixture_path("tri_block"))
    assert len(m.switches) == 2
    assert len(m.dgs) == 1
    assert validate_feeder(m) == []
    assert demand_at(m, "LB", "a", 0) == 10 + 0j


def test_bundled_fixtures_validate():
    for name in ("tri_block", "ieee13_analogue"):
        assert validate_feeder(load_feeder(fixture_path(name))) == [], name


def test_ieee13_analogue_shape():
    m = load_feeder(fixture_path("ieee13_analogue"))
    assert len(m.buses) == 25
    assert len(m.switches) == 7
    assert len(m.dgs) == 7
    assert m.horizon.n_steps == 8
    assert sum(len(b.phases) for b in m.buses) > 60


def test_dangling_reference_names_bus():
    doc = json.loads(json.dumps(MINIMAL))
    doc["loads"][0]["bus"] = "X"
    with pytest.raises(DanglingReferenceError) as e:
        feeder_from_dict(doc)
    assert e.value.ref == "X"
    assert "X" in str(e.value)


def test_duplicate_id():
    doc = json.loads(json.dumps(MINIMAL))
    doc["buses"].append(dict(doc["buses"][0]))
    with pytest.raises(DuplicateIdError):
        feeder_from_dict(doc)


def test_impedance_dimension_mismatch():
    doc = fixture_dict("tri_block")
    doc["lines"][0]["impedance"] = [[[0.01, 0.02], [0.0, 0.0]]]
    with pytest.raises(DimensionError):
        feeder_from_dict(doc)


def test_syntax_error_has_position():
    with pytest.raises(FeederSyntaxError) as e:
        parse_feeder('{"buses": [\n  {"id": "A",, }]}')
    assert e.value.line == 2
    assert e.value.column is not None


def test_vmin_above_vmax_is_one_violation():
    doc = json.loads(json.dumps(MINIMAL))
    doc["buses"][0]["vmin"] = 1.2
    bad = validate_feeder(feeder_from_dict(doc))
    assert len(bad) == 1
    assert bad[0].object_id == "A" and bad[0].rule == "vmin<=vmax"


def test_battery_overfull_is_one_violation():
    doc = fixture_dict("tri_block")
    doc["generators"][0]["kind"] = "battery"
    doc["batteries"] = [{
        "dg": "G1", "energy_cap_kwh": 10.0, "initial_energy_kwh": 12.0,
        "charge_rate_bounds_kw": [-5.0, 5.0], "loss_segments": [[1.0, 0.0]],
    }]
    bad = validate_feeder(feeder_from_dict(doc))
    assert [(v.object_id, v.rule) for v in bad] == [("G1", "0<=initial_energy<=energy_cap")]


def test_demand_profiles():
    doc = json.loads(json.dumps(MINIMAL))
    doc["horizon"]["n_steps"] = 3
    doc["loads"].append({"id": "P", "bus": "A", "phases": ["a"], "demand": [[[1, 0], [2, 0], [3, 0.5]]]})
    doc["loads"].append({"id": "Z", "bus": "A", "phases": ["a"], "demand": 0})
    m = feeder_from_dict(doc)
    assert [demand_at(m, "L", "a", t) for t in range(3)] == [5 + 1j] * 3
    assert [demand_at(m, "P", "a", t) for t in range(3)] == [1, 2, 3 + 0.5j]
    assert demand_at(m, "Z", "a", 2) == 0
    with pytest.raises(IndexError):
        demand_at(m, "L", "a", 3)
    with pytest.raises(KeyError):
        demand_at(m, "nope", "a", 0)
    with pytest.raises(IndexError):
        demand_at(m, "L", "b", 0)


def test_adjacency_consistent():
    m = load_feeder(fixture_path("ieee13_analogue"))
    for ln in m.lines:
        assert sum(ln.id in m.lines_out[b.id] for b in m.buses) == 1
        assert sum(ln.id in m.lines_in[b.id] for b in m.buses) == 1
        assert ln.id in m.lines_out[ln.from_bus] and ln.id in m.lines_in[ln.to_bus]


def test_fixture_round_trip():
    for name in ("tri_block", "ieee13_analogue"):
        m = load_feeder(fixture_path(name))
        assert parse_feeder(serialize_feeder(m)) == m


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.booleans(), st.booleans(), st.integers(1, 3))
def test_random_round_trip(seed, three_phase, battery, steps):
    cfg = SynthConfig(n_buses=7, n_switches=3, n_ties=1, three_phase=three_phase, battery=battery, n_steps=steps)
    doc = random_feeder_dict(random.Random(seed), cfg)
    m = feeder_from_dict(doc)
    assert validate_feeder(m) == []
    again = parse_feeder(serialize_feeder(m))
    assert again == m
    assert feeder_to_dict(again) == feeder_to_dict(m)
