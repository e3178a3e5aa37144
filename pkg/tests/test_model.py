import dataclasses
import warnings

import numpy as np
import pytest

from coalgrid.data import load_bundled
from coalgrid.model import (
    CostBreakdown,
    Household,
    Kind,
    StorageSpec,
    check_scenario,
    horizon_from_dict,
    horizon_to_dict,
    load_horizon,
    load_scenario,
    save_horizon,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
    validate_scenario,
)
from support import consumer, member, scenario


@pytest.fixture(scope="module")
def bundled():
    return load_bundled()


def test_bundled_scenario_is_valid(bundled):
    assert validate_scenario(bundled.base) == []
    for d in range(len(bundled.days)):
        assert validate_scenario(bundled.day_scenario(d)) == []


def test_consumer_with_renewable_names_household(bundled):
    s = bundled.base
    bad = dataclasses.replace(s.household("p2"), renewable_kwh=np.full(24, 0.1))
    s = s.replace(households=tuple(bad if h.id == "p2" else h for h in s.households))
    (msg,) = validate_scenario(s)
    assert "p2" in msg and "renewable" in msg


def test_short_demand_vector(bundled):
    s = bundled.base
    bad = dataclasses.replace(s.household("m4"), demand_kwh=np.ones(23))
    s = s.replace(households=tuple(bad if h.id == "m4" else h for h in s.households))
    (msg,) = validate_scenario(s)
    assert "m4" in msg and "length 23" in msg


def test_invariant_violations_are_data():
    s = scenario(
        [
            Household("a", Kind.STORAGE_OWNER, [1.0], [0.5], StorageSpec(1, 1)),
            Household("b", Kind.PROSUMER, [-1.0], [0.0]),
            member("c", [1.0], capacity=1.0, initial=2.0),
        ],
        [0.1],
        alpha=1.5,
    )
    msgs = validate_scenario(s)
    assert len(msgs) == 5
    with pytest.raises(ValueError, match="invalid scenario"):
        check_scenario(s)


def test_zero_sigma_warns():
    s = scenario([member("m", [1.0])], [0.1])
    with pytest.warns(UserWarning, match="waste_penalty_price"):
        check_scenario(s)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        check_scenario(s.replace(prices=dataclasses.replace(s.prices, waste_penalty_price=0.001)))


def test_profiles_are_read_only():
    h = member("m", [1.0, 2.0])
    with pytest.raises(ValueError):
        h.demand_kwh[0] = 5.0


def test_community_price():
    s = scenario([consumer("p", [1, 1])], [0.2, 0.4], alpha=0.5)
    np.testing.assert_allclose(s.tariff.community_price, [0.1, 0.2])


def test_partition(bundled):
    s = bundled.base
    assert len(s.members) + len(s.consumers) == len(s.households)
    assert set(s.member_ids).isdisjoint(p.id for p in s.consumers)


def test_storage_level_clamped():
    st = StorageSpec(5.0, 2.0)
    assert st.with_initial(5.0 + 1e-12).initial_kwh == 5.0
    assert st.with_initial(-1e-12).initial_kwh == 0.0


def test_cost_breakdown_total_excludes_penalty():
    c = CostBreakdown(1.0, 0.1, 0.01, 0.5, 0.2, penalty_charge=9.0)
    assert c.total == pytest.approx(0.81)
    assert (c + c).total == pytest.approx(1.62)
    assert CostBreakdown.sum([c, c, c]).penalty_charge == 27.0


def test_scenario_round_trip(tmp_path, bundled):
    s = bundled.day_scenario(3, {"m1": 2.5})
    path = tmp_path / "s.json"
    save_scenario(s, path)
    assert load_scenario(path) == s
    assert scenario_from_dict(scenario_to_dict(s)) == s


def test_schema_version_required():
    d = scenario_to_dict(scenario([member("m", [1.0])], [0.1]))
    d["schema_version"] = 99
    with pytest.raises(ValueError, match="schema_version"):
        scenario_from_dict(d)
    del d["schema_version"]
    with pytest.raises(ValueError):
        scenario_from_dict(d)


def test_horizon_round_trip(tmp_path, bundled):
    h = bundled.truncated(3)
    path = tmp_path / "h.json"
    save_horizon(h, path)
    back = load_horizon(path)
    assert back.base == h.base
    for d in range(3):
        assert back.day_scenario(d) == h.day_scenario(d)


def test_bare_scenario_is_one_day_horizon():
    s = scenario([member("m", [1.0, 0.5], [0.2, 0.0]), consumer("p", [1.0, 1.0])], [0.1, 0.2])
    h = horizon_from_dict(scenario_to_dict(s))
    assert len(h.days) == 1
    assert h.day_scenario(0) == s
    assert horizon_from_dict(horizon_to_dict(h)).day_scenario(0) == s
