import json

import pytest

from nanmac import scenario
from nanmac.errors import ConfigError


@pytest.mark.parametrize("text,ns", [
    ("3600s", 3_600_000_000_000), ("15min", 900_000_000_000), ("500ms", 500_000_000),
    ("1h", 3_600_000_000_000), ("2.5us", 2_500), (" 7 ns ", 7), (42, 42), ("0.1s", 100_000_000),
])
def test_parse_duration(text, ns):
    assert scenario.parse_duration(text) == ns


@pytest.mark.parametrize("bad", ["3 days", "-1s", "", True, 1.5, -3, "1e3s"])
def test_parse_duration_rejects(bad):
    with pytest.raises(ConfigError):
        scenario.parse_duration(bad)


def test_defaults():
    sc = scenario.from_dict({"protocol": "dcf"})
    assert sc.seed == 0 and sc.duration_ns == 1_000_000_000
    assert sc.initial_meter_count() == 0


@pytest.mark.parametrize("raw", [
    {"protocol": "dcf", "sede": 1},
    {"protocol": "dcf", "dcf": {"cw_mn": 15}},
    {"protocol": "pcf", "pcf": {"poll_order": "random"}},
    {"protocol": "token-ring"},
    {},
    {"protocol": "dcf", "traffic": [{"meters": "all", "preset": "billing", "perod": "1s"}]},
])
def test_schema_rejects(raw):
    with pytest.raises(ConfigError):
        scenario.from_dict(raw)


def test_semantic_rejects():
    with pytest.raises(ConfigError):
        scenario.from_dict({"protocol": "dcf", "topology": {"meter_count": 3,
                                                            "density_per_m2": 1e-4}})
    with pytest.raises(ConfigError):
        scenario.from_dict({"protocol": "dcf", "traffic": [{"preset": "no-such"}]})
    with pytest.raises(ConfigError):
        scenario.from_dict({"protocol": "dcf", "topology": {"meter_count": 2},
                            "faults": [{"meter": 3, "fail_at": 0}]})
    with pytest.raises(ConfigError):
        scenario.from_dict({"protocol": "pcf", "topology": {"meter_count": 2},
                            "joins": [{"join_at": "1s", "position": [10, 0]}]})
    with pytest.raises(ConfigError):
        scenario.from_dict({"protocol": "dcf", "topology": {"cell_radius_m": 100,
                                                            "positions": [[150, 0]]}})


def test_joiner_ids_follow_initial_meters():
    sc = scenario.from_dict({"protocol": "dcf", "topology": {"meter_count": 4},
                             "joins": [{"join_at": "1s", "position": [10, 0]},
                                       {"join_at": "2s", "position": [20, 0]}]})
    assert [j.meter for j in sc.joins] == [5, 6]


def test_traffic_blocks_select_meters():
    sc = scenario.from_dict({"protocol": "dcf", "traffic": [
        {"meters": [2], "preset": "billing"},
        {"meters": "all", "preset": "outage-alert"}]})
    assert [s.name for s in sc.traffic_for(2)] == ["billing", "outage-alert"]
    assert [s.name for s in sc.traffic_for(1)] == ["outage-alert"]


def test_set_path():
    raw = {"protocol": "dcf", "topology": {"meter_count": 5}}
    out = scenario.set_path(raw, "topology.meter_count", 50)
    assert out["topology"]["meter_count"] == 50 and raw["topology"]["meter_count"] == 5
    assert scenario.set_path(raw, "qdcf.contention_factor_q", 0.2)["qdcf"] == \
        {"contention_factor_q": 0.2}
    for bad in ("topology.metercount", "nope", "topology", "traffic"):
        with pytest.raises(ConfigError):
            scenario.set_path(raw, bad, 1)


def test_load_file(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps({"protocol": "edca", "duration": "2s"}))
    assert scenario.load(p).duration_ns == 2_000_000_000
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        scenario.load(p)
    with pytest.raises(ConfigError):
        scenario.load(tmp_path / "missing.json")
