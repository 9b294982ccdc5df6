import json

import pytest

from motesim.radio import FEET, PRESETS, Position
from motesim.runner import seeded, sweep, truncated, run, compare
from motesim.scenario import (ConfigError, bundled_scenarios, dumps, from_dict, load_scenario,
                              to_dict, with_overrides)


def test_bundled_default_grid():
    cfg = load_scenario("paper-grid")
    assert cfg.grid.size == 8 and (cfg.grid.rows, cfg.grid.cols) == (2, 4)
    assert len(cfg.all_ids()) == 9
    assert cfg.duration == 600
    assert cfg.grid.spacing == pytest.approx(1.524)
    assert cfg.anchor.position == Position(7.5 * FEET, 2.5 * FEET)
    assert cfg.environment == PRESETS["lab"]


def test_default_attacker_is_central():
    cfg = load_scenario("paper-grid-flooding")
    assert cfg.attack.attackers == [cfg.central_node()] == [2]


def test_spacing_in_feet_stored_as_meters():
    cfg = from_dict({"grid": {"spacing": "5 ft"}})
    assert cfg.grid.spacing == pytest.approx(1.524)


def test_wormhole_with_one_endpoint():
    with pytest.raises(ConfigError) as e:
        from_dict({"attack": {"kind": "wormhole", "wormhole": {"endpoint_a": 1}}})
    assert e.value.path == "attack.wormhole"


@pytest.mark.parametrize("doc,path", [
    ({"duration": 0}, "duration"),
    ({"duration": 15, "powertrace_interval": 10}, "duration"),
    ({"grid": {"rows": 1, "cols": 1}}, "grid"),
    ({"environment": "moon"}, "environment"),
    ({"traffic": {"mode": "unicast", "pairs": {"1": 42}}}, "traffic.pairs.1"),
    ({"border_router": 99}, "border_router"),
    ({"grid": {"spacing": "5 parsecs"}}, "grid.spacing"),
    ({"bogus": 1}, "bogus"),
    ({"attack": {"kind": "sybil", "sybil": {"fake_count": 0}}}, "attack.sybil.fake_count"),
    ({"attack": {"kind": "sybil", "sybil": {"fake_ids": [3, 20, 21]}}}, "attack.sybil.fake_ids"),
    ({"attack": {"kind": "flooding", "flooding": {"period": 0}}}, "attack.flooding.period"),
])
def test_validation_errors_name_the_field(doc, path):
    with pytest.raises(ConfigError) as e:
        from_dict(doc)
    assert e.value.path == path


def test_parse_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{ not json")
    with pytest.raises(ConfigError):
        load_scenario(p)
    with pytest.raises(ConfigError):
        load_scenario(tmp_path / "missing.json")


@pytest.mark.parametrize("name", bundled_scenarios())
def test_serialize_round_trip(name, tmp_path):
    cfg = load_scenario(name)
    assert from_dict(to_dict(cfg)) == cfg
    p = tmp_path / "s.json"
    p.write_text(dumps(cfg))
    assert load_scenario(p) == cfg


def test_round_trip_inline_environment():
    doc = {"environment": {"name": "hall", "path_loss_exponent": 2.5, "reference_loss": 50,
                           "shadowing_sigma": 1.5, "retransmission_bias": 0.07},
           "traffic": {"mode": "unicast", "pairs": {"1": 2, "2": 1}}}
    cfg = from_dict(doc)
    assert from_dict(json.loads(dumps(cfg))) == cfg


def test_run_is_byte_deterministic():
    cfg = load_scenario("paper-grid")
    assert run(cfg).to_csv() == run(cfg).to_csv()


def test_flooding_costs_more_than_baseline():
    assert (run(load_scenario("paper-grid-flooding")).total_energy_mj
            > run(load_scenario("paper-grid")).total_energy_mj)


def test_row_count():
    cfg = with_overrides(load_scenario("paper-grid"), duration=95.0)
    assert len(run(cfg).rows) == 9 * 9


def test_sweep_of_full_grid_equals_plain_run():
    cfg = load_scenario("paper-grid")
    assert sweep(cfg, [8]).reports[0].to_csv() == run(cfg).to_csv()


@pytest.mark.parametrize("counts", [[1], [9], []])
def test_sweep_rejects_bad_counts(counts):
    with pytest.raises(ConfigError):
        sweep(load_scenario("paper-grid"), counts)


def test_truncation_keeps_anchor_and_row_major_order():
    cfg = truncated(load_scenario("paper-grid"), 3)
    assert cfg.all_ids() == [1, 2, 3, 9]


def test_compare_errors():
    cfg = load_scenario("paper-grid-flooding")
    with pytest.raises(ConfigError):
        compare(cfg, ["baseline"])
    with pytest.raises(ConfigError):
        compare(load_scenario("paper-grid"), ["baseline", "attack+ids"])
    with pytest.raises(ConfigError):
        compare(cfg, ["baseline", "sideways"])


def test_compare_svg_only_on_request():
    cfg = load_scenario("paper-grid-flooding")
    assert compare(cfg, ["baseline", "attack"]).svg is None
    svg = compare(cfg, ["baseline", "attack"], svg=True).svg
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")


def test_seeded_changes_outcome():
    cfg = load_scenario("paper-grid")
    assert run(seeded(cfg, 5)).to_csv() != run(cfg).to_csv()
