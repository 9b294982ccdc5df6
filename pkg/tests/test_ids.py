from collections import deque

import pytest
from hypothesis import given, settings, strategies as st

from helpers import QUIET, RADIO, network
from motesim.attack import apply_sybil
from motesim.ids import (ATTACKER, CLEAN, SUSPECTED, Evidence, IdsConfig, IdsEngine,
                         InsufficientSamplesError, Suspicion, Verdict, declare,
                         derive_link_key, run_consistency_round, update_suspicion)
from motesim.kernel import seconds_to_ticks
from motesim.mote import Message, NeighborRecord
from motesim.radio import EnvironmentProfile, PRESETS, Position, rssi_at
from motesim.runner import Simulation, condition_config, run
from motesim.scenario import load_scenario

import random

STEEP = EnvironmentProfile("steep", 2.8, 55.0, 0.0)


def record(nid, claimed, true_distance, env=QUIET, samples=3):
    rec = NeighborRecord(nid, claimed, deque(maxlen=16))
    for i in range(samples):
        rec.push(rssi_at(RADIO, true_distance, env, random.Random(i)), i + 1)
    return rec


def test_consistent_neighbor_not_flagged():
    recs = {1: record(1, Position(1.524, 0), 1.524)}
    ev = run_consistency_round(0, Position(0, 0), recs, RADIO, QUIET, 1.0)
    assert not ev[1].flagged
    assert ev[1].d_rssi == pytest.approx(ev[1].d_geom)


def test_tunneled_neighbor_flagged():
    recs = {1: record(1, Position(30, 0), 1.0, STEEP)}
    ev = run_consistency_round(0, Position(0, 0), recs, RADIO, STEEP, 1.0)[1]
    assert ev.flagged and ev.out_of_range
    assert ev.d_rssi == pytest.approx(1.0)


def test_forged_identity_flagged():
    recs = {9: record(9, Position(20, 0), 2.0)}
    ev = run_consistency_round(0, Position(0, 0), recs, RADIO, QUIET, 1.0)[9]
    assert ev.flagged and not ev.out_of_range
    assert ev.d_geom - ev.d_rssi == pytest.approx(18.0)


def test_empty_ring_and_stale_records_skipped():
    recs = {1: NeighborRecord(1, Position(1, 0)), 2: record(2, Position(2, 0), 2.0)}
    assert set(run_consistency_round(0, Position(0, 0), recs, RADIO, QUIET, 1.0)) == {2}
    assert run_consistency_round(0, Position(0, 0), recs, RADIO, QUIET, 1.0, heard_since=3) == {}


def _flags(pattern):
    return [{5: Evidence(5, 0, 1, 1, bool(b), False)} for b in pattern]


def test_suspicion_ratio_over_window():
    table = {}
    for f in _flags([1, 1, 1, 1, 1, 1, 1, 0, 0, 0]):
        update_suspicion(table, f, 10)
    assert table[5].p == pytest.approx(0.7)
    assert table[5].observed_rounds == 10 and table[5].flagged_rounds == 7


def test_suspicion_extremes():
    never, always = {}, {}
    for f in _flags([0] * 10):
        update_suspicion(never, f, 10)
    for f in _flags([1] * 10):
        update_suspicion(always, f, 10)
    assert never[5].p == 0 and declare(never[5], 0.7, 10) == CLEAN
    assert always[5].p == 1.0


def test_suspicion_window_slides():
    table = {}
    for f in _flags([1] * 10 + [0] * 10):
        update_suspicion(table, f, 10)
    assert table[5].p == 0
    assert table[5].flagged_rounds == 10 and table[5].observed_rounds == 20


def _susp(p, observed=10, window=10):
    flagged = round(p * window)
    return Suspicion(1, deque([1] * flagged + [0] * (window - flagged), maxlen=window),
                     flagged, observed)


def test_declare_thresholds():
    assert declare(_susp(0.8), 0.7, 10) == ATTACKER
    assert declare(_susp(0.3), 0.7, 10) == SUSPECTED
    assert declare(_susp(0.7), 0.7, 10) == ATTACKER


def test_declare_needs_full_window():
    s = Suspicion(1, deque([1, 1, 1], maxlen=10), 3, 3)
    assert declare(s, 0.7, 10) == SUSPECTED


def test_ids_config_validation():
    for kw in ({"epsilon": 0}, {"rounds": 0}, {"threshold": 0}, {"threshold": 1.1},
               {"round_period": 0}):
        with pytest.raises(ValueError):
            IdsConfig(**kw)


def _engine(border_router=None, nodes=((1, (1, 0)), (2, (0, 1)))):
    net = network(nodes=[(0, (0, 0), "anchor"), *nodes])
    eng = IdsEngine(IdsConfig(enabled=True), net.motes[0], net, border_router=border_router)
    return net, eng


def test_mitigate_rejects_non_attacker():
    net, eng = _engine()
    assert not eng.mitigate(Verdict(1, CLEAN))
    assert not eng.mitigate(Verdict(1, SUSPECTED, 0.5))
    assert net.motes[0].blacklist == set() and net.sim.pending() == 0


def test_two_attackers_blacklisted_independently():
    net, eng = _engine()
    assert eng.mitigate(Verdict(1, ATTACKER, 1.0))
    assert eng.mitigate(Verdict(2, ATTACKER, 1.0))
    assert net.motes[0].blacklist == {1, 2}
    net.sim.run_until(seconds_to_ticks(30))
    assert net.motes[1].blacklist == {2} and net.motes[2].blacklist == {1}


def test_blacklisted_frames_cost_nothing():
    net = network(nodes=[(1, (0, 0)), (2, (1, 0))])
    net.motes[2].blacklist.add(1)
    net.transmit(net.motes[1], Message("beacon", 1, Position(0, 0), 12, 0))
    assert net.motes[2].rx == net.motes[2].cpu == 0


def test_escalation_on_border_router():
    net, eng = _engine(border_router=2, nodes=((1, (1, 0)), (2, (0, 1), "attacker")))
    apply_sybil(net, 2, [], [], 10.0)
    net.motes[1].start_beacons(2.0, 0.0)
    # node 2 advertises a far claim so the anchor suspects it in round one
    net.motes[2].claimed_position = Position(15, 0)
    net.motes[2].start_beacons(2.0, 0.0)
    eng.start()
    net.sim.run_until(seconds_to_ticks(10))
    assert eng.verdict(2).state == SUSPECTED
    assert eng.escalated and eng.round_period == seconds_to_ticks(5)
    before = net.motes[0].cpu
    eng.run_round()
    assert net.motes[0].cpu - before == 2 * 1638


def test_no_escalation_for_other_nodes():
    net, eng = _engine(border_router=1, nodes=((1, (1, 0)), (2, (0, 1))))
    net.motes[1].start_beacons(2.0, 0.0)
    net.motes[2].claimed_position = Position(15, 0)
    net.motes[2].start_beacons(2.0, 0.0)
    eng.start()
    net.sim.run_until(seconds_to_ticks(10))
    assert eng.verdict(2).state == SUSPECTED
    assert not eng.escalated and eng.round_period == seconds_to_ticks(10)
    before = net.motes[0].cpu
    eng.run_round()
    assert net.motes[0].cpu - before == 1638


def test_link_key_examples():
    assert derive_link_key([-60, -70, -60, -70], 4).bits == "1010"
    assert derive_link_key([-65.0] * 8, 8).bits == "00000000"
    with pytest.raises(InsufficientSamplesError):
        derive_link_key([-60, -61, -62], 32)


def test_reciprocal_channel_gives_same_key():
    env = QUIET
    a = [rssi_at(RADIO, d, env, random.Random(0)) for d in [1 + i % 7 for i in range(32)]]
    b = [rssi_at(RADIO, d, env, random.Random(1)) for d in [1 + i % 7 for i in range(32)]]
    assert derive_link_key(a, pair=(1, 2)) == derive_link_key(b, pair=(2, 1))


@settings(max_examples=60)
@given(st.dictionaries(st.integers(1, 30),
                       st.tuples(st.floats(0.1, 40), st.floats(-95, -40)), min_size=1, max_size=12),
       st.floats(0.01, 10), st.floats(0, 10))
def test_flags_antitone_in_epsilon(entries, eps, extra):
    recs = {}
    for nid, (x, r) in entries.items():
        recs[nid] = NeighborRecord(nid, Position(x, 0), deque([r], maxlen=16), 1)
    lo = run_consistency_round(0, Position(0, 0), recs, RADIO, PRESETS["lab"], eps)
    hi = run_consistency_round(0, Position(0, 0), recs, RADIO, PRESETS["lab"], eps + extra)
    assert {n for n, e in hi.items() if e.flagged} <= {n for n, e in lo.items() if e.flagged}


def test_declared_fakes_are_localized():
    cfg = condition_config(load_scenario("paper-grid-sybil"), "attack+ids")
    s = Simulation(cfg)
    rep = s.run()
    fakes = set(cfg.attack.sybil.fake_ids)
    declared = set(rep.declared_attackers()) & fakes
    assert declared
    for nid in declared:
        ev = s.ids.suspicion[nid].last_evidence
        assert abs(ev.d_rssi - ev.d_geom) > cfg.ids.epsilon or ev.out_of_range


def test_wormhole_declaration_names_victims():
    cfg = condition_config(load_scenario("paper-grid-wormhole"), "attack+ids")
    rep = run(cfg)
    attackers = [v for v in rep.verdict_log if v.state == ATTACKER]
    assert attackers
    assert all(v.victims for v in attackers)
    assert set(rep.declared_attackers()) <= rep.truth.implicated(cfg.attack.wormhole.endpoint_a)


def test_verdict_transitions_are_legal():
    allowed = {(CLEAN, SUSPECTED), (SUSPECTED, ATTACKER), (SUSPECTED, CLEAN)}
    for name in ("paper-grid-sybil", "paper-grid-wormhole", "paper-grid-flooding"):
        rep = run(condition_config(load_scenario(name), "attack+ids"))
        last = {}
        for v in rep.verdict_log:
            assert (last.get(v.node, CLEAN), v.state) in allowed
            last[v.node] = v.state


def test_flood_mitigation_restores_baseline_rx_rate():
    cfg = load_scenario("paper-grid-flooding")
    base = run(condition_config(cfg, "baseline"))
    ids = run(condition_config(cfg, "attack+ids"))
    attacker = cfg.attack.attackers[0]
    v = next(v for v in ids.verdict_log if v.node == attacker and v.state == ATTACKER)
    start = v.declared_at / 32768 + cfg.traffic.beacon_period
    honest = [n for n in cfg.all_ids() if n not in (attacker, cfg.anchor.id)]

    def slope(rep, nid):
        pts = [(r.time_s, r.counters.rx) for r in rep.rows if r.node_id == nid and r.time_s >= start]
        (t0, a), (t1, b) = pts[0], pts[-1]
        return (b - a) / (t1 - t0)

    for nid in honest:
        assert slope(ids, nid) == pytest.approx(slope(base, nid), rel=0.10)
