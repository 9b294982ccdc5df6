"""Build a network from a scenario, run it, and collect per-node reports."""
from __future__ import annotations

import copy
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .attack import AttackTruth, apply_flooding, apply_sybil, apply_wormhole
from .energy import (ConditionComparison, EnergyReport, PowertraceCounters,
                     average_power_mw, compare_conditions, energy_mj, estimate_lifetime)
from .ids import ATTACKER, CLEAN, IdsEngine, Verdict
from .kernel import Simulator, seconds_to_ticks, ticks_to_seconds
from .mote import Mote, MoteSpec, Network
from .radio import Position
from .scenario import ConfigError, ScenarioConfig, validate

CONDITIONS = ("baseline", "attack", "attack+ids")


class InvariantViolation(RuntimeError):
    """A powertrace conservation law failed during a run."""


@dataclass
class SnapshotRow:
    time_s: float
    node_id: int
    role: str
    counters: PowertraceCounters
    interval_energy_mj: float
    cumulative_energy_mj: float
    verdict_state: str
    suspicion_p: float


@dataclass
class RunReport:
    config: ScenarioConfig
    label: str
    rows: list[SnapshotRow]
    verdict_log: list[Verdict]
    energy: EnergyReport
    lifetime_hours: dict[int, float]
    truth: AttackTruth
    events: int
    ids_rounds: int = 0
    final_verdicts: dict[int, Verdict] = field(default_factory=dict)

    @property
    def total_energy_mj(self) -> float:
        return self.energy.total_mj

    def declared_attackers(self, within_rounds: int | None = None) -> list[int]:
        return sorted({v.node for v in self.verdict_log if v.state == ATTACKER
                       and (within_rounds is None or v.round <= within_rounds)})

    def to_csv(self) -> str:
        from .report import rows_to_csv
        return rows_to_csv(self.rows)


class Simulation:
    """One fully wired run: kernel, medium, motes, attack and IDS."""

    def __init__(self, cfg: ScenarioConfig, label: str = "run"):
        self.cfg = cfg
        self.label = label
        self.sim = Simulator(cfg.seed)
        self.network = Network(self.sim, cfg.radio.spec(), cfg.environment)
        self.truth = AttackTruth(cfg.attack.kind, set(cfg.attack.attackers))
        self.ids: IdsEngine | None = None
        self.rows: list[SnapshotRow] = []
        self._prev: dict[int, PowertraceCounters] = {}
        self._build()

    def _mote(self, nid: int, pos: Position, claimed: Position | None, role: str) -> Mote:
        spec = MoteSpec(nid, pos, claimed, role, self.cfg.battery)
        m = Mote(spec, channel_check_rate=self.cfg.radio.channel_check_rate,
                 channel_check_ticks=self.cfg.radio.channel_check_ticks)
        return self.network.add(m)

    def _build(self) -> None:
        cfg, net, sim = self.cfg, self.network, self.sim
        attackers = set(cfg.attack.attackers) if cfg.attack.kind != "none" else set()
        apps = []
        for n in cfg.node_table():
            role = "attacker" if n.id in attackers else "normal"
            apps.append(self._mote(n.id, n.position, n.claimed_position, role))
        self.anchor = self._mote(cfg.anchor.id, cfg.anchor.position, None, "anchor")

        # Snapshots are queued first so they precede same-tick traffic.
        interval = cfg.powertrace_interval
        count = int(cfg.duration // interval)
        for k in range(1, count + 1):
            sim.schedule(seconds_to_ticks(k * interval), self._snapshot, payload="powertrace")

        t = cfg.traffic
        pairs = cfg.unicast_pairs()
        for m in apps:
            if t.mode == "broadcast":
                m.start_broadcast_app(t.period, t.jitter, t.payload)
            elif m.id in pairs:
                m.start_unicast_app(pairs[m.id], t.period, t.jitter, t.payload)
            m.start_beacons(t.beacon_period, t.beacon_jitter, t.beacon_payload)

        self._apply_attack()

        if cfg.ids.enabled:
            self.ids = IdsEngine(cfg.ids, self.anchor, net, cfg.positions(),
                                 cfg.border_router, alert_delay=t.beacon_period)
            self.ids.start()

    def _apply_attack(self) -> None:
        cfg, net = self.cfg, self.network
        a = cfg.attack
        if a.kind == "wormhole":
            apply_wormhole(net, a.wormhole.endpoint_a, a.wormhole.endpoint_b, self.truth)
        elif a.kind == "sybil":
            attacker = a.attackers[0]
            forged = a.sybil.forged_positions
            if forged is None:
                forged = self._forge_positions(attacker, a.sybil.fake_count, a.sybil.forge_margin)
            self.truth.fake_ids = set(a.sybil.fake_ids)
            apply_sybil(net, attacker, a.sybil.fake_ids, forged, cfg.traffic.beacon_period,
                        cfg.traffic.beacon_jitter, cfg.traffic.beacon_payload)
        elif a.kind == "flooding":
            dx, dy = a.flooding.spoof_offset
            for nid in a.attackers:
                p = net.motes[nid].position
                apply_flooding(net, nid, a.flooding.period, a.flooding.payload,
                               Position(p.x + dx, p.y + dy), self.truth)

    def _forge_positions(self, attacker: int, count: int, margin: float) -> list[Position]:
        pos = list(self.cfg.positions().values())
        lo_x, hi_x = min(p.x for p in pos) - margin, max(p.x for p in pos) + margin
        lo_y, hi_y = min(p.y for p in pos) - margin, max(p.y for p in pos) + margin
        rng = self.sim.rng(f"attack/{attacker}/forge")
        return [Position(rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y)) for _ in range(count)]

    def _snapshot(self) -> None:
        now = self.sim.now
        for nid in sorted(self.network.motes):
            m = self.network.motes[nid]
            c = m.snapshot_powertrace(now)
            if c.cpu + c.lpm != now or c.lpm < 0:
                raise InvariantViolation(f"node {nid}: cpu + lpm != elapsed at tick {now}")
            if c.tx + c.rx > now:
                raise InvariantViolation(f"node {nid}: tx + rx exceeds elapsed at tick {now}")
            prev = self._prev.get(nid, PowertraceCounters())
            d = c - prev
            if min(d.cpu, d.lpm, d.tx, d.rx) < 0:
                raise InvariantViolation(f"node {nid}: counter decreased at tick {now}")
            self._prev[nid] = c
            if self.ids is not None:
                v = self.ids.verdict(nid)
                state, p = v.state, v.p
            else:
                state, p = CLEAN, 0.0
            self.rows.append(SnapshotRow(ticks_to_seconds(now), nid, m.role, c,
                                         energy_mj(d), energy_mj(c), state, p))

    def run(self) -> RunReport:
        cfg = self.cfg
        events = self.sim.run_until(seconds_to_ticks(cfg.duration))
        interval_mj: dict[int, list[float]] = {}
        cumulative: dict[int, float] = {}
        for row in self.rows:
            interval_mj.setdefault(row.node_id, []).append(row.interval_energy_mj)
            cumulative[row.node_id] = row.cumulative_energy_mj
        energy = EnergyReport(self.label, cfg.duration, topology_key(cfg), interval_mj, cumulative)
        last = int(cfg.duration // cfg.powertrace_interval) * cfg.powertrace_interval
        elapsed = ticks_to_seconds(seconds_to_ticks(last))
        lifetimes = {nid: estimate_lifetime(average_power_mw(mj, elapsed), cfg.battery)
                     for nid, mj in cumulative.items()}
        ids = self.ids
        return RunReport(cfg, self.label, self.rows, list(ids.log) if ids else [], energy,
                         lifetimes, self.truth, events, ids.round_index if ids else 0,
                         dict(ids.verdicts) if ids else {})


def topology_key(cfg: ScenarioConfig) -> tuple:
    pos = cfg.positions()
    return tuple((nid, pos[nid].x, pos[nid].y) for nid in sorted(pos))


def run(cfg: ScenarioConfig, label: str = "run") -> RunReport:
    """Execute one scenario to its configured duration."""
    return Simulation(validate(cfg), label).run()


def _run_labeled(args: tuple[ScenarioConfig, str]) -> RunReport:
    return run(*args)


def _map(jobs: list[tuple[ScenarioConfig, str]], workers: int) -> list[RunReport]:
    if workers <= 1 or len(jobs) <= 1:
        return [_run_labeled(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_labeled, jobs))


def truncated(cfg: ScenarioConfig, count: int) -> ScenarioConfig:
    """Keep the first ``count`` grid nodes in row-major order."""
    if count < 2:
        raise ConfigError("sweep.counts", f"node count {count} is below 2")
    if count > cfg.grid.capacity:
        raise ConfigError("sweep.counts", f"node count {count} exceeds grid capacity "
                                          f"{cfg.grid.capacity}")
    out = copy.deepcopy(cfg)
    out.grid.count = count
    if out.traffic.pairs is not None:
        keep = {n for n, _ in out.grid.positions()} | {n.id for n in out.nodes} | {out.anchor.id}
        out.traffic.pairs = {s: d for s, d in out.traffic.pairs.items() if s in keep and d in keep}
    return validate(out)


@dataclass
class SweepResult:
    counts: list[int]
    reports: list[RunReport]

    @property
    def totals(self) -> list[float]:
        return [r.total_energy_mj for r in self.reports]

    @property
    def strictly_increasing(self) -> bool:
        t = self.totals
        return all(a < b for a, b in zip(t, t[1:]))


def sweep(cfg: ScenarioConfig, counts: list[int], workers: int = 1) -> SweepResult:
    """One run per grid size; the anchor is always kept."""
    if not counts:
        raise ConfigError("sweep.counts", "need at least one node count")
    configs = [truncated(cfg, n) for n in counts]
    reports = _map([(c, f"n={n}") for c, n in zip(configs, counts)], workers)
    return SweepResult(list(counts), reports)


def condition_config(cfg: ScenarioConfig, condition: str) -> ScenarioConfig:
    out = copy.deepcopy(cfg)
    if condition == "baseline":
        out.attack.kind = "none"
        out.attack.attackers = []
        out.ids.enabled = False
    elif condition == "attack":
        out.ids.enabled = False
    elif condition == "attack+ids":
        out.ids.enabled = True
    else:
        raise ConfigError("conditions", f"unknown condition {condition!r}; choose from {CONDITIONS}")
    return validate(out)


@dataclass
class CompareResult:
    conditions: list[str]
    reports: list[RunReport]
    comparison: ConditionComparison
    svg: str | None = None


def compare(cfg: ScenarioConfig, conditions: list[str] = CONDITIONS, svg: bool = False,
            workers: int = 1) -> CompareResult:
    """Run each condition on the same seed and topology and compare energy."""
    conditions = list(conditions)
    if len(conditions) < 2:
        raise ConfigError("conditions", "need at least two conditions")
    if len(set(conditions)) != len(conditions):
        raise ConfigError("conditions", "conditions must be unique")
    for c in conditions:
        if c not in CONDITIONS:
            raise ConfigError("conditions", f"unknown condition {c!r}; choose from {CONDITIONS}")
        if c != "baseline" and cfg.attack.kind == "none":
            raise ConfigError("conditions", f"{c!r} requested while attack.kind is 'none'")
    conditions = sorted(conditions, key=CONDITIONS.index)
    reports = _map([(condition_config(cfg, c), c) for c in conditions], workers)
    comparison = compare_conditions([r.energy for r in reports])
    chart = None
    if svg:
        from .report import grouped_bar_svg
        chart = grouped_bar_svg(
            {r.label: r.energy.cumulative_mj for r in reports},
            title=f"{cfg.name}: cumulative energy per node (mJ)")
    return CompareResult(conditions, reports, comparison, chart)


def seeded(cfg: ScenarioConfig, seed: int) -> ScenarioConfig:
    out = copy.deepcopy(cfg)
    out.seed = seed
    return out

