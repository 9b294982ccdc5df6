"""RSSI range-consistency intrusion detection run by the anchor node.

Each round the anchor compares, for every identity it has heard, the
distance implied by the identity's claimed position against the distance
implied by the median RSSI of its frames. Identities that are repeatedly
inconsistent over a sliding window are declared attackers and blacklisted
network-wide.
"""
from __future__ import annotations

import statistics
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .kernel import seconds_to_ticks
from .mote import Mote, Network, NeighborRecord
from .radio import EnvironmentProfile, Position, RadioSpec, estimate_distance, geometric_distance

CLEAN, SUSPECTED, ATTACKER = "Clean", "Suspected", "Attacker"


class InsufficientSamplesError(ValueError):
    pass


@dataclass
class IdsConfig:
    enabled: bool = False
    epsilon: float = 1.0
    rounds: int = 10
    threshold: float = 0.7
    round_period: float = 10.0
    monitor_6br: bool = True
    cpu_cost_per_round: int = 1638
    rx_listen_per_round: int = 3277

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if not 0 < self.threshold <= 1:
            raise ValueError("threshold must be in (0, 1]")
        if not self.round_period > 0:
            raise ValueError("round_period must be positive")


@dataclass
class Evidence:
    node: int
    victim: int
    d_geom: float
    d_rssi: float
    flagged: bool
    out_of_range: bool
    manifest_mismatch: float | None = None


@dataclass
class Suspicion:
    node: int
    window: deque
    flagged_rounds: int = 0
    observed_rounds: int = 0
    last_evidence: Evidence | None = None

    @property
    def p(self) -> float:
        return sum(self.window) / len(self.window) if self.window else 0.0


@dataclass
class Verdict:
    node: int
    state: str = CLEAN
    p: float = 0.0
    victims: list[int] = field(default_factory=list)
    declared_at: int | None = None
    round: int | None = None


@dataclass(frozen=True)
class LinkKey:
    pair: tuple[int, int]
    bits: str


def run_consistency_round(observer: int, position: Position,
                          records: Mapping[int, NeighborRecord], radio: RadioSpec,
                          env: EnvironmentProfile, epsilon: float,
                          skip: Iterable[int] = (),
                          manifest: Mapping[int, Position] | None = None,
                          heard_since: int | None = None) -> dict[int, Evidence]:
    """Evaluate every neighbor record held by ``observer``.

    An identity is flagged when its RSSI-implied distance differs from its
    claimed distance by more than ``epsilon``, or when it is heard at all
    while its claim puts it beyond radio range. Records with an empty RSSI
    ring, or not heard after tick ``heard_since``, are skipped.
    """
    r_max = radio.max_range(env)
    skip = set(skip)
    out = {}
    for nid in sorted(records):
        rec = records[nid]
        if nid in skip or nid == observer or not rec.rssi:
            continue
        if heard_since is not None and rec.last_heard <= heard_since:
            continue
        d_geom = geometric_distance(position, rec.claimed_position)
        d_rssi = estimate_distance(radio, statistics.median(rec.rssi), env)
        out_of_range = d_geom > r_max
        flagged = abs(d_rssi - d_geom) > epsilon or out_of_range
        mismatch = None
        if manifest is not None and nid in manifest:
            mismatch = geometric_distance(manifest[nid], rec.claimed_position)
        out[nid] = Evidence(nid, observer, d_geom, d_rssi, flagged, out_of_range, mismatch)
    return out


def update_suspicion(table: dict[int, Suspicion], flags: Mapping[int, Evidence],
                     window: int) -> dict[int, Suspicion]:
    for nid in sorted(flags):
        ev = flags[nid]
        s = table.get(nid)
        if s is None:
            s = table[nid] = Suspicion(nid, deque(maxlen=window))
        s.observed_rounds += 1
        if ev.flagged:
            s.flagged_rounds += 1
        s.window.append(1 if ev.flagged else 0)
        s.last_evidence = ev
    return table


def declare(suspicion: Suspicion, threshold: float, window: int) -> str:
    p = suspicion.p
    if p == 0:
        return CLEAN
    if p >= threshold and suspicion.observed_rounds >= window:
        return ATTACKER
    return SUSPECTED


def derive_link_key(window: list[float], length: int = 32,
                    pair: tuple[int, int] = (0, 0)) -> LinkKey:
    """Quantize an RSSI window into key bits against its median."""
    if len(window) < length:
        raise InsufficientSamplesError(
            f"need {length} RSSI samples for a {length}-bit key, have {len(window)}")
    med = statistics.median(window)
    return LinkKey(tuple(sorted(pair)), "".join("1" if s > med else "0" for s in window[:length]))


class IdsEngine:
    """Anchor-resident detection loop with mitigation and border-router escalation."""

    def __init__(self, config: IdsConfig, anchor: Mote, network: Network,
                 manifest: Mapping[int, Position] | None = None,
                 border_router: int | None = None, alert_delay: float = 10.0):
        self.config = config
        self.anchor = anchor
        self.network = network
        self.manifest = dict(manifest or {})
        self.border_router = border_router
        self.alert_delay = seconds_to_ticks(alert_delay)
        self.round_period = seconds_to_ticks(config.round_period)
        self.cpu_per_round = config.cpu_cost_per_round
        self.escalated = False
        self.round_index = 0
        self.suspicion: dict[int, Suspicion] = {}
        self.verdicts: dict[int, Verdict] = {}
        self.log: list[Verdict] = []
        self.last_round_flags: dict[int, Evidence] = {}
        self._last_round_at: int | None = None

    def start(self) -> None:
        sim = self.network.sim
        sim.schedule(sim.now + self.round_period, self.run_round,
                     target=self.anchor.id, payload="ids-round")

    def verdict(self, node: int) -> Verdict:
        return self.verdicts.get(node) or Verdict(node)

    @property
    def attackers(self) -> list[int]:
        return sorted(n for n, v in self.verdicts.items() if v.state == ATTACKER)

    def _observe(self) -> dict[int, Evidence]:
        anchor = self.anchor
        net = self.network
        skip = set(anchor.blacklist) | {n for n, v in self.verdicts.items() if v.state == ATTACKER}
        since = self._last_round_at
        flags = run_consistency_round(anchor.id, anchor.claimed_position, anchor.neighbors,
                                      net.radio, net.env, self.config.epsilon, skip,
                                      self.manifest, since)
        if self.escalated:
            # Link reports overheard from every neighbor the anchor can hear.
            for mid in sorted(anchor.neighbors):
                m = net.motes.get(mid)
                if m is None or mid in skip:
                    continue
                extra = run_consistency_round(m.id, m.claimed_position, m.neighbors,
                                              net.radio, net.env, self.config.epsilon,
                                              skip | {anchor.id}, self.manifest, since)
                for nid, ev in extra.items():
                    cur = flags.get(nid)
                    if cur is None or (ev.flagged and not cur.flagged):
                        flags[nid] = ev
        return flags

    def run_round(self) -> None:
        sim = self.network.sim
        self.round_index += 1
        flags = self._observe()
        self._last_round_at = sim.now
        self.last_round_flags = flags
        self.anchor.cpu += self.cpu_per_round
        self.anchor.rx += self.config.rx_listen_per_round
        update_suspicion(self.suspicion, flags, self.config.rounds)
        newly = []
        for nid in sorted(flags):
            prev = self.verdict(nid)
            if prev.state == ATTACKER:
                continue
            s = self.suspicion[nid]
            state = declare(s, self.config.threshold, self.config.rounds)
            if state == ATTACKER and prev.state == CLEAN:
                state = SUSPECTED
            v = Verdict(nid, state, s.p)
            if state != prev.state:
                v.declared_at = sim.now
                v.round = self.round_index
                if state == ATTACKER:
                    v.victims = self.victims_of(nid)
                    newly.append(v)
                self.log.append(v)
            else:
                v.declared_at, v.round = prev.declared_at, prev.round
            self.verdicts[nid] = v
            if (state != CLEAN and nid == self.border_router and self.config.monitor_6br
                    and not self.escalated):
                self.escalate_6br()
        for v in newly:
            self.mitigate(v)
        sim.schedule(sim.now + self.round_period, self.run_round,
                     target=self.anchor.id, payload="ids-round")

    def victims_of(self, nid: int) -> list[int]:
        """Undeclared nodes whose own record of ``nid`` is inconsistent."""
        net = self.network
        excluded = set(self.anchor.blacklist) | set(self.attackers)
        out = []
        for m in net.motes.values():
            if m.id in excluded or nid not in m.neighbors:
                continue
            ev = run_consistency_round(m.id, m.claimed_position, {nid: m.neighbors[nid]},
                                       net.radio, net.env, self.config.epsilon)
            if nid in ev and ev[nid].flagged:
                out.append(m.id)
        return sorted(out)

    def mitigate(self, verdict: Verdict) -> bool:
        """Blacklist an Attacker verdict; anything else is rejected."""
        if verdict.state != ATTACKER:
            return False
        self.anchor.blacklist.add(verdict.node)
        sim = self.network.sim
        sim.schedule(sim.now + self.alert_delay,
                     lambda: self.network.broadcast_alert(self.anchor, self.anchor.blacklist),
                     target=self.anchor.id, payload="ids-alert")
        return True

    def escalate_6br(self) -> None:
        if self.escalated:
            return
        self.escalated = True
        self.round_period = max(1, self.round_period // 2)
        self.cpu_per_round = 2 * self.config.cpu_cost_per_round
