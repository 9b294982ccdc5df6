"""Wormhole, Sybil and flooding behaviors injected into a running network."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .kernel import seconds_to_ticks
from .mote import MAX_PAYLOAD, Message, Mote, Network
from .radio import Position

ATTACK_KINDS = ("none", "wormhole", "sybil", "flooding")


@dataclass
class WormholeConfig:
    endpoint_a: int | None = None
    endpoint_b: int | None = None


@dataclass
class SybilConfig:
    fake_count: int = 3
    fake_ids: list[int] | None = None
    forged_positions: list[Position] | None = None
    # Forged claims are drawn from the deployment box grown by this margin.
    forge_margin: float = 10.0


@dataclass
class FloodingConfig:
    period: float = 0.25
    payload: int = MAX_PAYLOAD
    # Flood frames advertise the attacker's position shifted by this vector.
    spoof_offset: tuple[float, float] = (20.0, 0.0)


@dataclass
class AttackConfig:
    kind: str = "none"
    attackers: list[int] = field(default_factory=list)
    wormhole: WormholeConfig = field(default_factory=WormholeConfig)
    sybil: SybilConfig = field(default_factory=SybilConfig)
    flooding: FloodingConfig = field(default_factory=FloodingConfig)


@dataclass
class AttackTruth:
    """Ground truth an experiment can score the IDS against."""
    kind: str = "none"
    attackers: set[int] = field(default_factory=set)
    fake_ids: set[int] = field(default_factory=set)
    # src ids whose frames were replayed, keyed by the replaying endpoint
    tunneled: dict[int, set[int]] = field(default_factory=dict)
    flood_frames: int = 0

    def implicated(self, near: int | None = None) -> set[int]:
        """Identities a correct detector may declare.

        For a wormhole, ``near`` restricts tunneled sources to those replayed
        by the endpoint that shares a neighborhood with that node.
        """
        ids = set(self.attackers) | set(self.fake_ids)
        if near is None:
            for srcs in self.tunneled.values():
                ids |= srcs
        else:
            ids |= self.tunneled.get(near, set())
        return ids


def apply_wormhole(network: Network, endpoint_a: int, endpoint_b: int,
                   truth: AttackTruth | None = None) -> None:
    """Tunnel every frame heard at one endpoint out of the other, one tick later.

    Replays keep the original source id and claimed position; the replaying
    endpoint pays TX and CPU for them.
    """
    if endpoint_a == endpoint_b:
        raise ValueError("wormhole endpoints must be distinct")
    for e in (endpoint_a, endpoint_b):
        if e not in network.motes:
            raise ValueError(f"wormhole endpoint {e} is not a node")
    truth = truth if truth is not None else AttackTruth("wormhole")
    sim = network.sim

    def tunnel(into: Mote, far: Mote):
        def hook(msg: Message, rssi: float) -> None:
            if msg.tunneled or msg.src == far.id:
                return
            truth.tunneled.setdefault(far.id, set()).add(msg.src)
            replay = replace(msg, tunneled=True)
            sim.schedule_in(1, lambda: network.transmit(far, replay, tag="tunnel/"),
                            target=far.id, payload="wormhole")
        network.add_hook(into.id, hook)

    a, b = network.motes[endpoint_a], network.motes[endpoint_b]
    network.promiscuous.update((endpoint_a, endpoint_b))
    tunnel(a, b)
    tunnel(b, a)


def apply_sybil(network: Network, attacker: int, fake_ids: list[int],
                forged_positions: list[Position], beacon_period: float,
                beacon_jitter: float = 0.0, payload: int = 12) -> None:
    """Emit extra beacons under forged identities from the attacker's radio."""
    if len(fake_ids) != len(forged_positions):
        raise ValueError("need one forged position per fake identity")
    clash = set(fake_ids) & set(network.motes)
    if clash:
        raise ValueError(f"fake ids collide with real ids: {sorted(clash)}")
    if len(set(fake_ids)) != len(fake_ids):
        raise ValueError("fake ids must be unique")
    mote = network.motes[attacker]
    sim = network.sim
    for fid, pos in zip(fake_ids, forged_positions):
        def fire(fid=fid, pos=pos):
            msg = Message("beacon", fid, pos, payload, sim.now)
            network.transmit(mote, msg, tag="sybil/")
        mote._periodic(beacon_period, beacon_jitter, f"attack/{attacker}/sybil/{fid}", fire)


def apply_flooding(network: Network, attacker: int, period: float,
                   payload: int = MAX_PAYLOAD,
                   claimed_position: Position | None = None,
                   truth: AttackTruth | None = None) -> None:
    """Broadcast max-length frames every ``period`` seconds."""
    if not period > 0:
        raise ValueError("flooding period must be positive")
    mote = network.motes[attacker]
    sim = network.sim
    claim = claimed_position if claimed_position is not None else mote.claimed_position
    step = seconds_to_ticks(period)

    def fire(k: int) -> None:
        msg = Message("broadcast_app", attacker, claim, payload, sim.now)
        network.transmit(mote, msg, tag="flood/")
        if truth is not None:
            truth.flood_frames += 1
        sim.schedule((k + 1) * step, lambda: fire(k + 1), target=attacker, payload="flood")

    sim.schedule(step, lambda: fire(1), target=attacker, payload="flood")
