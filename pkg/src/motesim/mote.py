"""Motes, their powertrace counters, and the shared radio medium."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

from .energy import BatteryModel, PowertraceCounters
from .kernel import TICKS_PER_SECOND, Simulator, seconds_to_ticks
from .radio import (EnvironmentProfile, Position, RadioSpec, deliver, geometric_distance,
                    retransmissions, rssi_at)

RADIO_BITRATE = 250_000  # bit/s, 802.15.4 at 2.4 GHz
FRAME_OVERHEAD = 33  # bytes added to every payload (PHY + MAC + 6LoWPAN headers)
MAX_PAYLOAD = 114
ACK_BYTES = 11  # 802.15.4 ACK including PHY header
PROCESSING_TICKS = 66  # ~2 ms of CPU per frame sent or received
OVERHEAR_FRACTION = 0.25
RING_SIZE = 16

ROLES = ("normal", "anchor", "attacker")
KINDS = ("beacon", "broadcast_app", "unicast_app", "ids_probe")


def frame_ticks(payload: int) -> int:
    """Airtime of a data frame carrying ``payload`` bytes."""
    return math.ceil((payload + FRAME_OVERHEAD) * 8 * TICKS_PER_SECOND / RADIO_BITRATE)


ACK_TICKS = math.ceil(ACK_BYTES * 8 * TICKS_PER_SECOND / RADIO_BITRATE)


@dataclass(frozen=True)
class Message:
    kind: str
    src: int
    claimed_src_position: Position
    length: int
    sent_at: int
    dest: int | None = None
    tunneled: bool = False
    data: tuple = ()

    def __post_init__(self):
        if not 1 <= self.length <= MAX_PAYLOAD:
            raise ValueError(f"payload length {self.length} outside [1, {MAX_PAYLOAD}]")
        if self.kind not in KINDS:
            raise ValueError(f"unknown message kind {self.kind!r}")


@dataclass
class NeighborRecord:
    neighbor: int
    claimed_position: Position
    rssi: deque = field(default_factory=lambda: deque(maxlen=RING_SIZE))
    last_heard: int = 0

    def push(self, rssi: float, tick: int) -> None:
        self.rssi.append(rssi)
        self.last_heard = tick


@dataclass
class MoteSpec:
    id: int
    position: Position
    claimed_position: Position | None = None
    role: str = "normal"
    battery: BatteryModel = field(default_factory=BatteryModel)

    def __post_init__(self):
        if self.claimed_position is None:
            self.claimed_position = self.position
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")


class Mote:
    """One node: counters, neighbor table, blacklist and traffic apps.

    The MCU is in LPM whenever it is not charged CPU ticks, so LPM is derived
    at snapshot time as elapsed minus CPU. Idle radio listening from periodic
    channel checks is added to the RX counter analytically.
    """

    def __init__(self, spec: MoteSpec, network: Network | None = None,
                 channel_check_rate: int = 0, channel_check_ticks: int = 0,
                 ring_size: int = RING_SIZE):
        self.spec = spec
        self.id = spec.id
        self.position = spec.position
        self.claimed_position = spec.claimed_position
        self.role = spec.role
        self.network = network
        self.channel_check_rate = channel_check_rate
        self.channel_check_ticks = channel_check_ticks
        self.ring_size = ring_size
        self.cpu = 0
        self.tx = 0
        self.rx = 0
        self.neighbors: dict[int, NeighborRecord] = {}
        self.blacklist: set[int] = set()
        self.sent = 0
        self.received = 0
        self.on_alert: Callable[[Message], None] | None = None

    @property
    def honest(self) -> bool:
        return self.role != "attacker"

    # -- accounting ---------------------------------------------------------
    def idle_listen_ticks(self, now: int) -> int:
        if not self.channel_check_rate:
            return 0
        return (now * self.channel_check_rate // TICKS_PER_SECOND) * self.channel_check_ticks

    def snapshot_powertrace(self, now: int) -> PowertraceCounters:
        return PowertraceCounters(cpu=self.cpu, lpm=now - self.cpu, tx=self.tx,
                                  rx=self.rx + self.idle_listen_ticks(now))

    # -- reception ----------------------------------------------------------
    def on_frame_received(self, msg: Message, rssi: float, now: int) -> NeighborRecord:
        rec = self.neighbors.get(msg.src)
        if rec is None:
            rec = NeighborRecord(msg.src, msg.claimed_src_position,
                                 deque(maxlen=self.ring_size))
            self.neighbors[msg.src] = rec
        rec.claimed_position = msg.claimed_src_position
        rec.push(rssi, now)
        return rec

    def accept(self, msg: Message) -> bool:
        return msg.src not in self.blacklist

    def hear(self, msg: Message, rssi: float, airtime: int, copies: int) -> bool:
        """Full-frame reception; returns False when the frame is filtered."""
        if not self.accept(msg):
            return False
        self.rx += airtime * copies
        self.cpu += PROCESSING_TICKS
        self.received += 1
        now = self.network.sim.now if self.network else 0
        self.on_frame_received(msg, rssi, now)
        if msg.kind == "ids_probe" and self.honest and msg.data:
            self.blacklist.update(i for i in msg.data if i != self.id)
        return True

    def overhear(self, msg: Message, airtime: int, copies: int) -> None:
        if self.accept(msg):
            self.rx += math.ceil(airtime * OVERHEAR_FRACTION) * copies

    # -- applications -------------------------------------------------------
    def _message(self, kind: str, length: int, dest: int | None = None) -> Message:
        return Message(kind, self.id, self.claimed_position, length,
                       self.network.sim.now, dest)

    def _periodic(self, period_s: float, jitter_s: float, stream: str,
                  fire: Callable[[], None]) -> None:
        sim = self.network.sim
        period = seconds_to_ticks(period_s)
        jitter = seconds_to_ticks(jitter_s)
        rng = sim.rng(stream)

        def slot(k: int) -> None:
            offset = math.floor(rng.uniform(-jitter, jitter) + 0.5) if jitter else 0
            at = max(sim.now, k * period + offset)

            def go():
                fire()
                slot(k + 1)
            sim.schedule(at, go, target=self.id, payload=stream)
        slot(1)

    def start_broadcast_app(self, period: float, jitter: float, payload: int = 16) -> None:
        def fire():
            self.network.transmit(self, self._message("broadcast_app", payload))
        self._periodic(period, jitter, f"jitter/{self.id}", fire)

    def start_unicast_app(self, peer: int, period: float, jitter: float,
                          payload: int = 16) -> None:
        if peer not in self.network.motes:
            raise ValueError(f"unknown unicast peer {peer}")

        def fire():
            self.network.transmit(self, self._message("unicast_app", payload, dest=peer))
        self._periodic(period, jitter, f"jitter/{self.id}", fire)

    def start_beacons(self, period: float, jitter: float, payload: int = 12) -> None:
        def fire():
            self.network.transmit(self, self._message("beacon", payload))
        self._periodic(period, jitter, f"beacon/{self.id}", fire)


class Network:
    """Shared medium: computes RSSI per link and charges both ends.

    Every link has its own shadowing stream and every transmitter its own
    retransmission stream; attack traffic uses separate streams so honest
    traffic draws identical values with or without an attack.
    """

    def __init__(self, sim: Simulator, radio: RadioSpec, env: EnvironmentProfile):
        self.sim = sim
        self.radio = radio
        self.env = env
        self.motes: dict[int, Mote] = {}
        self._order: list[Mote] = []
        self.promiscuous: set[int] = set()
        self.hear_hooks: dict[int, list[Callable[[Message, float], None]]] = {}
        self.frames_sent = 0

    def add(self, mote: Mote) -> Mote:
        if mote.id in self.motes:
            raise ValueError(f"duplicate mote id {mote.id}")
        mote.network = self
        self.motes[mote.id] = mote
        self._order = [self.motes[i] for i in sorted(self.motes)]
        return mote

    def add_hook(self, mote_id: int, hook: Callable[[Message, float], None]) -> None:
        self.hear_hooks.setdefault(mote_id, []).append(hook)

    def _receptions(self, sender: Mote, origin: Position, tag: str) -> Iterable[tuple[Mote, float]]:
        radio, env, sim = self.radio, self.env, self.sim
        for r in self._order:
            if r is sender:
                continue
            d = geometric_distance(origin, r.position)
            rssi = rssi_at(radio, d, env, sim.rng(f"shadow/{tag}{sender.id}->{r.id}"))
            if rssi >= radio.rx_sensitivity:
                yield r, rssi

    def transmit(self, sender: Mote, msg: Message, tag: str = "") -> None:
        """Send ``msg`` from ``sender``'s physical position.

        ``tag`` selects the rng streams ("" for honest traffic).
        """
        airtime = frame_ticks(msg.length)
        retx_rng = self.sim.rng(f"retx/{tag}{sender.id}")
        heard = list(self._receptions(sender, sender.position, tag))
        self.frames_sent += 1
        sender.sent += 1
        sender.cpu += PROCESSING_TICKS
        if msg.dest is None:
            copies = 1 + retransmissions(self.env, retx_rng)
            sender.tx += airtime * copies
            for r, rssi in heard:
                if r.hear(msg, rssi, airtime, copies):
                    self._fire_hooks(r, msg, rssi)
            return
        dest_rssi = next((rssi for r, rssi in heard if r.id == msg.dest), -math.inf)
        delivered, k = deliver(self.radio, dest_rssi, self.env, retx_rng)
        copies = 1 + k
        sender.tx += airtime * copies
        for r, rssi in heard:
            if r.id == msg.dest:
                if r.hear(msg, rssi, airtime, copies):
                    r.tx += ACK_TICKS
                    sender.rx += ACK_TICKS
                    self._fire_hooks(r, msg, rssi)
            elif r.id in self.promiscuous:
                if r.hear(msg, rssi, airtime, copies):
                    self._fire_hooks(r, msg, rssi)
            else:
                r.overhear(msg, airtime, copies)

    def _fire_hooks(self, r: Mote, msg: Message, rssi: float) -> None:
        hooks = self.hear_hooks.get(r.id)
        if hooks:
            for h in hooks:
                h(msg, rssi)

    def broadcast_alert(self, sender: Mote, blacklisted: Iterable[int]) -> None:
        msg = replace(sender._message("ids_probe", 8), data=tuple(sorted(blacklisted)))
        self.transmit(sender, msg, tag="ids/")
