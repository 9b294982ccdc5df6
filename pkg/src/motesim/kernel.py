"""Deterministic discrete-event scheduler.

Time is counted in rtimer ticks, 32768 per simulated second, so powertrace
counters can be fed to the energy equation without unit conversion.
"""
from __future__ import annotations

import hashlib
import heapq
import math
import random
from dataclasses import dataclass, field
from typing import Any, Callable

TICKS_PER_SECOND = 32768


class SchedulingError(ValueError):
    """Raised when an event is scheduled in the past."""


def seconds_to_ticks(seconds: float) -> int:
    """Convert seconds to ticks, rounding half-up."""
    return int(math.floor(seconds * TICKS_PER_SECOND + 0.5))


def ticks_to_seconds(ticks: int) -> float:
    return ticks / TICKS_PER_SECOND


@dataclass(eq=False)
class Event:
    fire_at: int
    seq: int
    target: Any = None
    payload: Any = None
    action: Callable[[], None] | None = field(default=None, repr=False)
    cancelled: bool = False

    def cancel(self) -> None:
        self.cancelled = True


class RngStream(random.Random):
    """Independent random stream keyed by (seed, label).

    The child seed is a SHA-256 digest of both parts, so a stream's draws do
    not depend on how many other streams exist or the order they were made.
    """

    def __new__(cls, seed: int, stream: str):
        return super().__new__(cls)

    def __init__(self, seed: int, stream: str):
        self.root_seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.stream = stream
        digest = hashlib.sha256(f"{self.root_seed}/{stream}".encode()).digest()
        super().__init__(int.from_bytes(digest, "big"))


class Simulator:
    """Single-threaded event loop.

    Events are ordered by ``(fire_at, seq)`` where ``seq`` is the insertion
    counter, giving a total order that is stable across runs.
    """

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.now = 0
        self._seq = 0
        self._queue: list[tuple[int, int, Event]] = []
        self._streams: dict[str, RngStream] = {}
        self.processed = 0

    def rng(self, stream: str) -> RngStream:
        try:
            return self._streams[stream]
        except KeyError:
            r = self._streams[stream] = RngStream(self.seed, stream)
            return r

    def schedule(self, fire_at: int, action: Callable[[], None] | None = None,
                 target: Any = None, payload: Any = None) -> Event:
        if fire_at < self.now:
            raise SchedulingError(
                f"event at tick {fire_at} is before current tick {self.now}")
        ev = Event(int(fire_at), self._seq, target, payload, action)
        self._seq += 1
        heapq.heappush(self._queue, (ev.fire_at, ev.seq, ev))
        return ev

    def schedule_in(self, delay: int, action: Callable[[], None] | None = None,
                    target: Any = None, payload: Any = None) -> Event:
        return self.schedule(self.now + delay, action, target, payload)

    def pending(self) -> int:
        return sum(1 for _, _, ev in self._queue if not ev.cancelled)

    def run_until(self, end_tick: int) -> int:
        """Process every event with ``fire_at <= end_tick``; return how many ran."""
        if end_tick < self.now:
            raise SchedulingError(
                f"end tick {end_tick} is before current tick {self.now}")
        count = 0
        queue = self._queue
        while queue and queue[0][0] <= end_tick:
            fire_at, _, ev = heapq.heappop(queue)
            if ev.cancelled:
                continue
            self.now = fire_at
            if ev.action is not None:
                ev.action()
            count += 1
        self.now = end_tick
        self.processed += count
        return count
