"""Deterministic discrete-event engine: virtual clock, event queue, seeded RNG streams.

All simulation timestamps are integer microseconds (``SimTime``). Events with
equal fire time dispatch in insertion order, so a fixed setup order yields a
fully reproducible schedule.
"""

from __future__ import annotations

import hashlib
import heapq
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

SimTime = int

MICROSECOND = 1
MILLISECOND = 1_000
SECOND = 1_000_000


def seconds(value: float) -> SimTime:
    """Convert seconds to the integer-microsecond clock, rounding to nearest."""
    return int(round(value * SECOND))


def to_seconds(t: SimTime) -> float:
    return t / SECOND


class SchedulingError(Exception):
    """Raised when an event is scheduled in the past (a programming error)."""


@dataclass(order=True)
class _Entry:
    fire_time: SimTime
    sequence_no: int
    action: Callable[[], None] = field(compare=False)
    cancelled: bool = field(default=False, compare=False)


class EventHandle:
    """Permits cancellation of a scheduled event."""

    __slots__ = ("_entry",)

    def __init__(self, entry: _Entry):
        self._entry = entry

    @property
    def fire_time(self) -> SimTime:
        return self._entry.fire_time

    def cancel(self) -> None:
        self._entry.cancelled = True

    @property
    def cancelled(self) -> bool:
        return self._entry.cancelled


@dataclass
class RunReport:
    end_time: SimTime
    events_dispatched: int
    wall_seconds: float


class RngRegistry:
    """Named, mutually independent RNG streams derived from one 64-bit seed.

    Identical (seed, stream_id) pairs yield identical draw sequences, and each
    stream can be enabled or consumed without perturbing the others.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._streams: dict[str, np.random.Generator] = {}

    def stream(self, stream_id: str) -> np.random.Generator:
        gen = self._streams.get(stream_id)
        if gen is None:
            digest = hashlib.sha256(stream_id.encode("utf-8")).digest()
            label_key = int.from_bytes(digest[:8], "little")
            gen = np.random.default_rng(np.random.SeedSequence([self.seed, label_key]))
            self._streams[stream_id] = gen
        return gen


class Simulator:
    """Single-threaded event loop over a (fire_time, sequence_no) binary heap."""

    def __init__(self, seed: int = 0):
        self.now: SimTime = 0
        self.rng = RngRegistry(seed)
        self._queue: list[_Entry] = []
        self._next_seq = 0
        self._dispatched = 0

    def schedule_at(self, fire_time: SimTime, action: Callable[[], None]) -> EventHandle:
        if fire_time < self.now:
            raise SchedulingError(
                f"cannot schedule event at t={fire_time} us: clock is already at {self.now} us"
            )
        entry = _Entry(int(fire_time), self._next_seq, action)
        self._next_seq += 1
        heapq.heappush(self._queue, entry)
        return EventHandle(entry)

    def schedule_in(self, delay: SimTime, action: Callable[[], None]) -> EventHandle:
        if delay < 0:
            raise SchedulingError(f"negative delay {delay} us")
        return self.schedule_at(self.now + delay, action)

    def peek_time(self) -> SimTime | None:
        while self._queue and self._queue[0].cancelled:
            heapq.heappop(self._queue)
        return self._queue[0].fire_time if self._queue else None

    def run_until(self, end: SimTime) -> RunReport:
        """Dispatch every event with fire_time <= end, then set the clock to end."""
        start_wall = time.perf_counter()
        queue = self._queue
        while queue:
            entry = queue[0]
            if entry.cancelled:
                heapq.heappop(queue)
                continue
            if entry.fire_time > end:
                break
            heapq.heappop(queue)
            self.now = entry.fire_time
            entry.action()
            self._dispatched += 1
        self.now = end
        return RunReport(end, self._dispatched, time.perf_counter() - start_wall)
