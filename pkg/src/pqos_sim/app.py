"""Sensor-streaming application: periodic frame bursts per application mode,
fragmentation into MTU-sized pieces, sink-side reassembly, windowed statistics,
and the constant-bit-rate downlink command flow.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .engine import SimTime, Simulator, seconds
from .ran import Direction, Packet, PacketKind, RanDirection


@dataclass
class AppModeConfig:
    """One (compression, segmentation) configuration of the sensor stream."""

    id: str
    chamfer_distance: float
    mean_frame_bytes: int
    jitter_frac: float = 0.1


@dataclass
class FrameTrace:
    """Recorded frame sizes: rows of (frame_index, mode_id, size_bytes)."""

    sizes: dict[str, list[int]]  # mode id -> size per frame index
    loop: bool = True  # restart-at-end when True, stop-at-end otherwise

    @property
    def frame_count(self) -> int:
        return min(len(v) for v in self.sizes.values()) if self.sizes else 0


class FrameTraceError(Exception):
    pass


def parse_frame_trace(source: io.TextIOBase | str, loop: bool = True) -> FrameTrace:
    """Parse a frame trace CSV with header frameIndex,mode,sizeBytes."""
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    header = tuple(col.strip() for col in next(reader, ()))
    if header != ("frameIndex", "mode", "sizeBytes"):
        raise FrameTraceError(f"unknown frame trace header {header!r}")
    rows: dict[str, dict[int, int]] = {}
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            idx, mode, size = int(row[0]), row[1].strip(), int(row[2])
        except (ValueError, IndexError) as exc:
            raise FrameTraceError(f"line {line_no}: {exc}") from None
        if size <= 0:
            raise FrameTraceError(f"line {line_no}: sizeBytes must be positive")
        rows.setdefault(mode, {})[idx] = size
    sizes = {}
    for mode, by_idx in rows.items():
        sizes[mode] = [by_idx[i] for i in sorted(by_idx)]
    return FrameTrace(sizes=sizes, loop=loop)


@dataclass
class Burst:
    """One sensor frame and its reassembly state at the sink."""

    burst_id: int
    ue_id: int
    mode_index: int
    mode_id: str
    chamfer_distance: float
    total_bytes: int
    generated_at: SimTime
    fragment_count: int
    fragments_accepted: int = 0
    fragments_received: int = 0
    completed_at: SimTime | None = None
    received_indices: set[int] | None = None  # packet-level path only

    @property
    def delay_us(self) -> SimTime | None:
        if self.completed_at is None:
            return None
        return self.completed_at - self.generated_at


@dataclass
class AppStatsWindow:
    ue_id: int
    window_start: SimTime
    window_end: SimTime
    bursts_sent: int
    bursts_received: int
    bytes_received: int
    mean_burst_delay_s: float
    prr: float
    delay_defined: bool
    mode_index: int
    mode_id: str
    chamfer_distance: float
    last_frame_bytes: int


def fragment_count_for(total_bytes: int, mtu_payload: int) -> int:
    return math.ceil(total_bytes / mtu_payload)


class SensorStream:
    """Per-vehicle frame generator plus the sink-side window accounting.

    Mode changes take effect from the next generated frame; in-flight bursts
    keep the mode they were generated under.
    """

    def __init__(
        self,
        sim: Simulator,
        ue_id: int,
        modes: list[AppModeConfig],
        start_mode_index: int,
        frame_period: SimTime,
        mtu_payload: int,
        uplink: RanDirection,
        rng: np.random.Generator,
        end_time: SimTime,
        frame_trace: FrameTrace | None = None,
    ):
        self.sim = sim
        self.ue_id = ue_id
        self.modes = modes
        self.mode_index = start_mode_index
        self.frame_period = frame_period
        self.mtu_payload = mtu_payload
        self.uplink = uplink
        self.rng = rng
        self.end_time = end_time
        self.frame_trace = frame_trace
        self.halted = False
        self.frame_counter = 0
        self.bursts: list[Burst] = []
        self.bursts_sent_total = 0
        self.bursts_received_total = 0
        self.duplicate_fragments = 0
        self.last_frame_bytes = 0
        self._next_burst_id = 0
        self._window_start: SimTime = 0
        self._win_sent = 0
        self._win_received = 0
        self._win_bytes = 0
        self._win_delays_us: list[int] = []

    def start(self) -> None:
        self.sim.schedule_at(0, self._generate_frame)

    def set_mode(self, mode_index: int, t: SimTime) -> None:
        if not 0 <= mode_index < len(self.modes):
            raise ValueError(f"mode index {mode_index} outside action set of {len(self.modes)}")
        self.mode_index = mode_index

    def _frame_size(self) -> int | None:
        mode = self.modes[self.mode_index]
        if self.frame_trace is not None:
            sizes = self.frame_trace.sizes.get(mode.id)
            if sizes is None:
                raise FrameTraceError(f"frame trace has no rows for mode {mode.id!r}")
            idx = self.frame_counter
            if idx >= len(sizes):
                if not self.frame_trace.loop:
                    return None
                idx %= len(sizes)
            return sizes[idx]
        jitter = mode.jitter_frac
        low, high = 1.0 - jitter, 1.0 + jitter
        return max(1, int(round(mode.mean_frame_bytes * self.rng.uniform(low, high))))

    def _generate_frame(self) -> None:
        if self.halted:
            return
        size = self._frame_size()
        if size is None:
            self.halted = True  # stop-at-end trace exhausted
            return
        t = self.sim.now
        mode = self.modes[self.mode_index]
        burst = Burst(
            burst_id=self._next_burst_id,
            ue_id=self.ue_id,
            mode_index=self.mode_index,
            mode_id=mode.id,
            chamfer_distance=mode.chamfer_distance,
            total_bytes=size,
            generated_at=t,
            fragment_count=fragment_count_for(size, self.mtu_payload),
        )
        self._next_burst_id += 1
        self.frame_counter += 1
        self.last_frame_bytes = size
        self.bursts.append(burst)
        self.bursts_sent_total += 1
        self._win_sent += 1
        accepted, _dropped = self.uplink.enqueue_burst(self.ue_id, burst, self.mtu_payload)
        burst.fragments_accepted = accepted
        if t + self.frame_period < self.end_time:
            self.sim.schedule_at(t + self.frame_period, self._generate_frame)

    # -- sink side -----------------------------------------------------------

    def on_burst_fragments(self, burst: Burst, new_fragments: int, byte_count: int, t: SimTime) -> None:
        """Bulk delivery callback from the RAN drain loop (fragments arrive in order)."""
        self._win_bytes += byte_count
        if new_fragments <= 0:
            return
        burst.fragments_received += new_fragments
        if burst.fragments_received == burst.fragment_count:
            self._complete(burst, t)

    def on_fragment_delivered(self, pkt: Packet, t: SimTime) -> Burst | None:
        """Packet-level reassembly: out-of-order tolerated, duplicates ignored."""
        if pkt.kind != PacketKind.APP_FRAGMENT:
            raise ValueError(f"not an app fragment: {pkt.kind}")
        burst = next((b for b in reversed(self.bursts) if b.burst_id == pkt.burst_id), None)
        if burst is None:
            raise KeyError(f"unknown burst {pkt.burst_id} for ue {pkt.owner_ue}")
        if burst.received_indices is None:
            burst.received_indices = set()
        if pkt.fragment_index in burst.received_indices:
            self.duplicate_fragments += 1
            return None
        burst.received_indices.add(pkt.fragment_index)
        burst.fragments_received = len(burst.received_indices)
        self._win_bytes += pkt.size_bytes
        if burst.fragments_received == burst.fragment_count:
            self._complete(burst, t)
            return burst
        return None

    def _complete(self, burst: Burst, t: SimTime) -> None:
        burst.completed_at = t
        self.bursts_received_total += 1
        self._win_received += 1
        self._win_delays_us.append(burst.delay_us)

    def close_window(self, t: SimTime) -> AppStatsWindow:
        """Return and reset the window counters (called every stats period)."""
        mode = self.modes[self.mode_index]
        delays = self._win_delays_us
        delay_defined = bool(delays)
        mean_delay_s = (sum(delays) / len(delays)) / 1_000_000 if delays else 0.0
        if self._win_sent > 0:
            prr = min(1.0, self._win_received / self._win_sent)
        else:
            prr = 1.0
        window = AppStatsWindow(
            ue_id=self.ue_id,
            window_start=self._window_start,
            window_end=t,
            bursts_sent=self._win_sent,
            bursts_received=self._win_received,
            bytes_received=self._win_bytes,
            mean_burst_delay_s=mean_delay_s,
            prr=prr,
            delay_defined=delay_defined,
            mode_index=self.mode_index,
            mode_id=mode.id,
            chamfer_distance=mode.chamfer_distance,
            last_frame_bytes=self.last_frame_bytes,
        )
        self._window_start = t
        self._win_sent = 0
        self._win_received = 0
        self._win_bytes = 0
        self._win_delays_us = []
        return window


class DownlinkCommandSource:
    """Teleoperation command flow: constant-bit-rate UDP-like downlink packets."""

    def __init__(
        self,
        sim: Simulator,
        ue_id: int,
        downlink: RanDirection,
        packet_bytes: int = 200,
        period: SimTime = seconds(0.005),
        end_time: SimTime = 0,
    ):
        self.sim = sim
        self.ue_id = ue_id
        self.downlink = downlink
        self.packet_bytes = packet_bytes
        self.period = period
        self.end_time = end_time
        self.packets_sent = 0
        self.packets_delivered = 0
        self._next_id = 0

    def rate_bps(self) -> float:
        return self.packet_bytes * 8 / (self.period / 1_000_000)

    def start(self) -> None:
        self.sim.schedule_at(0, self._send)

    def _on_delivered(self, pkt: Packet, t: SimTime) -> None:
        self.packets_delivered += 1

    def _send(self) -> None:
        t = self.sim.now
        pkt = Packet(
            id=self._next_id,
            owner_ue=self.ue_id,
            direction=Direction.DOWNLINK,
            size_bytes=self.packet_bytes,
            created_at=t,
            kind=PacketKind.DOWNLINK_COMMAND,
            on_delivered=self._on_delivered,
        )
        self._next_id += 1
        self.packets_sent += 1
        self.downlink.enqueue(pkt)
        if t + self.period < self.end_time:
            self.sim.schedule_at(t + self.period, self._send)
