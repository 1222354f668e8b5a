"""Abstract gNB<->UE data plane.

Per-TTI equal bandwidth sharing among backlogged users, truncated-Shannon link
rate from the trace SNR, FIFO transmission queues with a finite buffer, and
packet/burst delivery with drop-on-overflow as the loss mechanism. Uplink and
downlink are independent instances of the same scheduler, each with the full
configured bandwidth.

A tick at time t serves the TTI ending at t and only drains bytes that were
enqueued strictly before t, so a burst of N full TTIs completes exactly N TTIs
after the tick grid point following its generation. Ticks are only scheduled
while some queue is non-empty; an enqueue into an idle direction wakes the
scheduler at the next grid point.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from .channel import ChannelTrace, LinkBudgetConfig, TraceCursor, rx_power_dbm, snr_db
from .engine import MILLISECOND, SimTime, Simulator


class Direction(str, Enum):
    UPLINK = "uplink"
    DOWNLINK = "downlink"


class PacketKind(str, Enum):
    APP_FRAGMENT = "app-fragment"
    DOWNLINK_COMMAND = "downlink-command"
    RANAI_NOTIFICATION = "ranai-notification"


@dataclass
class Packet:
    id: int
    owner_ue: int
    direction: Direction
    size_bytes: int
    created_at: SimTime
    kind: PacketKind
    burst_id: int | None = None
    fragment_index: int | None = None
    expiry_at: SimTime | None = None
    on_delivered: Callable[["Packet", SimTime], None] | None = None
    on_lost: Callable[["Packet", SimTime], None] | None = None


@dataclass
class TtiConfig:
    tti_us: SimTime = MILLISECOND
    mac_efficiency: float = 0.8
    se_max: float = 7.8  # bit/s/Hz
    snr_outage_db: float = -5.0
    rlc_capacity_bytes: int = 3_000_000


def link_rate_bps(cfg: TtiConfig, budget: LinkBudgetConfig, snr_value_db: float, share: float) -> float:
    """Truncated-Shannon rate: 0 below the outage threshold, capped at se_max."""
    if snr_value_db < cfg.snr_outage_db or share <= 0.0:
        return 0.0
    spectral_efficiency = min(math.log2(1.0 + 10.0 ** (snr_value_db / 10.0)), cfg.se_max)
    return cfg.mac_efficiency * share * budget.bandwidth_hz * spectral_efficiency


@dataclass
class EnqueueResult:
    accepted: bool
    dropped_bytes: int = 0


class _PacketEntry:
    __slots__ = ("packet", "size", "drained", "enqueued_at")

    def __init__(self, packet: Packet, enqueued_at: SimTime):
        self.packet = packet
        self.size = packet.size_bytes
        self.drained = 0
        self.enqueued_at = enqueued_at


class _BurstEntry:
    """Admitted prefix of a fragmented application burst.

    Fragments are admitted in index order; `accepted_fragments` of them made it
    into the buffer for `accepted_bytes` total. Delivered-fragment count is
    recovered arithmetically from the drained byte count.
    """

    __slots__ = ("burst", "mtu", "accepted_fragments", "accepted_bytes", "drained", "enqueued_at", "delivered_fragments")

    def __init__(self, burst, mtu: int, accepted_fragments: int, accepted_bytes: int, enqueued_at: SimTime):
        self.burst = burst
        self.mtu = mtu
        self.accepted_fragments = accepted_fragments
        self.accepted_bytes = accepted_bytes
        self.drained = 0
        self.enqueued_at = enqueued_at
        self.delivered_fragments = 0

    def fragments_for_drained(self, drained: int) -> int:
        if drained >= self.accepted_bytes:
            return self.accepted_fragments
        return drained // self.mtu


@dataclass
class RanWindowStats:
    """KPI-window aggregates for one UE in one direction."""

    served_bytes: int
    mean_share: float
    mean_snr_db: float
    buffer_bytes: int
    buffer_fraction: float
    active_ticks: int


@dataclass
class UeLinkState:
    ue_id: int
    capacity_bytes: int
    queue: deque = field(default_factory=deque)
    buffer_bytes: int = 0
    # cumulative counters (byte conservation: offered == delivered + dropped + buffer)
    offered_bytes: int = 0
    delivered_bytes: int = 0
    dropped_bytes: int = 0
    dropped_fragments: int = 0
    dropped_packets: int = 0
    # per-KPI-window accumulators, read and reset by the controller
    window_served_bytes: int = 0
    window_share_sum: float = 0.0
    window_snr_sum: float = 0.0
    window_snr_ticks: int = 0
    last_snr_db: float = 0.0
    last_share: float = 0.0

    def reset_window(self) -> None:
        self.window_served_bytes = 0
        self.window_share_sum = 0.0
        self.window_snr_sum = 0.0
        self.window_snr_ticks = 0


class RanDirection:
    """One direction of the cell: per-UE FIFO queues served each TTI."""

    def __init__(
        self,
        sim: Simulator,
        direction: Direction,
        tti_cfg: TtiConfig,
        budget: LinkBudgetConfig,
        trace: ChannelTrace,
        gnb_id: int,
        ue_ids: list[int],
        on_burst_fragments: Callable | None = None,
        tti_log: list | None = None,
    ):
        self.sim = sim
        self.direction = direction
        self.cfg = tti_cfg
        self.budget = budget
        self.gnb_id = gnb_id
        self.links: dict[int, UeLinkState] = {
            ue: UeLinkState(ue, tti_cfg.rlc_capacity_bytes) for ue in sorted(ue_ids)
        }
        self._cursors: dict[int, TraceCursor] = {
            ue: self._make_cursor(trace, ue) for ue in sorted(ue_ids)
        }
        self.on_burst_fragments = on_burst_fragments
        self.tti_log = tti_log
        self._awake = False
        self.ticks_served = 0

    def _make_cursor(self, trace: ChannelTrace, ue: int) -> TraceCursor:
        # uplink rows are (ue -> gnb); the reverse direction reuses them by reciprocity
        pair = (ue, self.gnb_id) if self.direction == Direction.UPLINK else (self.gnb_id, ue)
        if pair in trace.links:
            return trace.cursor(*pair)
        return trace.cursor(ue, self.gnb_id)

    # -- admission ---------------------------------------------------------

    def _wake(self) -> None:
        if not self._awake:
            tti = self.cfg.tti_us
            next_tick = (self.sim.now // tti) * tti + tti
            self.sim.schedule_at(next_tick, self._tick)
            self._awake = True

    def enqueue(self, pkt: Packet) -> EnqueueResult:
        """Packet-level admission: FIFO append if the buffer has room, else drop."""
        link = self.links[pkt.owner_ue]
        link.offered_bytes += pkt.size_bytes
        if link.buffer_bytes + pkt.size_bytes > link.capacity_bytes:
            link.dropped_bytes += pkt.size_bytes
            link.dropped_packets += 1
            if pkt.on_lost is not None:
                pkt.on_lost(pkt, self.sim.now)
            return EnqueueResult(False, pkt.size_bytes)
        link.queue.append(_PacketEntry(pkt, self.sim.now))
        link.buffer_bytes += pkt.size_bytes
        self._wake()
        return EnqueueResult(True)

    def enqueue_burst(self, ue_id: int, burst, mtu: int) -> tuple[int, int]:
        """Admit a fragmented burst in fragment-index order.

        Equivalent to enqueueing fragment packets one by one: each full-MTU
        fragment needs mtu bytes of headroom, the final short fragment its own
        size. Returns (accepted_fragments, dropped_fragments).
        """
        link = self.links[ue_id]
        total = burst.total_bytes
        count = burst.fragment_count
        link.offered_bytes += total
        free = link.capacity_bytes - link.buffer_bytes
        full, remainder = divmod(total, mtu)
        accepted = min(full, free // mtu)
        if accepted == full and remainder > 0 and free - full * mtu >= remainder:
            accepted += 1
        accepted_bytes = total if accepted == count else accepted * mtu
        dropped = count - accepted
        if accepted > 0:
            link.queue.append(_BurstEntry(burst, mtu, accepted, accepted_bytes, self.sim.now))
            link.buffer_bytes += accepted_bytes
            self._wake()
        if dropped > 0:
            link.dropped_bytes += total - accepted_bytes
            link.dropped_fragments += dropped
        return accepted, dropped

    # -- service -----------------------------------------------------------

    def _purge_expired(self, link: UeLinkState, now: SimTime) -> None:
        if not any(
            isinstance(e, _PacketEntry) and e.packet.expiry_at is not None and e.packet.expiry_at <= now
            for e in link.queue
        ):
            return
        kept = deque()
        for entry in link.queue:
            if (
                isinstance(entry, _PacketEntry)
                and entry.packet.expiry_at is not None
                and entry.packet.expiry_at <= now
            ):
                freed = entry.size - entry.drained
                link.buffer_bytes -= freed
                link.dropped_bytes += freed
                link.dropped_packets += 1
                if entry.packet.on_lost is not None:
                    entry.packet.on_lost(entry.packet, now)
            else:
                kept.append(entry)
        link.queue = kept

    def _tick(self) -> None:
        now = self.sim.now
        self.ticks_served += 1
        backlogged = []
        for ue in self.links:
            link = self.links[ue]
            self._purge_expired(link, now)
            if link.queue and link.queue[0].enqueued_at < now:
                backlogged.append(link)
        if backlogged:
            share = 1.0 / len(backlogged)
            tti_s = self.cfg.tti_us / 1_000_000
            for link in backlogged:
                snr = snr_db(self.budget, rx_power_dbm(self.budget, self._cursors[link.ue_id].loss_at(now)))
                rate = link_rate_bps(self.cfg, self.budget, snr, share)
                budget_bytes = int(rate * tti_s) // 8
                link.last_snr_db = snr
                link.last_share = share
                link.window_share_sum += share
                link.window_snr_sum += snr
                link.window_snr_ticks += 1
                if budget_bytes > 0:
                    self._drain(link, budget_bytes, now)
                if self.tti_log is not None:
                    self.tti_log.append((now, link.ue_id, share, snr, link.buffer_bytes))
        if any(link.queue for link in self.links.values()):
            self.sim.schedule_at(now + self.cfg.tti_us, self._tick)
        else:
            self._awake = False

    def _drain(self, link: UeLinkState, budget_bytes: int, now: SimTime) -> None:
        queue = link.queue
        while budget_bytes > 0 and queue:
            entry = queue[0]
            if entry.enqueued_at >= now:
                break
            if isinstance(entry, _BurstEntry):
                take = min(budget_bytes, entry.accepted_bytes - entry.drained)
                entry.drained += take
                budget_bytes -= take
                link.buffer_bytes -= take
                link.delivered_bytes += take
                link.window_served_bytes += take
                done = entry.fragments_for_drained(entry.drained)
                new_fragments = done - entry.delivered_fragments
                entry.delivered_fragments = done
                if self.on_burst_fragments is not None and (new_fragments or take):
                    self.on_burst_fragments(entry.burst, new_fragments, take, now)
                if entry.drained == entry.accepted_bytes:
                    queue.popleft()
            else:
                take = min(budget_bytes, entry.size - entry.drained)
                entry.drained += take
                budget_bytes -= take
                link.buffer_bytes -= take
                link.delivered_bytes += take
                link.window_served_bytes += take
                if entry.drained == entry.size:
                    queue.popleft()
                    if entry.packet.on_delivered is not None:
                        entry.packet.on_delivered(entry.packet, now)

    # -- introspection -----------------------------------------------------

    def backlog_bytes(self, ue_id: int) -> int:
        return self.links[ue_id].buffer_bytes

    def snr_now(self, ue_id: int) -> float:
        """Instantaneous link SNR sampled from the trace at the current time."""
        loss = self._cursors[ue_id].loss_at(self.sim.now)
        return snr_db(self.budget, rx_power_dbm(self.budget, loss))

    def close_kpi_window(self, ue_id: int, window_ttis: int) -> RanWindowStats:
        """Read and reset the per-window accumulators for one UE.

        Mean share is averaged over the whole window (idle TTIs count as
        zero); mean SNR is averaged over served TTIs, falling back to the
        instantaneous trace value for a fully idle window.
        """
        link = self.links[ue_id]
        mean_share = link.window_share_sum / window_ttis if window_ttis > 0 else 0.0
        if link.window_snr_ticks > 0:
            mean_snr = link.window_snr_sum / link.window_snr_ticks
        else:
            mean_snr = self.snr_now(ue_id)
        stats = RanWindowStats(
            served_bytes=link.window_served_bytes,
            mean_share=mean_share,
            mean_snr_db=mean_snr,
            buffer_bytes=link.buffer_bytes,
            buffer_fraction=link.buffer_bytes / link.capacity_bytes,
            active_ticks=link.window_snr_ticks,
        )
        link.reset_window()
        return stats

    def conservation_ok(self) -> bool:
        return all(
            link.offered_bytes == link.delivered_bytes + link.dropped_bytes + link.buffer_bytes
            for link in self.links.values()
        )
