"""Per-link propagation loss over time, received power and SNR.

Loss comes either from a CSV trace file (one row per link per snapshot) or
from the built-in synthetic generator (log-distance path loss plus AR(1)
shadowing along straight-line waypoint mobility). Between snapshots the loss
is held constant (zero-order hold, right-continuous at snapshot times).
"""

from __future__ import annotations

import csv
import io
import math
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .engine import SECOND, SimTime, seconds

TRACE_COLUMNS = ("time", "txId", "rxId", "lossDb")
TRACE_COLUMNS_SMALL_SCALE = TRACE_COLUMNS + ("smallScaleDb",)

THERMAL_NOISE_DBM_PER_HZ = -174.0


class TraceError(Exception):
    """Malformed trace input; carries the offending line number when known."""


class UnknownLinkError(KeyError):
    def __init__(self, tx_id: int, rx_id: int):
        super().__init__(f"no trace entries for link txId={tx_id} -> rxId={rx_id}")
        self.tx_id = tx_id
        self.rx_id = rx_id


@dataclass
class LinkBudgetConfig:
    tx_power_dbm: float = 23.0
    bandwidth_hz: float = 50e6
    noise_figure_db: float = 5.0
    carrier_frequency_hz: float = 3.5e9  # informational

    def noise_floor_dbm(self) -> float:
        return THERMAL_NOISE_DBM_PER_HZ + 10.0 * math.log10(self.bandwidth_hz) + self.noise_figure_db


def rx_power_dbm(cfg: LinkBudgetConfig, loss_db: float) -> float:
    return cfg.tx_power_dbm - loss_db

def snr_db(cfg: LinkBudgetConfig, rx_dbm: float) -> float:
    return rx_dbm - cfg.noise_floor_dbm()


@dataclass
class ChannelTrace:
    """Time-indexed total propagation loss per (tx, rx) link.

    Internally each link holds parallel arrays of snapshot times (microseconds)
    and loss values; entries are sorted and unique per (time, tx, rx).
    """

    links: dict[tuple[int, int], tuple[list[SimTime], list[float]]] = field(default_factory=dict)
    time_step_s: float = 0.1

    def link_ids(self) -> list[tuple[int, int]]:
        return sorted(self.links.keys())

    def entry_count(self) -> int:
        return sum(len(times) for times, _ in self.links.values())

    def loss_at(self, tx_id: int, rx_id: int, t: SimTime) -> float:
        """Loss of the latest snapshot at or before t; the first value before that."""
        link = self.links.get((tx_id, rx_id))
        if not link or not link[0]:
            raise UnknownLinkError(tx_id, rx_id)
        times, losses = link
        idx = bisect_right(times, t) - 1
        return losses[max(idx, 0)]

    def cursor(self, tx_id: int, rx_id: int) -> "TraceCursor":
        link = self.links.get((tx_id, rx_id))
        if not link or not link[0]:
            raise UnknownLinkError(tx_id, rx_id)
        return TraceCursor(link[0], link[1])

    def end_time(self) -> SimTime:
        return max(times[-1] for times, _ in self.links.values()) if self.links else 0


class TraceCursor:
    """O(1) amortized zero-order-hold lookup for monotonically increasing query times."""

    __slots__ = ("_times", "_losses", "_idx")

    def __init__(self, times: list[SimTime], losses: list[float]):
        self._times = times
        self._losses = losses
        self._idx = 0

    def loss_at(self, t: SimTime) -> float:
        times = self._times
        idx = self._idx
        last = len(times) - 1
        while idx < last and times[idx + 1] <= t:
            idx += 1
        self._idx = idx
        return self._losses[idx]


def parse_trace(source: io.TextIOBase | str, time_step_s: float | None = None) -> ChannelTrace:
    """Parse a CSV trace with header time,txId,rxId,lossDb[,smallScaleDb].

    Row loss is lossDb + smallScaleDb (missing column counts as 0). Rows must be
    non-decreasing in time and each (time, tx, rx) may appear at most once.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise TraceError("empty trace: missing header row") from None
    header = tuple(col.strip() for col in header)
    if header == TRACE_COLUMNS:
        has_small_scale = False
    elif header == TRACE_COLUMNS_SMALL_SCALE:
        has_small_scale = True
    else:
        raise TraceError(
            f"line 1: unknown column layout {header!r}; expected "
            f"{TRACE_COLUMNS!r} or {TRACE_COLUMNS_SMALL_SCALE!r}"
        )

    trace = ChannelTrace()
    seen: set[tuple[SimTime, int, int]] = set()
    prev_time: SimTime | None = None
    diffs: list[SimTime] = []
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise TraceError(f"line {line_no}: expected {len(header)} fields, got {len(row)}")
        try:
            t = seconds(float(row[0]))
            tx_id = int(row[1])
            rx_id = int(row[2])
            loss = float(row[3])
            small = float(row[4]) if has_small_scale else 0.0
        except ValueError as exc:
            raise TraceError(f"line {line_no}: {exc}") from None
        if tx_id < 0 or rx_id < 0:
            raise TraceError(f"line {line_no}: device ids must be unsigned ({tx_id}, {rx_id})")
        if not math.isfinite(loss) or loss < 0:
            raise TraceError(f"line {line_no}: lossDb must be finite and >= 0, got {row[3]}")
        if not math.isfinite(small):
            raise TraceError(f"line {line_no}: smallScaleDb must be finite, got {row[4]}")
        if prev_time is not None and t < prev_time:
            raise TraceError(f"line {line_no}: non-monotone timestamp {row[0]}")
        if prev_time is not None and t > prev_time:
            diffs.append(t - prev_time)
        prev_time = t
        key = (t, tx_id, rx_id)
        if key in seen:
            raise TraceError(f"line {line_no}: duplicate entry for link ({tx_id},{rx_id}) at t={row[0]}")
        seen.add(key)
        times, losses = trace.links.setdefault((tx_id, rx_id), ([], []))
        times.append(t)
        losses.append(loss + small)
    if prev_time is None:
        raise TraceError("trace has a header but no data rows")
    trace.time_step_s = (min(diffs) / SECOND) if diffs else (time_step_s or 0.1)
    if time_step_s is not None:
        trace.time_step_s = time_step_s
    return trace


def serialize_trace(trace: ChannelTrace) -> str:
    """Write a trace back to CSV; re-parsing yields an equal trace."""
    rows = []
    for (tx_id, rx_id), (times, losses) in trace.links.items():
        for t, loss in zip(times, losses):
            rows.append((t, tx_id, rx_id, loss))
    rows.sort()
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for t, tx_id, rx_id, loss in rows:
        writer.writerow((repr(t / SECOND), tx_id, rx_id, repr(loss)))
    return out.getvalue()


def traces_equal(a: ChannelTrace, b: ChannelTrace) -> bool:
    return a.links == b.links


@dataclass
class Waypoint:
    t_s: float
    x_m: float
    y_m: float


@dataclass
class WaypointSet:
    """Piecewise-linear positions per node id. Node positions must cover the
    whole simulated interval; querying beyond the path is an error."""

    nodes: dict[int, list[Waypoint]]

    def position(self, node_id: int, t_s: float) -> tuple[float, float]:
        path = self.nodes.get(node_id)
        if not path:
            raise ValueError(f"node {node_id} has no waypoints")
        if t_s < path[0].t_s - 1e-9 or t_s > path[-1].t_s + 1e-9:
            raise ValueError(
                f"node {node_id} leaves its defined path: t={t_s} s outside "
                f"[{path[0].t_s}, {path[-1].t_s}] s"
            )
        if len(path) == 1:
            return path[0].x_m, path[0].y_m
        for i in range(len(path) - 1):
            a, b = path[i], path[i + 1]
            if t_s <= b.t_s or i == len(path) - 2:
                if b.t_s == a.t_s:
                    return b.x_m, b.y_m
                frac = min(max((t_s - a.t_s) / (b.t_s - a.t_s), 0.0), 1.0)
                return a.x_m + frac * (b.x_m - a.x_m), a.y_m + frac * (b.y_m - a.y_m)
        return path[-1].x_m, path[-1].y_m


@dataclass
class SynthChannelConfig:
    pl0_db: float = 61.0
    ref_distance_m: float = 10.0
    exponent: float = 2.7
    shadow_sigma_db: float = 0.0
    shadow_corr: float = 0.9  # AR(1) coefficient between consecutive snapshots
    time_step_s: float = 0.1
    min_distance_m: float = 1.0


def path_loss_db(cfg: SynthChannelConfig, distance_m: float) -> float:
    d = max(distance_m, cfg.min_distance_m)
    return cfg.pl0_db + 10.0 * cfg.exponent * math.log10(d / cfg.ref_distance_m)


def synthesize_trace(
    mobility: WaypointSet,
    model: SynthChannelConfig,
    rng: np.random.Generator,
    gnb_id: int,
    ue_ids: list[int],
    duration_s: float,
) -> ChannelTrace:
    """Uplink trace (ue -> gnb) sampled every time_step over [0, duration].

    Shadowing is Gaussian in dB with stationary sigma and AR(1) correlation
    between snapshots, drawn per link in ascending ue id order so the result is
    deterministic for a given generator state.
    """
    steps = int(round(duration_s / model.time_step_s)) + 1
    trace = ChannelTrace(time_step_s=model.time_step_s)
    innovation_scale = model.shadow_sigma_db * math.sqrt(max(1.0 - model.shadow_corr**2, 0.0))
    for ue in sorted(ue_ids):
        times: list[SimTime] = []
        losses: list[float] = []
        shadow = rng.normal(0.0, model.shadow_sigma_db) if model.shadow_sigma_db > 0 else 0.0
        for k in range(steps):
            t_s = k * model.time_step_s
            if k > 0 and model.shadow_sigma_db > 0:
                shadow = model.shadow_corr * shadow + rng.normal(0.0, innovation_scale)
            ux, uy = mobility.position(ue, min(t_s, duration_s))
            gx, gy = mobility.position(gnb_id, min(t_s, duration_s))
            d = math.hypot(ux - gx, uy - gy)
            loss = max(path_loss_db(model, d) + shadow, 0.0)
            times.append(seconds(t_s))
            losses.append(loss)
        trace.links[(ue, gnb_id)] = (times, losses)
    return trace
