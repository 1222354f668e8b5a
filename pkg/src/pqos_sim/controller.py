"""RAN-side controller: every status period it closes per-UE KPI windows,
builds 8-feature state vectors, queries the agent for one action per user,
dispatches mode-change notifications (instant callback or a real downlink
packet), and feeds (s, a, s', r) transitions back for learning.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .agent import RewardConfig, Transition, compute_reward
from .app import AppStatsWindow, SensorStream
from .engine import SimTime, Simulator
from .ran import Direction, Packet, PacketKind, RanDirection

IDEAL = "ideal"
REAL = "real"
NOTIFICATION_PAYLOAD_BYTES = 12  # action id + global user id + cell radio id

STATE_WIDTH = 8


def build_state(
    window: AppStatsWindow,
    served_bytes: int,
    mean_snr_db: float,
    buffer_fraction: float,
    mean_share: float,
    mode_index: int,
    mode_count: int,
    last_frame_bytes: int,
    max_frame_bytes: int,
    window_s: float,
    delta_max_s: float,
) -> np.ndarray:
    """Normalized per-UE feature vector spanning app, RLC/MAC and PHY KPIs.

    Features: (1) mean burst delay over the tolerated maximum, clipped to
    [0,2]; (2) burst reception ratio; (3) app-layer goodput in Mbit/s over
    100; (4) mean SNR in dB over 30, clipped to [-1,2]; (5) uplink buffer
    occupancy fraction; (6) mean scheduler share; (7) applied mode index over
    the mode count minus one; (8) last frame size over the largest configured
    frame size.
    """
    goodput_mbps = (window.bytes_received * 8 / window_s) / 1e6 if window_s > 0 else 0.0
    return np.array(
        [
            min(2.0, max(0.0, window.mean_burst_delay_s / delta_max_s)),
            window.prr,
            goodput_mbps / 100.0,
            min(2.0, max(-1.0, mean_snr_db / 30.0)),
            buffer_fraction,
            mean_share,
            mode_index / (mode_count - 1) if mode_count > 1 else 0.0,
            last_frame_bytes / max_frame_bytes if max_frame_bytes > 0 else 0.0,
        ],
        dtype=np.float64,
    )


@dataclass
class NotificationRecord:
    ue_id: int
    action: int
    mechanism: str
    issued_at: SimTime
    status: str = "pending"  # applied | pending | delivered | lost | expired
    delivered_at: SimTime | None = None

    @property
    def lag_us(self) -> SimTime | None:
        if self.mechanism == IDEAL:
            return 0
        if self.delivered_at is None:
            return None
        return self.delivered_at - self.issued_at


@dataclass
class ControllerRow:
    t: SimTime
    ue_id: int
    state: np.ndarray
    action: int
    reward: float | None
    window: AppStatsWindow
    qoe: float
    notification: NotificationRecord | None = None

    @property
    def notified(self) -> bool:
        return self.notification is not None

    @property
    def notification_outcome(self) -> str:
        return self.notification.status if self.notification is not None else "none"


@dataclass
class CellReport:
    t: SimTime
    active_ues: int
    served_ul_bytes: int
    served_dl_bytes: int
    mean_share: float


class ControllerError(Exception):
    pass


class RanAiController:
    """Periodic status-update loop binding apps, RAN KPIs, and the agent."""

    def __init__(
        self,
        sim: Simulator,
        streams: dict[int, SensorStream],
        uplink: RanDirection,
        downlink: RanDirection,
        reward_cfg: RewardConfig,
        period: SimTime,
        end_time: SimTime,
        agent=None,
        mechanism: str = IDEAL,
        explore: bool = True,
        notification_loss_prob: float = 0.0,
        loss_rng: np.random.Generator | None = None,
        max_frame_bytes: int = 1,
    ):
        if mechanism not in (IDEAL, REAL):
            raise ControllerError(f"unknown notification mechanism {mechanism!r}")
        if notification_loss_prob > 0.0 and loss_rng is None:
            raise ControllerError("notification loss probability needs an rng stream")
        self.sim = sim
        self.streams = streams
        self.ue_ids = sorted(streams)
        self.uplink = uplink
        self.downlink = downlink
        self.agent = agent
        self.reward_cfg = reward_cfg
        self.period = period
        self.end_time = end_time
        self.mechanism = mechanism
        self.explore = explore
        self.notification_loss_prob = notification_loss_prob
        self.loss_rng = loss_rng
        self.max_frame_bytes = max_frame_bytes
        self.window_ttis = period // uplink.cfg.tti_us
        self.rows: list[ControllerRow] = []
        self.notifications: list[NotificationRecord] = []
        self.cell_reports: list[CellReport] = []
        self.training_reports: list = []
        self.updates = 0
        self.transitions_emitted = 0
        self._prev: dict[int, tuple[np.ndarray, int]] = {}
        self._pending: dict[int, NotificationRecord] = {}

    def start(self) -> None:
        self.sim.schedule_at(0, self._update)

    # -- KPI window ----------------------------------------------------------

    def _close_ue_window(self, ue: int, t: SimTime):
        stream = self.streams[ue]
        ran_stats = self.uplink.close_kpi_window(ue, self.window_ttis if t > 0 else 0)
        window = stream.close_window(t)
        mode_count = len(stream.modes)
        state = build_state(
            window,
            served_bytes=ran_stats.served_bytes,
            mean_snr_db=ran_stats.mean_snr_db,
            buffer_fraction=ran_stats.buffer_fraction,
            mean_share=ran_stats.mean_share,
            mode_index=window.mode_index,
            mode_count=mode_count,
            last_frame_bytes=window.last_frame_bytes,
            max_frame_bytes=self.max_frame_bytes,
            window_s=self.period / 1_000_000,
            delta_max_s=self.reward_cfg.delta_max_s,
        )
        return window, state, ran_stats

    def _window_reward(self, window: AppStatsWindow) -> float:
        return compute_reward(
            self.reward_cfg, window.mean_burst_delay_s, window.prr, window.chamfer_distance
        )

    def _window_qoe(self, window: AppStatsWindow) -> float:
        return (self.reward_cfg.cd_max - window.chamfer_distance) / self.reward_cfg.cd_max

    # -- notification dispatch ------------------------------------------------

    def _dispatch(self, ue: int, action: int, t: SimTime) -> NotificationRecord:
        stream = self.streams[ue]
        record = NotificationRecord(ue_id=ue, action=action, mechanism=self.mechanism, issued_at=t)
        self.notifications.append(record)
        if self.mechanism == IDEAL:
            stream.set_mode(action, t)
            record.status = "applied"
            record.delivered_at = t
            return record
        if self.notification_loss_prob > 0.0 and self.loss_rng.random() < self.notification_loss_prob:
            record.status = "lost"
            return record
        self._pending[ue] = record

        def on_delivered(pkt: Packet, now: SimTime) -> None:
            stream.set_mode(record.action, now)
            record.status = "delivered"
            record.delivered_at = now
            if self._pending.get(ue) is record:
                del self._pending[ue]

        def on_lost(pkt: Packet, now: SimTime) -> None:
            record.status = "expired"
            if self._pending.get(ue) is record:
                del self._pending[ue]

        pkt = Packet(
            id=len(self.notifications),
            owner_ue=ue,
            direction=Direction.DOWNLINK,
            size_bytes=NOTIFICATION_PAYLOAD_BYTES,
            created_at=t,
            kind=PacketKind.RANAI_NOTIFICATION,
            expiry_at=t + self.period,
            on_delivered=on_delivered,
            on_lost=on_lost,
        )
        self.downlink.enqueue(pkt)
        return record

    # -- main loop -------------------------------------------------------------

    def _update(self) -> None:
        t = self.sim.now
        self.updates += 1
        windows: dict[int, AppStatsWindow] = {}
        states: dict[int, np.ndarray] = {}
        rewards: dict[int, float | None] = {}
        ul_served = 0
        transitions: list[Transition] = []
        for ue in self.ue_ids:
            window, state, ran_stats = self._close_ue_window(ue, t)
            windows[ue] = window
            states[ue] = state
            ul_served += ran_stats.served_bytes
            prev = self._prev.get(ue)
            if prev is not None:
                r = self._window_reward(window)
                rewards[ue] = r
                transitions.append(
                    Transition(ue_id=ue, state=prev[0], action=prev[1], next_state=state, reward=r)
                )
            else:
                rewards[ue] = None

        if self.agent is not None:
            if transitions:
                report = self.agent.update(transitions)
                if report is not None:
                    self.training_reports.append(report)
                self.transitions_emitted += len(transitions)
            state_batch = np.stack([states[ue] for ue in self.ue_ids])
            actions = self.agent.get_action(state_batch, explore=self.explore)
        else:
            actions = [self.streams[ue].mode_index for ue in self.ue_ids]

        dl_served = sum(
            self.downlink.close_kpi_window(ue, self.window_ttis if t > 0 else 0).served_bytes
            for ue in self.ue_ids
        )
        shares = []
        for i, ue in enumerate(self.ue_ids):
            action = int(actions[i])
            window = windows[ue]
            record = None
            pending = self._pending.get(ue)
            effective = pending.action if pending is not None else self.streams[ue].mode_index
            if self.agent is not None and action != effective:
                record = self._dispatch(ue, action, t)
            self._prev[ue] = (states[ue], action)
            self.rows.append(
                ControllerRow(
                    t=t,
                    ue_id=ue,
                    state=states[ue],
                    action=action,
                    reward=rewards[ue],
                    window=window,
                    qoe=self._window_qoe(window),
                    notification=record,
                )
            )
            shares.append(states[ue][5])
        self.cell_reports.append(
            CellReport(
                t=t,
                active_ues=sum(1 for ue in self.ue_ids if windows[ue].bursts_sent > 0),
                served_ul_bytes=ul_served,
                served_dl_bytes=dl_served,
                mean_share=float(np.mean(shares)) if shares else 0.0,
            )
        )
        if t + self.period < self.end_time:
            self.sim.schedule_at(t + self.period, self._update)
