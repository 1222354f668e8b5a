"""Run orchestration: builds a world from a config, executes it, aggregates
metrics, and writes the artifact bundle (summary JSON plus CSV logs).

Artifacts are byte-stable: identical (config, seed) inputs produce identical
files, so floats are emitted via repr and no wall-clock data is recorded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .agent import (
    AgentHyperparams,
    DoubleDqlAgent,
    LossReport,
    RewardConfig,
    load_model,
)
from .app import (
    AppModeConfig,
    AppStatsWindow,
    Burst,
    DownlinkCommandSource,
    FrameTrace,
    SensorStream,
    parse_frame_trace,
)
from .channel import (
    ChannelTrace,
    LinkBudgetConfig,
    SynthChannelConfig,
    Waypoint,
    WaypointSet,
    parse_trace,
    synthesize_trace,
)
from .config import POLICY_DQL, RunConfig, validate_config
from .controller import (
    STATE_WIDTH,
    CellReport,
    ControllerRow,
    NotificationRecord,
    RanAiController,
)
from .engine import RngRegistry, Simulator
from .ran import Direction, RanDirection, TtiConfig

GNB_ID = 0
SUMMARY_SCHEMA = "pqos-sim-summary/1"


@dataclass
class World:
    sim: Simulator
    trace: ChannelTrace
    uplink: RanDirection
    downlink: RanDirection
    streams: dict[int, SensorStream]
    cbr_sources: list[DownlinkCommandSource]
    controller: RanAiController
    duration_us: int


@dataclass
class RunArtifacts:
    config: RunConfig
    seed: int
    summary: dict
    controller_rows: list[ControllerRow]
    notifications: list[NotificationRecord]
    cell_reports: list[CellReport]
    bursts: dict[int, list[Burst]]
    training_reports: list[LossReport] = field(default_factory=list)
    model_bytes: bytes | None = None
    out_dir: Path | None = None


def derive_episode_seed(base_seed: int, episode: int) -> int:
    """Stable per-episode sub-seed; episode 0 is reserved for evaluation."""
    return int(np.random.SeedSequence([base_seed, episode]).generate_state(1, dtype=np.uint64)[0])


def scenario_mobility(cfg: RunConfig) -> WaypointSet:
    """Straight-road scenario: static gNB beside the road, vehicles driving +x."""
    sc = cfg.scenario
    nodes = {
        GNB_ID: [
            Waypoint(0.0, sc.gnb_x_m, sc.gnb_y_m),
            Waypoint(sc.duration_s, sc.gnb_x_m, sc.gnb_y_m),
        ]
    }
    for i in range(1, sc.n_vehicles + 1):
        x0 = sc.vehicle_start_x_m - sc.vehicle_spacing_m * (i - 1)
        nodes[i] = [
            Waypoint(0.0, x0, 0.0),
            Waypoint(sc.duration_s, x0 + sc.vehicle_speed_mps * sc.duration_s, 0.0),
        ]
    return WaypointSet(nodes)


def build_trace(cfg: RunConfig, rng: np.random.Generator) -> ChannelTrace:
    if cfg.scenario.trace_path is not None:
        return parse_trace(Path(cfg.scenario.trace_path).read_text())
    spec = cfg.scenario.synth
    model = SynthChannelConfig(
        pl0_db=spec.pl0_db,
        ref_distance_m=spec.d0_m,
        exponent=spec.exponent,
        shadow_sigma_db=spec.shadowing_sigma_db,
        shadow_corr=spec.shadowing_rho,
        time_step_s=spec.step_s,
        min_distance_m=spec.min_distance_m,
    )
    ue_ids = list(range(1, cfg.scenario.n_vehicles + 1))
    return synthesize_trace(
        scenario_mobility(cfg), model, rng, GNB_ID, ue_ids, cfg.scenario.duration_s
    )


def agent_layer_sizes(cfg: RunConfig) -> list[int]:
    return [STATE_WIDTH] + list(cfg.agent.hidden_sizes) + [len(cfg.app.modes)]


def make_agent(cfg: RunConfig, registry: RngRegistry) -> DoubleDqlAgent:
    a = cfg.agent
    hyper = AgentHyperparams(
        discount=a.discount,
        learning_rate=a.learning_rate,
        weight_decay=a.weight_decay,
        batch_size=a.batch_size,
        replay_capacity=a.replay_capacity,
        target_sync_period=a.target_sync_period,
        epsilon_start=a.epsilon_start,
        epsilon_end=a.epsilon_end,
        epsilon_decay_steps=a.epsilon_decay_steps,
    )
    sizes = agent_layer_sizes(cfg)
    online = None
    if a.model_in is not None:
        online = load_model(Path(a.model_in).read_bytes(), sizes)
    agent = DoubleDqlAgent(
        sizes,
        hyper,
        init_rng=registry.stream("agent-init"),
        rng=registry.stream("agent"),
        online=online,
    )
    if a.mode == "evaluate":
        agent.training = False
    return agent


def reward_config(cfg: RunConfig) -> RewardConfig:
    r = cfg.agent.reward
    return RewardConfig(
        alpha=r.alpha, delta_max_s=r.delta_max_ms / 1000.0, prr_min=r.prr_min, cd_max=r.cd_max
    )


def build_world(
    cfg: RunConfig,
    seed: int,
    agent: DoubleDqlAgent | None,
    explore: bool,
    trace: ChannelTrace | None = None,
) -> World:
    sim = Simulator(seed)
    duration_us = round(cfg.scenario.duration_s * 1_000_000)
    period_us = round(cfg.controller.period_ms * 1000)
    frame_period_us = round(cfg.app.frame_period_ms * 1000)
    ue_ids = list(range(1, cfg.scenario.n_vehicles + 1))
    if trace is None:
        trace = build_trace(cfg, sim.rng.stream("channel"))
    budget = LinkBudgetConfig(
        tx_power_dbm=cfg.ran.tx_power_dbm,
        bandwidth_hz=cfg.ran.bandwidth_hz,
        noise_figure_db=cfg.ran.noise_figure_db,
        carrier_frequency_hz=cfg.ran.carrier_hz,
    )
    tti_cfg = TtiConfig(
        tti_us=cfg.ran.tti_us,
        mac_efficiency=cfg.ran.mac_efficiency,
        se_max=cfg.ran.se_max,
        snr_outage_db=cfg.ran.snr_outage_db,
        rlc_capacity_bytes=cfg.ran.rlc_capacity_bytes,
    )

    streams: dict[int, SensorStream] = {}

    def burst_sink(burst: Burst, new_fragments: int, byte_count: int, now: int) -> None:
        streams[burst.ue_id].on_burst_fragments(burst, new_fragments, byte_count, now)

    uplink = RanDirection(
        sim, Direction.UPLINK, tti_cfg, budget, trace, GNB_ID, ue_ids, on_burst_fragments=burst_sink
    )
    downlink = RanDirection(sim, Direction.DOWNLINK, tti_cfg, budget, trace, GNB_ID, ue_ids)

    modes = [
        AppModeConfig(
            id=m.id,
            chamfer_distance=m.chamfer_distance,
            mean_frame_bytes=m.mean_frame_bytes,
            jitter_frac=m.jitter_frac,
        )
        for m in cfg.app.modes
    ]
    frame_trace: FrameTrace | None = None
    if cfg.app.frame_trace_path is not None:
        frame_trace = parse_frame_trace(
            Path(cfg.app.frame_trace_path).read_text(), loop=cfg.app.frame_trace_loop
        )
    start_mode = cfg.constant_mode_id() or cfg.app.start_mode
    start_index = cfg.mode_ids().index(start_mode)
    for ue in ue_ids:
        streams[ue] = SensorStream(
            sim=sim,
            ue_id=ue,
            modes=modes,
            start_mode_index=start_index,
            frame_period=frame_period_us,
            mtu_payload=cfg.app.mtu_payload_bytes,
            uplink=uplink,
            rng=sim.rng.stream(f"app:ue{ue}"),
            end_time=duration_us,
            frame_trace=frame_trace,
        )
    cbr_sources = []
    if cfg.app.downlink.enabled:
        for ue in ue_ids:
            cbr_sources.append(
                DownlinkCommandSource(
                    sim=sim,
                    ue_id=ue,
                    downlink=downlink,
                    packet_bytes=cfg.app.downlink.packet_bytes,
                    period=round(cfg.app.downlink.period_ms * 1000),
                    end_time=duration_us,
                )
            )
    if frame_trace is not None:
        max_frame_bytes = max(max(sizes) for sizes in frame_trace.sizes.values() if sizes)
    else:
        max_frame_bytes = max(int(round(m.mean_frame_bytes * (1.0 + m.jitter_frac))) for m in modes)
    controller = RanAiController(
        sim=sim,
        streams=streams,
        uplink=uplink,
        downlink=downlink,
        reward_cfg=reward_config(cfg),
        period=period_us,
        end_time=duration_us,
        agent=agent,
        mechanism=cfg.controller.mechanism,
        explore=explore,
        notification_loss_prob=cfg.controller.notification_loss_prob,
        loss_rng=sim.rng.stream("notification-loss"),
        max_frame_bytes=max_frame_bytes,
    )
    # t=0 dispatch order: controller closes windows and issues actions before
    # the first frames are generated, which in turn precede any CBR packet.
    controller.start()
    for ue in ue_ids:
        streams[ue].start()
    for source in cbr_sources:
        source.start()
    return World(sim, trace, uplink, downlink, streams, cbr_sources, controller, duration_us)


def _delay_stats(delays_ms: list[float]) -> dict | None:
    if not delays_ms:
        return None
    arr = np.asarray(delays_ms, dtype=np.float64)
    p25, p50, p75, p95 = np.percentile(arr, [25, 50, 75, 95])
    return {
        "mean": float(np.mean(arr)),
        "p25": float(p25),
        "p50": float(p50),
        "p75": float(p75),
        "p95": float(p95),
    }


def _window_metrics(rows: list[ControllerRow], delta_max_s: float) -> dict:
    observed = [r for r in rows if r.window.bursts_sent > 0]
    if not observed:
        return {
            "windows_observed": 0,
            "mean_qoe": None,
            "mean_prr": None,
            "mean_reward": None,
            "delay_violation_frac": None,
        }
    rewards = [r.reward for r in observed if r.reward is not None]
    violations = sum(
        1
        for r in observed
        if not r.window.delay_defined or r.window.mean_burst_delay_s >= delta_max_s
    )
    return {
        "windows_observed": len(observed),
        "mean_qoe": float(np.mean([r.qoe for r in observed])),
        "mean_prr": float(np.mean([r.window.prr for r in observed])),
        "mean_reward": float(np.mean(rewards)) if rewards else None,
        "delay_violation_frac": violations / len(observed),
    }


def summarize(cfg: RunConfig, world: World, seed: int) -> dict:
    rows = world.controller.rows
    delta_max_s = cfg.agent.reward.delta_max_ms / 1000.0
    per_ue = {}
    for ue in sorted(world.streams):
        stream = world.streams[ue]
        ue_rows = [r for r in rows if r.ue_id == ue]
        delays = [b.delay_us / 1000.0 for b in stream.bursts if b.completed_at is not None]
        per_ue[str(ue)] = {
            **_window_metrics(ue_rows, delta_max_s),
            "bursts_sent": stream.bursts_sent_total,
            "bursts_completed": stream.bursts_received_total,
            "delay_ms": _delay_stats(delays),
        }
    all_delays = [
        b.delay_us / 1000.0
        for stream in world.streams.values()
        for b in stream.bursts
        if b.completed_at is not None
    ]
    sent_total = sum(s.bursts_sent_total for s in world.streams.values())
    done_total = sum(s.bursts_received_total for s in world.streams.values())
    notif = world.controller.notifications
    by_status: dict[str, int] = {}
    for record in notif:
        by_status[record.status] = by_status.get(record.status, 0) + 1
    lags = [r.lag_us / 1000.0 for r in notif if r.lag_us is not None and r.mechanism == "real"]
    mode_counts: dict[str, int] = {}
    for r in rows:
        if r.window.bursts_sent > 0:
            mode_counts[r.window.mode_id] = mode_counts.get(r.window.mode_id, 0) + 1
    summary = {
        "schema": SUMMARY_SCHEMA,
        "policy": cfg.policy,
        "seed": seed,
        "mechanism": cfg.controller.mechanism,
        "n_vehicles": cfg.scenario.n_vehicles,
        "duration_s": cfg.scenario.duration_s,
        "updates": world.controller.updates,
        "transitions": world.controller.transitions_emitted,
        "pooled": {
            **_window_metrics(rows, delta_max_s),
            "bursts_sent": sent_total,
            "bursts_completed": done_total,
            "completion_ratio": done_total / sent_total if sent_total else None,
            "delay_ms": _delay_stats(all_delays),
        },
        "per_ue": per_ue,
        "window_mode_counts": mode_counts,
        "notifications": {
            "issued": len(notif),
            "by_status": dict(sorted(by_status.items())),
            "mean_lag_ms": float(np.mean(lags)) if lags else None,
        },
        "byte_conservation": {
            "uplink": world.uplink.conservation_ok(),
            "downlink": world.downlink.conservation_ok(),
        },
        "config": cfg.model_dump(),
    }
    if world.controller.agent is not None:
        agent = world.controller.agent
        summary["agent"] = {
            "gradient_steps": agent.update_steps,
            "epsilon": agent.epsilon(),
            "action_steps": agent.action_steps,
        }
    return summary


def run(
    cfg: RunConfig,
    agent: DoubleDqlAgent | None = None,
    explore: bool | None = None,
    seed: int | None = None,
    out_dir: str | Path | None = None,
    write: bool = True,
) -> RunArtifacts:
    """Execute one configured run and (optionally) write its artifact bundle."""
    validate_config(cfg)
    run_seed = cfg.seed if seed is None else seed
    if cfg.policy == POLICY_DQL and agent is None:
        agent = make_agent(cfg, RngRegistry(run_seed))
    if cfg.policy != POLICY_DQL:
        agent = None
    if explore is None:
        explore = cfg.agent.mode == "train"
    world = build_world(cfg, run_seed, agent, explore)
    world.sim.run_until(world.duration_us)
    summary = summarize(cfg, world, run_seed)
    artifacts = RunArtifacts(
        config=cfg,
        seed=run_seed,
        summary=summary,
        controller_rows=world.controller.rows,
        notifications=world.controller.notifications,
        cell_reports=world.controller.cell_reports,
        bursts={ue: stream.bursts for ue, stream in world.streams.items()},
        training_reports=list(world.controller.training_reports),
        model_bytes=agent.save() if agent is not None else None,
    )
    target = out_dir if out_dir is not None else cfg.output_dir
    if write and target is not None:
        write_artifacts(artifacts, Path(target))
    return artifacts


def train_then_eval(
    cfg: RunConfig,
    episodes: int,
    out_dir: str | Path | None = None,
    write: bool = True,
) -> RunArtifacts:
    """Train over repeated scenario episodes, then evaluate greedily once.

    The agent persists across episodes (replay, exploration schedule, target
    network). Training episode e uses a sub-seed derived from (seed, e); the
    final evaluation episode runs with exploration off under the base seed, so
    re-evaluating a reloaded model with the same config reproduces it.
    """
    validate_config(cfg)
    if cfg.policy != POLICY_DQL:
        raise ValueError(f"training requires policy '{POLICY_DQL}', got {cfg.policy!r}")
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    agent = make_agent(cfg, RngRegistry(cfg.seed))
    agent.training = True
    episode_summaries = []
    training_reports: list[LossReport] = []
    for episode in range(1, episodes + 1):
        ep_seed = derive_episode_seed(cfg.seed, episode)
        world = build_world(cfg, ep_seed, agent, explore=True)
        world.sim.run_until(world.duration_us)
        training_reports.extend(world.controller.training_reports)
        metrics = _window_metrics(world.controller.rows, cfg.agent.reward.delta_max_ms / 1000.0)
        episode_summaries.append(
            {
                "episode": episode,
                "seed": ep_seed,
                "mean_reward": metrics["mean_reward"],
                "mean_qoe": metrics["mean_qoe"],
                "mean_prr": metrics["mean_prr"],
                "epsilon": agent.epsilon(),
            }
        )
    agent.training = False
    artifacts = run(cfg, agent=agent, explore=False, seed=cfg.seed, write=False)
    artifacts.training_reports = training_reports + artifacts.training_reports
    artifacts.summary["training"] = {
        "episodes": episodes,
        "episode_metrics": episode_summaries,
    }
    artifacts.model_bytes = agent.save()
    if cfg.agent.model_out is not None:
        Path(cfg.agent.model_out).write_bytes(artifacts.model_bytes)
    target = out_dir if out_dir is not None else cfg.output_dir
    if write and target is not None:
        write_artifacts(artifacts, Path(target))
    return artifacts


# -- artifact serialization ----------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: list[str], rows: list[tuple]) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def write_artifacts(artifacts: RunArtifacts, out_dir: Path) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts.out_dir = out_dir

    (out_dir / "summary.json").write_text(json.dumps(artifacts.summary, indent=1) + "\n")

    _write_csv(
        out_dir / "windows.csv",
        [
            "t_ms", "ue", "mode", "burstsSent", "burstsReceived", "prr",
            "meanDelayMs", "delayDefined", "bytesReceived", "qoe", "reward",
        ],
        [
            (
                r.t / 1000.0, r.ue_id, r.window.mode_id, r.window.bursts_sent,
                r.window.bursts_received, r.window.prr,
                r.window.mean_burst_delay_s * 1000.0, r.window.delay_defined,
                r.window.bytes_received, r.qoe, r.reward,
            )
            for r in artifacts.controller_rows
        ],
    )
    _write_csv(
        out_dir / "controller.csv",
        ["t_ms", "ue", "s1", "s2", "s3", "s4", "s5", "s6", "s7", "s8",
         "action", "reward", "notified", "notificationOutcome"],
        [
            (
                r.t / 1000.0, r.ue_id, *[float(x) for x in r.state], r.action,
                r.reward, r.notified, r.notification_outcome,
            )
            for r in artifacts.controller_rows
        ],
    )
    _write_csv(
        out_dir / "bursts.csv",
        ["ue", "burstId", "mode", "totalBytes", "fragmentCount", "fragmentsAccepted",
         "fragmentsReceived", "generatedMs", "completedMs", "delayMs"],
        [
            (
                b.ue_id, b.burst_id, b.mode_id, b.total_bytes, b.fragment_count,
                b.fragments_accepted, b.fragments_received, b.generated_at / 1000.0,
                None if b.completed_at is None else b.completed_at / 1000.0,
                None if b.delay_us is None else b.delay_us / 1000.0,
            )
            for ue in sorted(artifacts.bursts)
            for b in artifacts.bursts[ue]
        ],
    )
    _write_csv(
        out_dir / "notifications.csv",
        ["issuedMs", "ue", "action", "mechanism", "status", "deliveredMs", "lagMs"],
        [
            (
                r.issued_at / 1000.0, r.ue_id, r.action, r.mechanism, r.status,
                None if r.delivered_at is None else r.delivered_at / 1000.0,
                None if r.lag_us is None else r.lag_us / 1000.0,
            )
            for r in artifacts.notifications
        ],
    )
    _write_csv(
        out_dir / "cell.csv",
        ["t_ms", "activeUes", "servedUlBytes", "servedDlBytes", "meanShare"],
        [
            (c.t / 1000.0, c.active_ues, c.served_ul_bytes, c.served_dl_bytes, c.mean_share)
            for c in artifacts.cell_reports
        ],
    )
    _write_csv(
        out_dir / "training.csv",
        ["update_idx", "loss", "epsilon", "meanQ"],
        [(r.update_idx, r.loss, r.epsilon, r.mean_q) for r in artifacts.training_reports],
    )
    if artifacts.model_bytes is not None:
        (out_dir / "model.json").write_bytes(artifacts.model_bytes)


def _csv_rows(path: Path) -> list[dict[str, str]]:
    lines = path.read_text().splitlines()
    header = lines[0].split(",")
    return [dict(zip(header, line.split(","))) for line in lines[1:]]


def load_artifacts(out_dir: str | Path) -> RunArtifacts:
    """Reload a written artifact bundle for analysis or figure-data export.

    Restores the summary, per-burst records, and the per-window rows; the
    in-memory-only extras (notification callbacks, training reports) stay
    empty.
    """
    out_dir = Path(out_dir)
    summary = json.loads((out_dir / "summary.json").read_text())
    cfg = RunConfig.model_validate(summary["config"])
    mode_ids = cfg.mode_ids()
    chamfer = {m.id: m.chamfer_distance for m in cfg.app.modes}
    period_us = round(cfg.controller.period_ms * 1000)

    bursts: dict[int, list[Burst]] = {}
    for row in _csv_rows(out_dir / "bursts.csv"):
        ue = int(row["ue"])
        completed = None if row["completedMs"] == "" else round(float(row["completedMs"]) * 1000)
        bursts.setdefault(ue, []).append(
            Burst(
                burst_id=int(row["burstId"]),
                ue_id=ue,
                mode_index=mode_ids.index(row["mode"]),
                mode_id=row["mode"],
                chamfer_distance=chamfer[row["mode"]],
                total_bytes=int(row["totalBytes"]),
                generated_at=round(float(row["generatedMs"]) * 1000),
                fragment_count=int(row["fragmentCount"]),
                fragments_accepted=int(row["fragmentsAccepted"]),
                fragments_received=int(row["fragmentsReceived"]),
                completed_at=completed,
            )
        )
    window_rows = _csv_rows(out_dir / "windows.csv")
    ctl_rows = _csv_rows(out_dir / "controller.csv")
    rows = []
    for win, ctl in zip(window_rows, ctl_rows):
        t = round(float(win["t_ms"]) * 1000)
        window = AppStatsWindow(
            ue_id=int(win["ue"]),
            window_start=max(0, t - period_us),
            window_end=t,
            bursts_sent=int(win["burstsSent"]),
            bursts_received=int(win["burstsReceived"]),
            bytes_received=int(win["bytesReceived"]),
            mean_burst_delay_s=float(win["meanDelayMs"]) / 1000.0,
            prr=float(win["prr"]),
            delay_defined=win["delayDefined"] == "1",
            mode_index=mode_ids.index(win["mode"]),
            mode_id=win["mode"],
            chamfer_distance=chamfer[win["mode"]],
            last_frame_bytes=0,
        )
        rows.append(
            ControllerRow(
                t=t,
                ue_id=int(win["ue"]),
                state=np.array([float(ctl[f"s{i}"]) for i in range(1, 9)]),
                action=int(ctl["action"]),
                reward=None if win["reward"] == "" else float(win["reward"]),
                window=window,
                qoe=float(win["qoe"]),
            )
        )
    return RunArtifacts(
        config=cfg,
        seed=summary["seed"],
        summary=summary,
        controller_rows=rows,
        notifications=[],
        cell_reports=[],
        bursts=bursts,
        out_dir=out_dir,
    )


def emit_figure_data(artifact_sets: list[RunArtifacts], out_dir: str | Path) -> dict[str, Path]:
    """Long-format distribution data for external plotting.

    One row per completed burst (delays) and one per observed window (PRR),
    keyed by policy, vehicle count, and notification mechanism.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    delay_rows = []
    prr_rows = []
    for art in artifact_sets:
        key = (
            art.config.policy,
            art.config.scenario.n_vehicles,
            art.config.controller.mechanism,
            art.seed,
        )
        for ue in sorted(art.bursts):
            for b in art.bursts[ue]:
                if b.completed_at is not None:
                    delay_rows.append((*key, ue, b.burst_id, b.delay_us / 1000.0))
        for r in art.controller_rows:
            if r.window.bursts_sent > 0:
                prr_rows.append((*key, r.ue_id, r.t / 1000.0, r.window.prr))
    delays_path = out_dir / "delays.csv"
    prr_path = out_dir / "prr.csv"
    _write_csv(
        delays_path,
        ["policy", "nVehicles", "mechanism", "seed", "ue", "burstId", "delayMs"],
        delay_rows,
    )
    _write_csv(
        prr_path,
        ["policy", "nVehicles", "mechanism", "seed", "ue", "t_ms", "prr"],
        prr_rows,
    )
    return {"delays": delays_path, "prr": prr_path}
