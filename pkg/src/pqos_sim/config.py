"""Run configuration: one JSON document describes one simulation run.

Pydantic models give field-level validation; `semantic_errors` adds the
cross-field checks so a bad config fails with an itemized list before any
simulation starts.
"""

from __future__ import annotations

import json
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, ValidationError

POLICY_DQL = "dql"
CONSTANT_PREFIX = "constant:"


class ConfigError(Exception):
    """Itemized configuration problems."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {p}" for p in problems))


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SynthChannelSpec(StrictModel):
    """Log-distance path loss with optional first-order autoregressive shadowing."""

    pl0_db: float = 61.0
    d0_m: float = Field(default=10.0, gt=0)
    exponent: float = Field(default=2.7, gt=0)
    shadowing_sigma_db: float = Field(default=0.0, ge=0)
    shadowing_rho: float = Field(default=0.9, ge=0, lt=1)
    step_s: float = Field(default=0.1, gt=0)
    min_distance_m: float = Field(default=1.0, gt=0)


class ScenarioConfig(StrictModel):
    n_vehicles: int = Field(default=1, ge=1)
    duration_s: float = Field(default=80.0, gt=0)
    gnb_x_m: float = 0.0
    gnb_y_m: float = 25.0
    vehicle_start_x_m: float = -360.0
    vehicle_spacing_m: float = 30.0
    vehicle_speed_mps: float = 9.0
    trace_path: str | None = None
    synth: SynthChannelSpec = SynthChannelSpec()


class RanConfig(StrictModel):
    tx_power_dbm: float = 23.0
    bandwidth_hz: float = Field(default=50e6, gt=0)
    noise_figure_db: float = 5.0
    carrier_hz: float = Field(default=3.5e9, gt=0)
    tti_us: int = Field(default=1000, ge=1)
    mac_efficiency: float = Field(default=0.8, gt=0, le=1)
    se_max: float = Field(default=7.8, gt=0)
    snr_outage_db: float = -5.0
    rlc_capacity_bytes: int = Field(default=3_000_000, ge=1)


class AppModeSpec(StrictModel):
    id: str
    chamfer_distance: float = Field(ge=0)
    mean_frame_bytes: int = Field(ge=1)
    jitter_frac: float = Field(default=0.1, ge=0, lt=1)


def default_modes() -> list[AppModeSpec]:
    return [
        AppModeSpec(id="C-R", chamfer_distance=0.0, mean_frame_bytes=1_900_000),
        AppModeSpec(id="C-SC", chamfer_distance=5.4, mean_frame_bytes=600_000),
        AppModeSpec(id="C-SA", chamfer_distance=35.1, mean_frame_bytes=120_000),
    ]


class CbrConfig(StrictModel):
    enabled: bool = True
    packet_bytes: int = Field(default=200, ge=1)
    period_ms: float = Field(default=5.0, gt=0)


class AppConfig(StrictModel):
    modes: list[AppModeSpec] = Field(default_factory=default_modes)
    start_mode: str = "C-R"
    frame_period_ms: float = Field(default=100.0, gt=0)
    mtu_payload_bytes: int = Field(default=1460, ge=1)
    frame_trace_path: str | None = None
    frame_trace_loop: bool = True
    downlink: CbrConfig = CbrConfig()


class ControllerConfig(StrictModel):
    period_ms: float = Field(default=100.0, gt=0)
    mechanism: str = "ideal"
    notification_loss_prob: float = Field(default=0.0, ge=0, le=1)


class RewardSpec(StrictModel):
    alpha: float = Field(default=1.0, ge=0, le=1)
    delta_max_ms: float = Field(default=50.0, gt=0)
    prr_min: float = Field(default=1.0, ge=0, le=1)
    cd_max: float = Field(default=45.0, gt=0)


class AgentConfig(StrictModel):
    hidden_sizes: list[int] = Field(default_factory=lambda: [12, 6])
    discount: float = Field(default=0.95, ge=0, lt=1)
    learning_rate: float = Field(default=1e-4, gt=0)
    weight_decay: float = Field(default=1e-3, gt=0)
    batch_size: int = Field(default=32, ge=1)
    replay_capacity: int = Field(default=10_000, ge=1)
    target_sync_period: int = Field(default=100, ge=1)
    epsilon_start: float = Field(default=1.0, ge=0, le=1)
    epsilon_end: float = Field(default=0.05, ge=0, le=1)
    epsilon_decay_steps: int = Field(default=5_000, ge=1)
    reward: RewardSpec = RewardSpec()
    mode: str = "train"  # train | evaluate
    model_in: str | None = None
    model_out: str | None = None


class RunConfig(StrictModel):
    policy: str = POLICY_DQL
    seed: int = Field(default=1, ge=0)
    scenario: ScenarioConfig = ScenarioConfig()
    ran: RanConfig = RanConfig()
    app: AppConfig = AppConfig()
    controller: ControllerConfig = ControllerConfig()
    agent: AgentConfig = AgentConfig()
    output_dir: str | None = None

    def mode_ids(self) -> list[str]:
        return [m.id for m in self.app.modes]

    def constant_mode_id(self) -> str | None:
        if self.policy.startswith(CONSTANT_PREFIX):
            return self.policy[len(CONSTANT_PREFIX):]
        return None


def semantic_errors(cfg: RunConfig) -> list[str]:
    """Cross-field validation; returns every problem found, not just the first."""
    problems: list[str] = []
    mode_ids = cfg.mode_ids()
    if len(set(mode_ids)) != len(mode_ids):
        problems.append(f"app.modes ids must be unique, got {mode_ids}")
    if len(mode_ids) < 2:
        problems.append("app.modes needs at least two modes for the action set")

    if cfg.policy != POLICY_DQL:
        const = cfg.constant_mode_id()
        if const is None:
            problems.append(
                f"policy must be '{POLICY_DQL}' or '{CONSTANT_PREFIX}<mode id>', got {cfg.policy!r}"
            )
        elif const not in mode_ids:
            problems.append(f"policy names unknown mode {const!r}; configured modes are {mode_ids}")
    if cfg.app.start_mode not in mode_ids:
        problems.append(f"app.start_mode {cfg.app.start_mode!r} is not in the mode table {mode_ids}")

    period_us = round(cfg.controller.period_ms * 1000)
    duration_us = round(cfg.scenario.duration_s * 1_000_000)
    frame_us = round(cfg.app.frame_period_ms * 1000)
    if period_us % cfg.ran.tti_us != 0:
        problems.append(
            f"controller.period_ms ({cfg.controller.period_ms}) must be a whole number of TTIs ({cfg.ran.tti_us} us)"
        )
    if duration_us % period_us != 0:
        problems.append(
            f"scenario.duration_s ({cfg.scenario.duration_s}) must be a multiple of controller.period_ms ({cfg.controller.period_ms})"
        )
    if frame_us <= 0:
        problems.append("app.frame_period_ms must be positive")

    if cfg.controller.mechanism not in ("ideal", "real"):
        problems.append(f"controller.mechanism must be 'ideal' or 'real', got {cfg.controller.mechanism!r}")
    if cfg.agent.mode not in ("train", "evaluate"):
        problems.append(f"agent.mode must be 'train' or 'evaluate', got {cfg.agent.mode!r}")
    if cfg.agent.epsilon_end > cfg.agent.epsilon_start:
        problems.append("agent.epsilon_end must not exceed agent.epsilon_start")
    if cfg.agent.replay_capacity < cfg.agent.batch_size:
        problems.append("agent.replay_capacity must be >= agent.batch_size")
    for mode in cfg.app.modes:
        if mode.chamfer_distance >= cfg.agent.reward.cd_max:
            problems.append(
                f"mode {mode.id!r} chamfer_distance {mode.chamfer_distance} must stay below reward.cd_max {cfg.agent.reward.cd_max}"
            )
    if cfg.scenario.trace_path is not None and not Path(cfg.scenario.trace_path).exists():
        problems.append(f"scenario.trace_path does not exist: {cfg.scenario.trace_path}")
    if cfg.app.frame_trace_path is not None and not Path(cfg.app.frame_trace_path).exists():
        problems.append(f"app.frame_trace_path does not exist: {cfg.app.frame_trace_path}")
    if cfg.agent.model_in is not None and not Path(cfg.agent.model_in).exists():
        problems.append(f"agent.model_in does not exist: {cfg.agent.model_in}")
    return problems


def validate_config(cfg: RunConfig) -> None:
    problems = semantic_errors(cfg)
    if problems:
        raise ConfigError(problems)


def config_from_dict(data: dict) -> RunConfig:
    """Build and fully validate a config, itemizing every schema violation."""
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        problems = [
            f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}"
            for err in exc.errors()
        ]
        raise ConfigError(problems) from None
    validate_config(cfg)
    return cfg


def load_config(path: str | Path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError([f"config file not found: {path}"]) from None
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config file is not valid JSON: {exc}"]) from None
    if not isinstance(data, dict):
        raise ConfigError(["config root must be a JSON object"])
    return config_from_dict(data)
