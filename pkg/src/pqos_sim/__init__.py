"""Discrete-event simulator of a teleoperated-driving cell with a RAN-side
controller that learns, per vehicle, which sensor-stream mode keeps delay and
reception ratio inside their tolerances at the least reconstruction loss.
"""

from .agent import (
    AgentHyperparams,
    DoubleDqlAgent,
    QNetwork,
    RewardConfig,
    Transition,
    compute_reward,
    load_model,
    save_model,
)
from .config import ConfigError, RunConfig, config_from_dict, load_config, validate_config
from .engine import Simulator
from .runner import RunArtifacts, emit_figure_data, run, train_then_eval

__version__ = "0.1.0"

__all__ = [
    "AgentHyperparams",
    "ConfigError",
    "DoubleDqlAgent",
    "QNetwork",
    "RewardConfig",
    "RunArtifacts",
    "RunConfig",
    "Simulator",
    "Transition",
    "compute_reward",
    "config_from_dict",
    "emit_figure_data",
    "load_config",
    "load_model",
    "run",
    "save_model",
    "train_then_eval",
    "validate_config",
    "__version__",
]
