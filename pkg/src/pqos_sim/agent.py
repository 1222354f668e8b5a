"""Centralized Double-DQL agent.

Feed-forward Q-network with hand-rolled backpropagation (ReLU hidden layers,
identity output), uniform replay buffer, epsilon-greedy batch action
selection, and the double-Q update rule: the online network picks the argmax
action at s', the target network evaluates it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

MODEL_FORMAT = "pqos-sim-qnet"
MODEL_VERSION = 1


class ModelFormatError(Exception):
    pass


@dataclass
class RewardConfig:
    """Mixing weights and QoS/QoE tolerances for the scalar reward."""

    alpha: float = 1.0
    delta_max_s: float = 0.050
    prr_min: float = 1.0
    cd_max: float = 45.0


def compute_reward(cfg: RewardConfig, delay_s: float, prr: float, chamfer_distance: float) -> float:
    """Reward for one closed KPI window under the mode that governed it.

    Zero whenever the QoS gate fails (delay at or beyond the tolerated
    maximum, or reception ratio below the tolerated minimum); otherwise a
    convex mix of the normalized delay margin and the normalized distortion
    margin, clipped to [0, 1].
    """
    if delay_s >= cfg.delta_max_s or prr < cfg.prr_min:
        return 0.0
    qos_term = (cfg.delta_max_s - delay_s) / cfg.delta_max_s
    qoe_term = (cfg.cd_max - chamfer_distance) / cfg.cd_max
    reward = (1.0 - cfg.alpha) * qos_term + cfg.alpha * qoe_term
    return min(1.0, max(0.0, reward))


@dataclass
class AgentHyperparams:
    discount: float = 0.95
    learning_rate: float = 1e-4
    weight_decay: float = 1e-3
    batch_size: int = 32
    replay_capacity: int = 10_000
    target_sync_period: int = 100
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    epsilon_decay_steps: int = 5_000

    def validate(self) -> None:
        if not 0.0 <= self.discount < 1.0:
            raise ValueError(f"discount must be in [0,1), got {self.discount}")
        for name in ("learning_rate", "weight_decay"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.batch_size < 1 or self.replay_capacity < self.batch_size:
            raise ValueError("replay capacity must be >= batch size >= 1")
        if self.target_sync_period < 1 or self.epsilon_decay_steps < 1:
            raise ValueError("periods must be >= 1")


class QNetwork:
    """Fully-connected Q-value network; weights are (out, in) matrices."""

    def __init__(self, layer_sizes: list[int], weights: list[np.ndarray], biases: list[np.ndarray]):
        self.layer_sizes = list(layer_sizes)
        self.weights = weights
        self.biases = biases

    @classmethod
    def initialize(cls, layer_sizes: list[int], rng: np.random.Generator) -> "QNetwork":
        """Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)] per layer."""
        if len(layer_sizes) < 2:
            raise ValueError("need at least input and output layer sizes")
        weights, biases = [], []
        for fan_in, fan_out in zip(layer_sizes, layer_sizes[1:]):
            bound = 1.0 / math.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
            biases.append(rng.uniform(-bound, bound, size=fan_out))
        return cls(layer_sizes, weights, biases)

    @property
    def input_width(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_width(self) -> int:
        return self.layer_sizes[-1]

    def clone(self) -> "QNetwork":
        return QNetwork(
            self.layer_sizes,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )

    def copy_from(self, other: "QNetwork") -> None:
        if other.layer_sizes != self.layer_sizes:
            raise ValueError(f"shape mismatch: {other.layer_sizes} vs {self.layer_sizes}")
        self.weights = [w.copy() for w in other.weights]
        self.biases = [b.copy() for b in other.biases]

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Q-values for a single state (1-D) or a batch (2-D, rows = states)."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.input_width:
            raise ValueError(f"state width {x.shape[-1]} does not match network input {self.input_width}")
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w.T + b
            if i != last:
                h = np.maximum(h, 0.0)
        return h

    def forward_cached(self, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray], list[np.ndarray]]:
        """Batch forward pass keeping pre-activations and activations for backprop."""
        h = np.asarray(x, dtype=np.float64)
        pre, act = [], [h]
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = act[-1] @ w.T + b
            pre.append(z)
            h = np.maximum(z, 0.0) if i != last else z
            act.append(h)
        return act[-1], pre, act

    def backward(
        self, pre: list[np.ndarray], act: list[np.ndarray], dq: np.ndarray
    ) -> tuple[list[np.ndarray], list[np.ndarray]]:
        """Gradients of a scalar loss given dLoss/dQ for the cached batch pass."""
        grad_w = [np.empty(0)] * len(self.weights)
        grad_b = [np.empty(0)] * len(self.biases)
        delta = dq
        for i in range(len(self.weights) - 1, -1, -1):
            grad_w[i] = delta.T @ act[i]
            grad_b[i] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ self.weights[i]) * (pre[i - 1] > 0.0)
        return grad_w, grad_b

    def to_json(self) -> str:
        payload = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "layer_sizes": self.layer_sizes,
            "layers": [
                {"weights": w.tolist(), "bias": b.tolist()}
                for w, b in zip(self.weights, self.biases)
            ],
        }
        return json.dumps(payload, indent=1)

    @classmethod
    def from_json(cls, text: str | bytes, expected_sizes: list[int] | None = None) -> "QNetwork":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"not a valid model file: {exc}") from None
        if not isinstance(payload, dict) or payload.get("format") != MODEL_FORMAT:
            raise ModelFormatError(f"unknown model format {payload.get('format')!r}" if isinstance(payload, dict) else "unknown model format")
        if payload.get("version") != MODEL_VERSION:
            raise ModelFormatError(f"unsupported model version {payload.get('version')!r}, expected {MODEL_VERSION}")
        sizes = payload.get("layer_sizes")
        layers = payload.get("layers")
        if not isinstance(sizes, list) or not isinstance(layers, list) or len(layers) != len(sizes) - 1:
            raise ModelFormatError("model file layer structure is inconsistent")
        if expected_sizes is not None and sizes != list(expected_sizes):
            raise ModelFormatError(f"model layer sizes {sizes} do not match configured sizes {list(expected_sizes)}")
        weights, biases = [], []
        for i, layer in enumerate(layers):
            try:
                w = np.asarray(layer["weights"], dtype=np.float64)
                b = np.asarray(layer["bias"], dtype=np.float64)
            except (KeyError, TypeError, ValueError) as exc:
                raise ModelFormatError(f"layer {i} is malformed: {exc}") from None
            want = (sizes[i + 1], sizes[i])
            if w.shape != want or b.shape != (sizes[i + 1],):
                raise ModelFormatError(
                    f"layer {i} has shape {w.shape}x{b.shape}, expected {want}x({sizes[i + 1]},)"
                )
            weights.append(w)
            biases.append(b)
        net = cls(sizes, weights, biases)
        if not all(np.all(np.isfinite(w)) for w in weights) or not all(np.all(np.isfinite(b)) for b in biases):
            raise ModelFormatError("model file contains non-finite parameters")
        return net


def save_model(net: QNetwork) -> bytes:
    return net.to_json().encode("utf-8")


def load_model(data: bytes | str, expected_sizes: list[int] | None = None) -> QNetwork:
    return QNetwork.from_json(data, expected_sizes)


@dataclass
class Transition:
    ue_id: int
    state: np.ndarray
    action: int
    next_state: np.ndarray
    reward: float


class ReplayBuffer:
    """Fixed-capacity ring holding the most recent transitions."""

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._store: list[Transition] = []
        self._next = 0

    def __len__(self) -> int:
        return len(self._store)

    def append(self, tr: Transition) -> None:
        if len(self._store) < self.capacity:
            self._store.append(tr)
        else:
            self._store[self._next] = tr
        self._next = (self._next + 1) % self.capacity

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        """Uniform sample without replacement within the batch."""
        idx = rng.choice(len(self._store), size=batch_size, replace=False)
        return [self._store[i] for i in idx]


@dataclass
class LossReport:
    update_idx: int
    loss: float
    epsilon: float
    mean_q: float


class DoubleDqlAgent:
    """get_action/update contract shared by all agent backends.

    One network pair serves every user; transitions from all users land in a
    single replay buffer. Exploration decays linearly with controller steps.
    """

    def __init__(
        self,
        layer_sizes: list[int],
        hyper: AgentHyperparams,
        init_rng: np.random.Generator,
        rng: np.random.Generator,
        online: QNetwork | None = None,
    ):
        hyper.validate()
        self.hyper = hyper
        self.rng = rng
        self.online = online if online is not None else QNetwork.initialize(layer_sizes, init_rng)
        if online is not None and online.layer_sizes != list(layer_sizes):
            raise ModelFormatError(
                f"model layer sizes {online.layer_sizes} do not match configured sizes {list(layer_sizes)}"
            )
        self.target = self.online.clone()
        self.replay = ReplayBuffer(hyper.replay_capacity)
        self.action_steps = 0  # get_action calls with exploration on
        self.update_steps = 0  # gradient steps taken
        self.training = True

    @property
    def action_space(self) -> int:
        return self.online.output_width

    def epsilon(self) -> float:
        h = self.hyper
        if self.action_steps >= h.epsilon_decay_steps:
            return h.epsilon_end
        frac = self.action_steps / h.epsilon_decay_steps
        return h.epsilon_start + (h.epsilon_end - h.epsilon_start) * frac

    def get_action(self, states: np.ndarray, explore: bool = True) -> np.ndarray:
        """Epsilon-greedy actions for a batch of states, one row per user.

        Ties in the Q-values resolve to the lowest action index. The decay
        schedule advances once per call, not once per user.
        """
        states = np.atleast_2d(np.asarray(states, dtype=np.float64))
        eps = self.epsilon() if explore else 0.0
        if explore:
            self.action_steps += 1
        q = self.online.forward(states)
        actions = np.argmax(q, axis=1)
        if eps > 0.0:
            coins = self.rng.random(len(states))
            randoms = self.rng.integers(0, self.action_space, size=len(states))
            actions = np.where(coins < eps, randoms, actions)
        return actions.astype(int)

    def update(self, transitions: list[Transition]) -> LossReport | None:
        """Store transitions and take one double-Q gradient step when possible.

        Returns None until the replay buffer holds a full batch.
        """
        if not self.training:
            return None
        for tr in transitions:
            if len(tr.state) != self.online.input_width or len(tr.next_state) != self.online.input_width:
                raise ValueError("transition state width does not match network input")
            self.replay.append(tr)
        if len(self.replay) < self.hyper.batch_size:
            return None
        batch = self.replay.sample(self.hyper.batch_size, self.rng)
        s = np.array([tr.state for tr in batch], dtype=np.float64)
        a = np.array([tr.action for tr in batch], dtype=np.int64)
        r = np.array([tr.reward for tr in batch], dtype=np.float64)
        s_next = np.array([tr.next_state for tr in batch], dtype=np.float64)

        best_next = np.argmax(self.online.forward(s_next), axis=1)
        q_target_next = self.target.forward(s_next)
        y = r + self.hyper.discount * q_target_next[np.arange(len(batch)), best_next]

        q, pre, act = self.online.forward_cached(s)
        q_sel = q[np.arange(len(batch)), a]
        err = q_sel - y
        loss = float(np.mean(err**2))
        dq = np.zeros_like(q)
        dq[np.arange(len(batch)), a] = 2.0 * err / len(batch)
        grad_w, grad_b = self.online.backward(pre, act, dq)

        zeta, eps_decay = self.hyper.learning_rate, self.hyper.weight_decay
        for w, gw in zip(self.online.weights, grad_w):
            w -= zeta * (gw + eps_decay * w)
        for b, gb in zip(self.online.biases, grad_b):
            b -= zeta * gb
        self.update_steps += 1
        if self.update_steps % self.hyper.target_sync_period == 0:
            self.target.copy_from(self.online)
        return LossReport(
            update_idx=self.update_steps,
            loss=loss,
            epsilon=self.epsilon(),
            mean_q=float(np.mean(q_sel)),
        )

    def save(self) -> bytes:
        return save_model(self.online)
