"""Adapter that lets an external process act as the per-run decision agent.

Wire format: UTF-8 newline-delimited JSON over a local TCP stream, one
request/reply pair per line, a single step counter ordering every request.
The simulation clock does not advance while a reply is pending. Numbers are
serialized as shortest round-trip decimals, so float64 values cross the wire
bit-exactly. See docs/bridge-protocol.md for the message schema.
"""

import json
import socket

import numpy as np

from .agent import LossReport

PROTOCOL_VERSION = 1
DEFAULT_TIMEOUT_S = 30.0


class BridgeError(Exception):
    pass


class RemoteAgent:
    """get_action/update/save backend marshalled to an external agent.

    Implements the same synchronous contract as the in-process agent; each
    call blocks until the remote replies or the timeout lapses, and any
    protocol violation aborts the run with the offending step index.
    """

    def __init__(
        self,
        host: str = "127.0.0.1",
        port: int = 0,
        run_id: str = "run",
        timeout_s: float = DEFAULT_TIMEOUT_S,
    ):
        self.run_id = run_id
        self.step_idx = 0
        self.action_steps = 0
        self.update_steps = 0
        self.training = True
        self._last_epsilon = 0.0
        self._sock: socket.socket | None = None
        try:
            self._sock = socket.create_connection((host, port), timeout=timeout_s)
        except OSError as exc:
            raise BridgeError(f"cannot reach external agent at {host}:{port}: {exc}") from None
        self._sock.settimeout(timeout_s)
        self._reader = self._sock.makefile("r", encoding="utf-8", newline="\n")
        self._writer = self._sock.makefile("w", encoding="utf-8", newline="\n")
        self._exchange({"type": "hello", "run_id": run_id}, "hello")

    # -- wire plumbing -------------------------------------------------------

    def _exchange(self, payload: dict, expected_type: str) -> dict:
        if self._sock is None:
            raise BridgeError("bridge session is closed")
        step = self.step_idx
        self.step_idx += 1
        message = {"v": PROTOCOL_VERSION, "type": payload["type"], "step_idx": step, **payload}
        try:
            self._writer.write(json.dumps(message, allow_nan=False) + "\n")
            self._writer.flush()
            line = self._reader.readline()
        except ValueError as exc:
            raise BridgeError(f"unserializable payload at step {step}: {exc}") from None
        except OSError as exc:
            raise BridgeError(f"bridge i/o failed at step {step}: {exc}") from None
        if not line:
            raise BridgeError(f"external agent closed the connection at step {step}")
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as exc:
            raise BridgeError(f"malformed reply at step {step}: {exc}") from None
        if not isinstance(reply, dict):
            raise BridgeError(f"reply at step {step} is not an object")
        if reply.get("type") == "error":
            raise BridgeError(f"external agent refused step {step}: {reply.get('message')}")
        if reply.get("v") != PROTOCOL_VERSION:
            raise BridgeError(
                f"protocol version mismatch: remote speaks {reply.get('v')!r}, "
                f"this side speaks {PROTOCOL_VERSION}"
            )
        if reply.get("type") != expected_type or reply.get("step_idx") != step:
            raise BridgeError(
                f"expected {expected_type} for step {step}, got "
                f"{reply.get('type')!r} for step {reply.get('step_idx')!r}"
            )
        return reply

    # -- agent contract ------------------------------------------------------

    def get_action(self, states: np.ndarray, explore: bool = True) -> np.ndarray:
        states = np.asarray(states, dtype=np.float64)
        if states.ndim != 2:
            raise ValueError(f"expected a (users, features) matrix, got shape {states.shape}")
        ue_ids = list(range(states.shape[0]))
        reply = self._exchange(
            {
                "type": "state_batch",
                "run_id": self.run_id,
                "ue_ids": ue_ids,
                "states": states.tolist(),
                "explore": bool(explore),
            },
            "action_batch",
        )
        actions = reply.get("actions")
        if (
            not isinstance(actions, list)
            or len(actions) != len(ue_ids)
            or not all(isinstance(a, int) and a >= 0 for a in actions)
        ):
            raise BridgeError(f"action_batch for step {self.step_idx - 1} is malformed: {actions!r}")
        if reply.get("ue_ids") != ue_ids:
            raise BridgeError(f"action_batch reordered users: {reply.get('ue_ids')!r}")
        if explore:
            self.action_steps += 1
        if isinstance(reply.get("epsilon"), (int, float)):
            self._last_epsilon = float(reply["epsilon"])
        return np.asarray(actions, dtype=np.int64)

    def update(self, transitions) -> LossReport | None:
        payload = [
            {
                "ue_id": int(t.ue_id),
                "state": np.asarray(t.state, dtype=np.float64).tolist(),
                "action": int(t.action),
                "next_state": np.asarray(t.next_state, dtype=np.float64).tolist(),
                "reward": float(t.reward),
            }
            for t in transitions
        ]
        reply = self._exchange({"type": "transition_batch", "transitions": payload}, "ack")
        report = reply.get("report")
        if report is None:
            return None
        self.update_steps += 1
        return LossReport(
            update_idx=self.update_steps,
            loss=float(report["loss"]),
            epsilon=float(report["epsilon"]),
            mean_q=float(report["mean_q"]),
        )

    def save(self, remote_path: str | None = None) -> bytes:
        """Fetch the remote model; optionally also persist it remote-side."""
        payload: dict = {"type": "save"}
        if remote_path is not None:
            payload["path"] = str(remote_path)
        reply = self._exchange(payload, "ack")
        model = reply.get("model")
        if not isinstance(model, str):
            raise BridgeError("save reply carries no model payload")
        return model.encode("utf-8")

    def epsilon(self) -> float:
        return self._last_epsilon

    # -- lifecycle -----------------------------------------------------------

    def close(self) -> None:
        if self._sock is None:
            return
        try:
            self._exchange({"type": "shutdown"}, "ack")
        except BridgeError:
            pass
        finally:
            sock, self._sock = self._sock, None
            self._reader.close()
            self._writer.close()
            sock.close()

    def __enter__(self) -> "RemoteAgent":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
