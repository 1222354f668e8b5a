"""Remote-agent adapter: protocol behavior against a scripted peer, then
full parity between the in-process agent and the external reference agent."""

import contextlib
import copy
import json
import re
import shutil
import socket
import subprocess
import threading
from pathlib import Path

import numpy as np
import pytest

from pqos_sim.agent import load_model
from pqos_sim.bridge import BridgeError, RemoteAgent
from pqos_sim.config import RunConfig
from pqos_sim.runner import run

from conftest import verdict

BRIDGE_DIST = Path(__file__).resolve().parents[1] / "agent-bridge" / "dist" / "main.js"


class ScriptedPeer:
    """Single-connection NDJSON server answering via a script function.

    The script maps a parsed request to a reply dict, a raw string (sent
    verbatim), "close" (drop the connection), or None (stay silent).
    """

    def __init__(self, script):
        self.script = script
        self._sock = socket.socket()
        self._sock.bind(("127.0.0.1", 0))
        self._sock.listen(1)
        self.port = self._sock.getsockname()[1]
        self._thread = threading.Thread(target=self._serve, daemon=True)
        self._thread.start()

    def _serve(self):
        try:
            conn, _ = self._sock.accept()
        except OSError:
            return
        with conn, contextlib.suppress(OSError):
            reader = conn.makefile("r", encoding="utf-8")
            writer = conn.makefile("w", encoding="utf-8")
            for line in reader:
                reply = self.script(json.loads(line))
                if reply is None:
                    continue
                if reply == "close":
                    return
                writer.write((reply if isinstance(reply, str) else json.dumps(reply)) + "\n")
                writer.flush()

    def close(self):
        self._sock.close()


def well_behaved(msg: dict):
    base = {"v": 1, "step_idx": msg["step_idx"]}
    kind = msg["type"]
    if kind == "hello":
        return {**base, "type": "hello", "run_id": msg["run_id"]}
    if kind == "state_batch":
        return {
            **base,
            "type": "action_batch",
            "ue_ids": msg["ue_ids"],
            "actions": [0] * len(msg["ue_ids"]),
            "epsilon": 0.25,
        }
    if kind == "transition_batch":
        return {**base, "type": "ack", "report": {"loss": 0.5, "mean_q": -1.0, "epsilon": 0.2}}
    if kind == "save":
        return {**base, "type": "ack", "model": '{"format": "pqos-sim-qnet"}'}
    if kind == "shutdown":
        return {**base, "type": "ack"}
    raise AssertionError(f"unexpected message {msg}")


@contextlib.contextmanager
def peer(script=well_behaved, **agent_kwargs):
    server = ScriptedPeer(script)
    agent = None
    try:
        agent = RemoteAgent(port=server.port, timeout_s=0.5, **agent_kwargs)
        yield agent
    finally:
        if agent is not None:
            agent.close()
        server.close()


class FakeTransition:
    def __init__(self):
        self.ue_id = 3
        self.state = np.array([0.1, 0.2])
        self.action = 1
        self.next_state = np.array([0.3, 0.4])
        self.reward = 0.5


def test_happy_path_actions_updates_and_save():
    with peer() as agent:
        actions = agent.get_action(np.array([[0.1, 0.2], [0.3, 0.4]]))
        assert actions.tolist() == [0, 0]
        assert actions.dtype == np.int64
        assert agent.action_steps == 1
        assert agent.epsilon() == 0.25

        agent.get_action(np.array([[0.1, 0.2]]), explore=False)
        assert agent.action_steps == 1

        report = agent.update([FakeTransition()])
        assert report is not None
        assert (report.loss, report.mean_q, report.epsilon) == (0.5, -1.0, 0.2)
        assert agent.update_steps == 1

        assert agent.save() == b'{"format": "pqos-sim-qnet"}'
        # hello=0, two decisions, one update, one save
        assert agent.step_idx == 5


def test_update_without_report_returns_none():
    def script(msg):
        if msg["type"] == "transition_batch":
            return {"v": 1, "type": "ack", "step_idx": msg["step_idx"], "report": None}
        return well_behaved(msg)

    with peer(script) as agent:
        assert agent.update([FakeTransition()]) is None
        assert agent.update_steps == 0


def test_rejects_non_matrix_states():
    with peer() as agent:
        with pytest.raises(ValueError, match="matrix"):
            agent.get_action(np.array([0.1, 0.2]))


def test_connection_refused():
    probe = socket.socket()
    probe.bind(("127.0.0.1", 0))
    port = probe.getsockname()[1]
    probe.close()
    with pytest.raises(BridgeError, match="cannot reach"):
        RemoteAgent(port=port, timeout_s=0.5)


@pytest.mark.parametrize(
    "mutate, needle",
    [
        (lambda r: {**r, "v": 2}, "protocol version mismatch"),
        (lambda r: {**r, "step_idx": 9}, "expected hello for step 0"),
        (lambda r: {**r, "type": "ack"}, "expected hello for step 0"),
        (lambda r: {"v": 1, "type": "error", "step_idx": 0, "message": "nope"}, "refused step 0: nope"),
        (lambda r: "{broken", "malformed reply at step 0"),
        (lambda r: "[1, 2]", "not an object"),
    ],
)
def test_bad_hello_replies(mutate, needle):
    def script(msg):
        return mutate(well_behaved(msg))

    server = ScriptedPeer(script)
    try:
        with pytest.raises(BridgeError, match=re.escape(needle)):
            RemoteAgent(port=server.port, timeout_s=0.5)
    finally:
        server.close()


def test_reordered_users_rejected():
    def script(msg):
        reply = well_behaved(msg)
        if msg["type"] == "state_batch":
            reply["ue_ids"] = list(reversed(msg["ue_ids"]))
        return reply

    with peer(script) as agent:
        with pytest.raises(BridgeError, match="reordered"):
            agent.get_action(np.zeros((2, 8)))


def test_malformed_actions_rejected():
    def script(msg):
        reply = well_behaved(msg)
        if msg["type"] == "state_batch":
            reply["actions"] = [0.5] * len(msg["ue_ids"])
        return reply

    with peer(script) as agent:
        with pytest.raises(BridgeError, match="malformed"):
            agent.get_action(np.zeros((1, 8)))


def test_timeout_names_the_pending_step():
    def script(msg):
        if msg["type"] == "state_batch":
            return None  # stay silent until the client gives up
        return well_behaved(msg)

    with peer(script) as agent:
        with pytest.raises(BridgeError, match="bridge i/o failed at step 1"):
            agent.get_action(np.zeros((1, 8)))


def test_dropped_connection_names_the_step():
    def script(msg):
        if msg["type"] == "state_batch":
            return "close"
        return well_behaved(msg)

    with peer(script) as agent:
        with pytest.raises(BridgeError, match="closed the connection at step 1"):
            agent.get_action(np.zeros((1, 8)))


def test_nan_states_never_reach_the_wire():
    with peer() as agent:
        with pytest.raises(BridgeError, match="unserializable"):
            agent.get_action(np.array([[float("nan"), 0.0]]))


def test_closed_session_refuses_further_use():
    with peer() as agent:
        agent.close()
        with pytest.raises(BridgeError, match="closed"):
            agent.get_action(np.zeros((1, 2)))


# -- external reference agent parity ------------------------------------------


def parity_config() -> RunConfig:
    cfg = RunConfig(policy="dql", seed=21)
    cfg.scenario.n_vehicles = 2
    cfg.scenario.duration_s = 2.0
    cfg.agent.hidden_sizes = [4]
    cfg.agent.batch_size = 4
    cfg.agent.replay_capacity = 64
    cfg.agent.epsilon_decay_steps = 50
    return cfg


@pytest.mark.skipif(
    shutil.which("node") is None or not BRIDGE_DIST.exists(),
    reason="needs node and a built agent-bridge (npm run build)",
)
def test_remote_reference_agent_matches_in_process_run(tmp_path):
    with verdict("09 bridge parity with the external reference agent"):
        train_cfg = parity_config()
        trained = run(train_cfg, write=False)
        model_path = tmp_path / "model.json"
        model_path.write_bytes(trained.model_bytes)

        eval_cfg = parity_config()
        eval_cfg.agent.mode = "evaluate"
        eval_cfg.agent.model_in = str(model_path)
        local = run(eval_cfg, write=False)
        local_actions = [(r.t, r.ue_id, r.action) for r in local.controller_rows]
        assert local_actions

        proc = subprocess.Popen(
            ["node", str(BRIDGE_DIST), "--port", "0", "--model-in", str(model_path), "--mode", "eval"],
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
        )
        try:
            banner = proc.stdout.readline()
            match = re.search(r"listening on 127\.0\.0\.1:(\d+)", banner)
            assert match, f"no listen banner, stderr: {proc.stderr.read() if proc.poll() is not None else ''}"
            port = int(match.group(1))

            remote_cfg = parity_config()
            remote_cfg.agent.mode = "evaluate"
            remote_cfg.agent.model_in = str(model_path)
            agent = RemoteAgent(port=port, run_id="parity")
            ts_model_path = tmp_path / "model_ts.json"
            try:
                remote = run(remote_cfg, agent=agent, write=False)
                fetched = agent.save(remote_path=str(ts_model_path))
            finally:
                agent.close()
            proc.wait(timeout=10)
        finally:
            if proc.poll() is None:
                proc.kill()

        remote_actions = [(r.t, r.ue_id, r.action) for r in remote.controller_rows]
        assert remote_actions == local_actions

        # the externally saved model must be bit-identical to the one trained here
        original = load_model(trained.model_bytes)
        for data in (fetched, ts_model_path.read_bytes()):
            loaded = load_model(data, original.layer_sizes)
            assert all(np.array_equal(a, b) for a, b in zip(loaded.weights, original.weights))
            assert all(np.array_equal(a, b) for a, b in zip(loaded.biases, original.biases))

        local_summary = copy.deepcopy(local.summary)
        remote_summary = copy.deepcopy(remote.summary)
        local_summary.pop("agent")
        remote_summary.pop("agent")
        assert remote_summary == local_summary
