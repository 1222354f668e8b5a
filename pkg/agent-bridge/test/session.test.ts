import { describe, expect, it } from "vitest";

import { DoubleDqlAgent, defaultHyperparams, mulberry32 } from "../src/agent.js";
import { QNetwork } from "../src/qnet.js";
import { BridgeSession, type SessionOptions } from "../src/session.js";

// q0 = s0 + s1, q1 = s0 - s1: action 0 wins iff s1 > 0 (ties go to 0)
function makeAgent(): DoubleDqlAgent {
  const net = new QNetwork([2, 2], [[[1, 1], [1, -1]]], [[0, 0]]);
  return new DoubleDqlAgent(
    [2, 2],
    { ...defaultHyperparams, batchSize: 2, replayCapacity: 4 },
    mulberry32(0),
    mulberry32(1),
    net
  );
}

function makeSession(opts: SessionOptions = {}) {
  const agent = makeAgent();
  return { agent, session: new BridgeSession(agent, opts) };
}

function send(session: BridgeSession, msg: Record<string, unknown>) {
  const result = session.handleLine(JSON.stringify(msg));
  expect(result).not.toBeNull();
  return { ...result!, body: JSON.parse(result!.reply) };
}

const hello = { v: 1, type: "hello", step_idx: 0, run_id: "t" };

describe("session happy path", () => {
  it("answers hello, decides, learns, saves and shuts down", () => {
    const written: Record<string, string> = {};
    const { session } = makeSession({ writeFile: (p, d) => (written[p] = d) });

    const greeting = send(session, hello);
    expect(greeting.body).toMatchObject({ v: 1, type: "hello", step_idx: 0, run_id: "t" });

    const decision = send(session, {
      v: 1,
      type: "state_batch",
      step_idx: 1,
      run_id: "t",
      ue_ids: [4, 9],
      states: [
        [0.5, 1.0],
        [0.5, -1.0],
      ],
      explore: false,
    });
    expect(decision.body.type).toBe("action_batch");
    expect(decision.body.step_idx).toBe(1);
    expect(decision.body.ue_ids).toEqual([4, 9]);
    expect(decision.body.actions).toEqual([0, 1]);
    expect(typeof decision.body.epsilon).toBe("number");

    const transition = {
      ue_id: 4,
      state: [0.5, 1.0],
      action: 0,
      next_state: [0.5, -1.0],
      reward: 0.5,
    };
    const ackFirst = send(session, { v: 1, type: "transition_batch", step_idx: 2, transitions: [transition] });
    expect(ackFirst.body).toMatchObject({ type: "ack", step_idx: 2, report: null });
    const ackSecond = send(session, { v: 1, type: "transition_batch", step_idx: 3, transitions: [transition] });
    expect(ackSecond.body.report).not.toBeNull();
    expect(ackSecond.body.report).toHaveProperty("loss");
    expect(ackSecond.body.report).toHaveProperty("mean_q");
    expect(ackSecond.body.report).toHaveProperty("epsilon");

    const saved = send(session, { v: 1, type: "save", step_idx: 4, path: "/tmp/m.json" });
    expect(saved.body.type).toBe("ack");
    const model = JSON.parse(saved.body.model);
    expect(model.format).toBe("pqos-sim-qnet");
    expect(written["/tmp/m.json"]).toBe(saved.body.model);

    const bye = send(session, { v: 1, type: "shutdown", step_idx: 5 });
    expect(bye.body.type).toBe("ack");
    expect(bye.close).toBe(true);
    expect(session.handleLine(JSON.stringify(hello))).toBeNull();
  });

  it("ignores blank lines", () => {
    const { session } = makeSession();
    expect(session.handleLine("  ")).toBeNull();
  });
});

describe("session protocol errors", () => {
  it("refuses a version mismatch", () => {
    const { session } = makeSession();
    const result = send(session, { ...hello, v: 2 });
    expect(result.body.type).toBe("error");
    expect(result.body.message).toContain("version");
    expect(result.close).toBe(true);
  });

  it("refuses out-of-order step indices", () => {
    const { session } = makeSession();
    send(session, hello);
    const result = send(session, { v: 1, type: "shutdown", step_idx: 5 });
    expect(result.body.type).toBe("error");
    expect(result.body.message).toContain("out-of-order");
  });

  it("requires hello first and exactly once", () => {
    const first = makeSession().session;
    const notHello = send(first, { v: 1, type: "shutdown", step_idx: 0 });
    expect(notHello.body.message).toContain("hello");

    const second = makeSession().session;
    send(second, hello);
    const twice = send(second, { ...hello, step_idx: 1 });
    expect(twice.body.message).toContain("duplicate hello");
  });

  it("rejects malformed JSON, unknown types and bad state batches", () => {
    const broken = makeSession().session;
    const bad = broken.handleLine("{nope");
    expect(JSON.parse(bad!.reply).message).toContain("not valid JSON");

    const unknown = makeSession().session;
    send(unknown, hello);
    const odd = send(unknown, { v: 1, type: "walk", step_idx: 1 });
    expect(odd.body.message).toContain("unknown message type");

    const widths = makeSession().session;
    send(widths, hello);
    const skewed = send(widths, {
      v: 1,
      type: "state_batch",
      step_idx: 1,
      run_id: "t",
      ue_ids: [0],
      states: [[1, 2, 3]],
      explore: true,
    });
    expect(skewed.body.message).toContain("state_batch");
  });

  it("rejects transitions referencing impossible actions", () => {
    const { session } = makeSession();
    send(session, hello);
    const result = send(session, {
      v: 1,
      type: "transition_batch",
      step_idx: 1,
      transitions: [{ ue_id: 0, state: [0, 0], action: 7, next_state: [0, 0], reward: 0 }],
    });
    expect(result.body.message).toContain("transition_batch");
  });

  it("refuses a save path when no file writer is wired in", () => {
    const { session } = makeSession();
    send(session, hello);
    const result = send(session, { v: 1, type: "save", step_idx: 1, path: "/tmp/x.json" });
    expect(result.body.message).toContain("path not supported");
  });
});
