// Per-connection state machine, transport-agnostic: feed it request lines,
// get back the reply line and whether the connection must close.

import { DoubleDqlAgent, type Transition } from "./agent.js";
import {
  PROTOCOL_VERSION,
  isFiniteNumber,
  isVector,
  serialize,
  type RequestMsg,
  type WireTransition,
} from "./protocol.js";

export interface SessionResult {
  reply: string;
  close: boolean;
}

export interface SessionOptions {
  /** Invoked for a save request carrying a path. */
  writeFile?: (path: string, data: string) => void;
}

export class BridgeSession {
  private expectedStep = 0;
  private started = false;
  private closed = false;

  constructor(private agent: DoubleDqlAgent, private opts: SessionOptions = {}) {}

  private fail(stepIdx: number, message: string): SessionResult {
    this.closed = true;
    return {
      reply: serialize({ v: PROTOCOL_VERSION, type: "error", step_idx: stepIdx, message }),
      close: true,
    };
  }

  private ok(stepIdx: number, type: string, fields: Record<string, unknown> = {}): SessionResult {
    return {
      reply: serialize({ v: PROTOCOL_VERSION, type, step_idx: stepIdx, ...fields }),
      close: false,
    };
  }

  handleLine(line: string): SessionResult | null {
    if (this.closed || line.trim() === "") {
      return null;
    }
    let msg: RequestMsg;
    try {
      msg = JSON.parse(line);
    } catch {
      return this.fail(this.expectedStep, "malformed message: not valid JSON");
    }
    if (typeof msg !== "object" || msg === null) {
      return this.fail(this.expectedStep, "malformed message: not an object");
    }
    const step = typeof msg.step_idx === "number" ? msg.step_idx : this.expectedStep;
    if (msg.v !== PROTOCOL_VERSION) {
      return this.fail(step, `unsupported protocol version ${JSON.stringify(msg.v)}, this side speaks ${PROTOCOL_VERSION}`);
    }
    if (msg.step_idx !== this.expectedStep) {
      return this.fail(step, `out-of-order step_idx ${JSON.stringify(msg.step_idx)}, expected ${this.expectedStep}`);
    }
    if (!this.started && msg.type !== "hello") {
      return this.fail(step, `session must start with hello, got ${JSON.stringify(msg.type)}`);
    }
    this.expectedStep += 1;

    switch (msg.type) {
      case "hello": {
        if (this.started) {
          return this.fail(step, "duplicate hello");
        }
        if (typeof msg.run_id !== "string") {
          return this.fail(step, "hello carries no run_id");
        }
        this.started = true;
        return this.ok(step, "hello", { run_id: msg.run_id });
      }
      case "state_batch": {
        const width = this.agent.online.inputWidth;
        if (
          !Array.isArray(msg.ue_ids) ||
          !Array.isArray(msg.states) ||
          msg.ue_ids.length !== msg.states.length ||
          msg.states.length === 0 ||
          !msg.ue_ids.every((u) => Number.isInteger(u)) ||
          !msg.states.every((row) => isVector(row, width)) ||
          typeof msg.explore !== "boolean"
        ) {
          return this.fail(step, `malformed state_batch (expected ${width}-wide state rows)`);
        }
        const actions = this.agent.getAction(msg.states, msg.explore);
        return this.ok(step, "action_batch", {
          ue_ids: msg.ue_ids,
          actions,
          epsilon: this.agent.epsilon(),
        });
      }
      case "transition_batch": {
        const width = this.agent.online.inputWidth;
        const wire = msg.transitions;
        const recordOk = (t: WireTransition) =>
          typeof t === "object" &&
          t !== null &&
          Number.isInteger(t.ue_id) &&
          Number.isInteger(t.action) &&
          t.action >= 0 &&
          t.action < this.agent.actionSpace &&
          isVector(t.state, width) &&
          isVector(t.next_state, width) &&
          isFiniteNumber(t.reward);
        if (!Array.isArray(wire) || !wire.every(recordOk)) {
          return this.fail(step, "malformed transition_batch");
        }
        const transitions: Transition[] = wire.map((t) => ({
          ueId: t.ue_id,
          state: t.state,
          action: t.action,
          nextState: t.next_state,
          reward: t.reward,
        }));
        const report = this.agent.update(transitions);
        return this.ok(step, "ack", {
          report: report
            ? { loss: report.loss, mean_q: report.meanQ, epsilon: report.epsilon }
            : null,
        });
      }
      case "save": {
        const model = this.agent.save();
        if (msg.path !== undefined) {
          if (typeof msg.path !== "string" || !this.opts.writeFile) {
            return this.fail(step, "save path not supported by this server");
          }
          try {
            this.opts.writeFile(msg.path, model);
          } catch (exc) {
            return this.fail(step, `cannot write model file: ${exc}`);
          }
        }
        return this.ok(step, "ack", { model });
      }
      case "shutdown": {
        this.closed = true;
        return { reply: serialize({ v: PROTOCOL_VERSION, type: "ack", step_idx: step }), close: true };
      }
      default:
        return this.fail(step, `unknown message type ${JSON.stringify((msg as RequestMsg).type)}`);
    }
  }
}
