// Wire protocol types: newline-delimited JSON, one request/reply per line,
// a single strictly-increasing step counter across all request types.

export const PROTOCOL_VERSION = 1;

export interface Envelope {
  v: number;
  type: string;
  step_idx: number;
}

export interface HelloMsg extends Envelope {
  type: "hello";
  run_id: string;
}

export interface StateBatchMsg extends Envelope {
  type: "state_batch";
  run_id: string;
  ue_ids: number[];
  states: number[][];
  explore: boolean;
}

export interface WireTransition {
  ue_id: number;
  state: number[];
  action: number;
  next_state: number[];
  reward: number;
}

export interface TransitionBatchMsg extends Envelope {
  type: "transition_batch";
  transitions: WireTransition[];
}

export interface SaveMsg extends Envelope {
  type: "save";
  path?: string;
}

export interface ShutdownMsg extends Envelope {
  type: "shutdown";
}

export type RequestMsg = HelloMsg | StateBatchMsg | TransitionBatchMsg | SaveMsg | ShutdownMsg;

export function serialize(message: Record<string, unknown>): string {
  return JSON.stringify(message) + "\n";
}

export function isFiniteNumber(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

export function isVector(v: unknown, width?: number): v is number[] {
  return Array.isArray(v) && (width === undefined || v.length === width) && v.every(isFiniteNumber);
}
