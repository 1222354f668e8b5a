// Reference double deep-Q agent: same learning contract as the simulator's
// built-in agent so the two are interchangeable behind the bridge.

import { QNetwork, type Rng } from "./qnet.js";

export interface Hyperparams {
  discount: number;
  learningRate: number;
  weightDecay: number;
  batchSize: number;
  replayCapacity: number;
  targetSyncPeriod: number;
  epsilonStart: number;
  epsilonEnd: number;
  epsilonDecaySteps: number;
}

export const defaultHyperparams: Hyperparams = {
  discount: 0.95,
  learningRate: 1e-4,
  weightDecay: 1e-3,
  batchSize: 32,
  replayCapacity: 10_000,
  targetSyncPeriod: 100,
  epsilonStart: 1.0,
  epsilonEnd: 0.05,
  epsilonDecaySteps: 5_000,
};

export function validateHyperparams(h: Hyperparams): void {
  if (!(h.discount >= 0 && h.discount < 1)) {
    throw new Error(`discount must be in [0,1), got ${h.discount}`);
  }
  if (!(h.learningRate > 0) || !(h.weightDecay > 0)) {
    throw new Error("learningRate and weightDecay must be > 0");
  }
  for (const name of ["batchSize", "replayCapacity", "targetSyncPeriod"] as const) {
    if (!Number.isInteger(h[name]) || h[name] < 1) {
      throw new Error(`${name} must be a positive integer, got ${h[name]}`);
    }
  }
  if (h.replayCapacity < h.batchSize) {
    throw new Error("replayCapacity must hold at least one batch");
  }
  if (!(h.epsilonStart >= h.epsilonEnd && h.epsilonEnd >= 0 && h.epsilonStart <= 1)) {
    throw new Error("epsilon schedule must satisfy 1 >= start >= end >= 0");
  }
  if (!Number.isInteger(h.epsilonDecaySteps) || h.epsilonDecaySteps < 1) {
    throw new Error("epsilonDecaySteps must be a positive integer");
  }
}

export interface Transition {
  ueId: number;
  state: number[];
  action: number;
  nextState: number[];
  reward: number;
}

export interface LossReport {
  updateIdx: number;
  loss: number;
  epsilon: number;
  meanQ: number;
}

/** Deterministic uniform generator for exploration and replay sampling. */
export function mulberry32(seed: number): Rng {
  let a = seed >>> 0;
  return {
    next(): number {
      a = (a + 0x6d2b79f5) >>> 0;
      let t = a;
      t = Math.imul(t ^ (t >>> 15), t | 1);
      t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
      return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
    },
  };
}

function randInt(rng: Rng, n: number): number {
  return Math.floor(rng.next() * n);
}

export class ReplayBuffer {
  private store: Transition[] = [];
  private next = 0;

  constructor(public capacity: number) {}

  get length(): number {
    return this.store.length;
  }

  append(tr: Transition): void {
    if (this.store.length < this.capacity) {
      this.store.push(tr);
    } else {
      this.store[this.next] = tr;
    }
    this.next = (this.next + 1) % this.capacity;
  }

  /** Uniform sample without replacement within the batch. */
  sample(batchSize: number, rng: Rng): Transition[] {
    const idx = Array.from({ length: this.store.length }, (_, i) => i);
    const picked: Transition[] = [];
    for (let j = 0; j < batchSize; j++) {
      const k = j + randInt(rng, idx.length - j);
      [idx[j], idx[k]] = [idx[k], idx[j]];
      picked.push(this.store[idx[j]]);
    }
    return picked;
  }
}

function argmaxRow(row: number[]): number {
  let best = 0;
  for (let i = 1; i < row.length; i++) {
    if (row[i] > row[best]) {
      best = i;
    }
  }
  return best;
}

export class DoubleDqlAgent {
  online: QNetwork;
  target: QNetwork;
  replay: ReplayBuffer;
  actionSteps = 0;
  updateSteps = 0;
  training = true;

  constructor(
    layerSizes: number[],
    public hyper: Hyperparams,
    initRng: Rng,
    public rng: Rng,
    online?: QNetwork
  ) {
    validateHyperparams(hyper);
    this.online = online ?? QNetwork.initialize(layerSizes, initRng);
    if (online && online.layerSizes.join(",") !== layerSizes.join(",")) {
      throw new Error(
        `model layer sizes [${online.layerSizes}] do not match configured sizes [${layerSizes}]`
      );
    }
    this.target = this.online.clone();
    this.replay = new ReplayBuffer(hyper.replayCapacity);
  }

  get actionSpace(): number {
    return this.online.outputWidth;
  }

  epsilon(): number {
    const h = this.hyper;
    if (this.actionSteps >= h.epsilonDecaySteps) {
      return h.epsilonEnd;
    }
    const frac = this.actionSteps / h.epsilonDecaySteps;
    return h.epsilonStart + (h.epsilonEnd - h.epsilonStart) * frac;
  }

  /**
   * Epsilon-greedy actions for a batch of states, one row per user. Ties in
   * the Q-values resolve to the lowest action index; the decay schedule
   * advances once per call and greedy calls draw no randomness.
   */
  getAction(states: number[][], explore = true): number[] {
    const eps = explore ? this.epsilon() : 0.0;
    if (explore) {
      this.actionSteps += 1;
    }
    const q = this.online.forward(states);
    const actions = q.map(argmaxRow);
    if (eps > 0) {
      const coins = states.map(() => this.rng.next());
      const randoms = states.map(() => randInt(this.rng, this.actionSpace));
      for (let i = 0; i < actions.length; i++) {
        if (coins[i] < eps) {
          actions[i] = randoms[i];
        }
      }
    }
    return actions;
  }

  /** Store transitions, then take one double-Q step once a batch exists. */
  update(transitions: Transition[]): LossReport | null {
    if (!this.training) {
      return null;
    }
    for (const tr of transitions) {
      if (tr.state.length !== this.online.inputWidth || tr.nextState.length !== this.online.inputWidth) {
        throw new Error("transition state width does not match network input");
      }
      this.replay.append(tr);
    }
    if (this.replay.length < this.hyper.batchSize) {
      return null;
    }
    const batch = this.replay.sample(this.hyper.batchSize, this.rng);
    const n = batch.length;
    const sNext = batch.map((tr) => tr.nextState);
    const bestNext = this.online.forward(sNext).map(argmaxRow);
    const qTargetNext = this.target.forward(sNext);
    const y = batch.map((tr, i) => tr.reward + this.hyper.discount * qTargetNext[i][bestNext[i]]);

    const { q, pre, act } = this.online.forwardCached(batch.map((tr) => tr.state));
    const qSel = batch.map((tr, i) => q[i][tr.action]);
    const err = qSel.map((v, i) => v - y[i]);
    const loss = err.reduce((acc, e) => acc + e * e, 0) / n;
    const dq = q.map((row) => row.map(() => 0));
    for (let i = 0; i < n; i++) {
      dq[i][batch[i].action] = (2 * err[i]) / n;
    }
    const { gradW, gradB } = this.online.backward(pre, act, dq);

    const lr = this.hyper.learningRate;
    const wd = this.hyper.weightDecay;
    for (let layer = 0; layer < this.online.weights.length; layer++) {
      const w = this.online.weights[layer];
      const gw = gradW[layer];
      for (let o = 0; o < w.length; o++) {
        for (let k = 0; k < w[o].length; k++) {
          w[o][k] -= lr * (gw[o][k] + wd * w[o][k]);
        }
      }
      const b = this.online.biases[layer];
      const gb = gradB[layer];
      for (let o = 0; o < b.length; o++) {
        b[o] -= lr * gb[o];
      }
    }
    this.updateSteps += 1;
    if (this.updateSteps % this.hyper.targetSyncPeriod === 0) {
      this.target.copyFrom(this.online);
    }
    return {
      updateIdx: this.updateSteps,
      loss,
      epsilon: this.epsilon(),
      meanQ: qSel.reduce((acc, v) => acc + v, 0) / n,
    };
  }

  save(): string {
    return this.online.toJson();
  }
}
