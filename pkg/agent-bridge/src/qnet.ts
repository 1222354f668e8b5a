// Fully-connected Q-value network; weights are (out, in) matrices, relu on
// hidden layers, linear output. All arithmetic is IEEE-754 float64.

export const MODEL_FORMAT = "pqos-sim-qnet";
export const MODEL_VERSION = 1;

export class ModelFormatError extends Error {}

export interface Rng {
  /** Uniform draw in [0, 1). */
  next(): number;
}

export type Matrix = number[][];

export interface BackwardResult {
  gradW: Matrix[];
  gradB: number[][];
}

export interface CachedForward {
  q: Matrix;
  pre: Matrix[];
  act: Matrix[];
}

function zeros(rows: number, cols: number): Matrix {
  return Array.from({ length: rows }, () => new Array<number>(cols).fill(0));
}

export class QNetwork {
  constructor(
    public layerSizes: number[],
    public weights: Matrix[],
    public biases: number[][]
  ) {}

  static initialize(layerSizes: number[], rng: Rng): QNetwork {
    if (layerSizes.length < 2) {
      throw new Error("need at least input and output layer sizes");
    }
    const weights: Matrix[] = [];
    const biases: number[][] = [];
    for (let i = 0; i + 1 < layerSizes.length; i++) {
      const fanIn = layerSizes[i];
      const fanOut = layerSizes[i + 1];
      const bound = 1.0 / Math.sqrt(fanIn);
      const w = zeros(fanOut, fanIn);
      for (let o = 0; o < fanOut; o++) {
        for (let k = 0; k < fanIn; k++) {
          w[o][k] = (rng.next() * 2 - 1) * bound;
        }
      }
      weights.push(w);
      biases.push(Array.from({ length: fanOut }, () => (rng.next() * 2 - 1) * bound));
    }
    return new QNetwork([...layerSizes], weights, biases);
  }

  get inputWidth(): number {
    return this.layerSizes[0];
  }

  get outputWidth(): number {
    return this.layerSizes[this.layerSizes.length - 1];
  }

  clone(): QNetwork {
    return new QNetwork(
      [...this.layerSizes],
      this.weights.map((w) => w.map((row) => [...row])),
      this.biases.map((b) => [...b])
    );
  }

  copyFrom(other: QNetwork): void {
    if (other.layerSizes.join(",") !== this.layerSizes.join(",")) {
      throw new Error(`shape mismatch: ${other.layerSizes} vs ${this.layerSizes}`);
    }
    this.weights = other.weights.map((w) => w.map((row) => [...row]));
    this.biases = other.biases.map((b) => [...b]);
  }

  forward(states: Matrix): Matrix {
    return this.forwardCached(states).q;
  }

  forwardCached(states: Matrix): CachedForward {
    if (states.length === 0 || states[0].length !== this.inputWidth) {
      throw new Error(
        `state width ${states[0]?.length} does not match network input ${this.inputWidth}`
      );
    }
    const pre: Matrix[] = [];
    const act: Matrix[] = [states];
    const last = this.weights.length - 1;
    for (let layer = 0; layer < this.weights.length; layer++) {
      const w = this.weights[layer];
      const b = this.biases[layer];
      const input = act[act.length - 1];
      const z = zeros(input.length, w.length);
      for (let i = 0; i < input.length; i++) {
        for (let o = 0; o < w.length; o++) {
          let sum = 0;
          for (let k = 0; k < w[o].length; k++) {
            sum += input[i][k] * w[o][k];
          }
          z[i][o] = sum + b[o];
        }
      }
      pre.push(z);
      act.push(layer === last ? z : z.map((row) => row.map((v) => Math.max(v, 0))));
    }
    return { q: act[act.length - 1], pre, act };
  }

  backward(pre: Matrix[], act: Matrix[], dq: Matrix): BackwardResult {
    const gradW: Matrix[] = new Array(this.weights.length);
    const gradB: number[][] = new Array(this.biases.length);
    let delta = dq;
    for (let layer = this.weights.length - 1; layer >= 0; layer--) {
      const input = act[layer];
      const w = this.weights[layer];
      const gw = zeros(w.length, w[0].length);
      const gb = new Array<number>(w.length).fill(0);
      for (let i = 0; i < delta.length; i++) {
        for (let o = 0; o < w.length; o++) {
          gb[o] += delta[i][o];
          for (let k = 0; k < w[o].length; k++) {
            gw[o][k] += delta[i][o] * input[i][k];
          }
        }
      }
      gradW[layer] = gw;
      gradB[layer] = gb;
      if (layer > 0) {
        const next = zeros(delta.length, w[0].length);
        for (let i = 0; i < delta.length; i++) {
          for (let k = 0; k < w[0].length; k++) {
            let sum = 0;
            for (let o = 0; o < w.length; o++) {
              sum += delta[i][o] * w[o][k];
            }
            next[i][k] = pre[layer - 1][i][k] > 0 ? sum : 0;
          }
        }
        delta = next;
      }
    }
    return { gradW, gradB };
  }

  toJson(): string {
    return JSON.stringify(
      {
        format: MODEL_FORMAT,
        version: MODEL_VERSION,
        layer_sizes: this.layerSizes,
        layers: this.weights.map((w, i) => ({ weights: w, bias: this.biases[i] })),
      },
      null,
      1
    );
  }

  static fromJson(text: string, expectedSizes?: number[]): QNetwork {
    let payload: unknown;
    try {
      payload = JSON.parse(text);
    } catch (exc) {
      throw new ModelFormatError(`not a valid model file: ${exc}`);
    }
    if (typeof payload !== "object" || payload === null) {
      throw new ModelFormatError("unknown model format");
    }
    const doc = payload as Record<string, unknown>;
    if (doc.format !== MODEL_FORMAT) {
      throw new ModelFormatError(`unknown model format ${JSON.stringify(doc.format)}`);
    }
    if (doc.version !== MODEL_VERSION) {
      throw new ModelFormatError(
        `unsupported model version ${JSON.stringify(doc.version)}, expected ${MODEL_VERSION}`
      );
    }
    const sizes = doc.layer_sizes;
    const layers = doc.layers;
    if (
      !Array.isArray(sizes) ||
      !sizes.every((s) => Number.isInteger(s) && s > 0) ||
      !Array.isArray(layers) ||
      layers.length !== sizes.length - 1
    ) {
      throw new ModelFormatError("model file layer structure is inconsistent");
    }
    if (expectedSizes && sizes.join(",") !== expectedSizes.join(",")) {
      throw new ModelFormatError(
        `model layer sizes [${sizes}] do not match configured sizes [${expectedSizes}]`
      );
    }
    const weights: Matrix[] = [];
    const biases: number[][] = [];
    for (let i = 0; i < layers.length; i++) {
      const layer = layers[i] as { weights?: unknown; bias?: unknown };
      const fanOut = sizes[i + 1] as number;
      const fanIn = sizes[i] as number;
      const w = layer?.weights;
      const b = layer?.bias;
      const rowOk = (row: unknown) =>
        Array.isArray(row) && row.length === fanIn && row.every((v) => typeof v === "number");
      if (
        !Array.isArray(w) ||
        w.length !== fanOut ||
        !w.every(rowOk) ||
        !Array.isArray(b) ||
        b.length !== fanOut ||
        !b.every((v) => typeof v === "number")
      ) {
        throw new ModelFormatError(`layer ${i} is malformed`);
      }
      weights.push(w as Matrix);
      biases.push(b as number[]);
    }
    const finite = (v: number) => Number.isFinite(v);
    if (!weights.every((w) => w.every((row) => row.every(finite))) || !biases.every((b) => b.every(finite))) {
      throw new ModelFormatError("model file contains non-finite parameters");
    }
    return new QNetwork(sizes as number[], weights, biases);
  }
}
