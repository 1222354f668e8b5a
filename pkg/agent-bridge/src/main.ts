// Reference agent CLI: listens on a local port, speaks the bridge protocol,
// and runs the double deep-Q reference agent behind it.

import { readFileSync, writeFileSync } from "node:fs";
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";

import { DoubleDqlAgent, defaultHyperparams, mulberry32, type Hyperparams } from "./agent.js";
import { QNetwork } from "./qnet.js";
import { serveAgent } from "./server.js";
import { BridgeSession } from "./session.js";

function intFlag(value: string | undefined, fallback: number, name: string): number {
  if (value === undefined) {
    return fallback;
  }
  const parsed = Number(value);
  if (!Number.isInteger(parsed)) {
    throw new Error(`--${name} must be an integer, got ${value}`);
  }
  return parsed;
}

function floatFlag(value: string | undefined, fallback: number, name: string): number {
  if (value === undefined) {
    return fallback;
  }
  const parsed = Number(value);
  if (!Number.isFinite(parsed)) {
    throw new Error(`--${name} must be a number, got ${value}`);
  }
  return parsed;
}

export async function main(argv: string[]): Promise<void> {
  const { values } = parseArgs({
    args: argv,
    options: {
      host: { type: "string", default: "127.0.0.1" },
      port: { type: "string", default: "0" },
      mode: { type: "string", default: "train" },
      "model-in": { type: "string" },
      "model-out": { type: "string" },
      "state-width": { type: "string" },
      actions: { type: "string" },
      hidden: { type: "string", default: "12,6" },
      seed: { type: "string" },
      discount: { type: "string" },
      lr: { type: "string" },
      "weight-decay": { type: "string" },
      batch: { type: "string" },
      replay: { type: "string" },
      sync: { type: "string" },
      "epsilon-start": { type: "string" },
      "epsilon-end": { type: "string" },
      "epsilon-decay": { type: "string" },
    },
  });

  if (values.mode !== "train" && values.mode !== "eval") {
    throw new Error(`--mode must be train or eval, got ${values.mode}`);
  }
  const evalMode = values.mode === "eval";
  const hyper: Hyperparams = {
    discount: floatFlag(values.discount, defaultHyperparams.discount, "discount"),
    learningRate: floatFlag(values.lr, defaultHyperparams.learningRate, "lr"),
    weightDecay: floatFlag(values["weight-decay"], defaultHyperparams.weightDecay, "weight-decay"),
    batchSize: intFlag(values.batch, defaultHyperparams.batchSize, "batch"),
    replayCapacity: intFlag(values.replay, defaultHyperparams.replayCapacity, "replay"),
    targetSyncPeriod: intFlag(values.sync, defaultHyperparams.targetSyncPeriod, "sync"),
    epsilonStart: evalMode ? 0 : floatFlag(values["epsilon-start"], defaultHyperparams.epsilonStart, "epsilon-start"),
    epsilonEnd: evalMode ? 0 : floatFlag(values["epsilon-end"], defaultHyperparams.epsilonEnd, "epsilon-end"),
    epsilonDecaySteps: intFlag(values["epsilon-decay"], defaultHyperparams.epsilonDecaySteps, "epsilon-decay"),
  };

  const seed = intFlag(values.seed, 1, "seed");
  const stateWidth = intFlag(values["state-width"], 8, "state-width");
  const actions = intFlag(values.actions, 3, "actions");
  const hidden = values.hidden === "" ? [] : values.hidden.split(",").map((h) => {
    const parsed = Number(h);
    if (!Number.isInteger(parsed) || parsed < 1) {
      throw new Error(`--hidden must be a comma list of positive integers, got ${values.hidden}`);
    }
    return parsed;
  });

  let online: QNetwork | undefined;
  let layerSizes = [stateWidth, ...hidden, actions];
  if (values["model-in"]) {
    online = QNetwork.fromJson(readFileSync(values["model-in"], "utf-8"));
    layerSizes = online.layerSizes;
  }
  const agent = new DoubleDqlAgent(layerSizes, hyper, mulberry32(seed), mulberry32(seed + 1), online);
  if (evalMode) {
    agent.training = false;
  }

  await serveAgent({
    host: values.host,
    port: intFlag(values.port, 0, "port"),
    makeSession: () => new BridgeSession(agent, { writeFile: writeFileSync }),
    onListen: (addr) => console.log(`listening on ${addr.address}:${addr.port}`),
  });

  if (values["model-out"]) {
    writeFileSync(values["model-out"], agent.save());
  }
}

const entry = process.argv[1];
if (entry && import.meta.url === pathToFileURL(entry).href) {
  main(process.argv.slice(2)).catch((exc) => {
    console.error(String(exc instanceof Error ? exc.message : exc));
    process.exit(1);
  });
}
