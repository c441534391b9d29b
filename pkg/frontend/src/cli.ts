#!/usr/bin/env node
/**
 * bwe-trainer: fits the upper-band extension network on a 48 kHz corpus and
 * exports the weights in the BWEW v1 format consumed by the fbaec tools.
 *
 * Usage:
 *   bwe-trainer train --corpus DIR --out WEIGHTS.bwew [--epochs N]
 *                     [--log FILE.json] [--seed N] [--lr-init X] [--lr-min X]
 *                     [--patience N] [--overest X] [--theta X]
 */

import { parseArgs } from "node:util";

import { saveWeights } from "./bweio.js";
import { DEFAULT_CONFIG, trainCorpus, writeTrainingLog } from "./train.js";

function usage(code: number): never {
  console.error(
    "usage: bwe-trainer train --corpus DIR --out FILE [--epochs N] "
    + "[--log FILE] [--seed N] [--lr-init X] [--lr-min X] [--patience N] "
    + "[--overest X] [--theta X]");
  process.exit(code);
}

export function main(argv: string[]): number {
  if (argv.length === 0 || argv[0] !== "train") {
    usage(2);
  }
  let values;
  try {
    ({ values } = parseArgs({
      args: argv.slice(1),
      options: {
        corpus: { type: "string" },
        out: { type: "string" },
        epochs: { type: "string", default: String(DEFAULT_CONFIG.epochs) },
        log: { type: "string" },
        seed: { type: "string", default: String(DEFAULT_CONFIG.seed) },
        "lr-init": { type: "string", default: String(DEFAULT_CONFIG.lrInit) },
        "lr-min": { type: "string", default: String(DEFAULT_CONFIG.lrMin) },
        patience: {
          type: "string",
          default: String(DEFAULT_CONFIG.lrHalvingPatience),
        },
        overest: { type: "string", default: String(DEFAULT_CONFIG.overest) },
        theta: { type: "string", default: String(DEFAULT_CONFIG.theta) },
      },
    }));
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    usage(2);
  }
  if (!values.corpus || !values.out) {
    usage(2);
  }

  const cfg = {
    ...DEFAULT_CONFIG,
    epochs: Number(values.epochs),
    seed: Number(values.seed),
    lrInit: Number(values["lr-init"]),
    lrMin: Number(values["lr-min"]),
    lrHalvingPatience: Number(values.patience),
    overest: Number(values.overest),
    theta: Number(values.theta),
  };
  if (!Number.isInteger(cfg.epochs) || cfg.epochs < 0) {
    console.error("--epochs must be a non-negative integer");
    return 2;
  }

  try {
    const result = trainCorpus(values.corpus, cfg, (e) => {
      console.log(
        `epoch ${e.epoch}: train ${e.trainLoss.toFixed(4)} dB, `
        + `val ${e.valLoss.toFixed(4)} dB, lr ${e.lr.toExponential(2)}`);
    });
    saveWeights(result.net, values.out);
    if (values.log) {
      writeTrainingLog(values.log, result);
    }
    console.log(
      `wrote ${values.out} (val ${result.initialValLoss.toFixed(4)} -> `
      + `${result.bestValLoss.toFixed(4)} dB)`);
    return 0;
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
}

const invoked = process.argv[1];
if (invoked && (invoked.endsWith("cli.js") || invoked.endsWith("bwe-trainer"))) {
  process.exit(main(process.argv.slice(2)));
}
