/**
 * Training loop. Each utterance is one optimizer step: frame losses are
 * averaged over the whole sequence, the dB-style log is taken of the mean,
 * and the gradient of that scalar flows back through every frame.
 */

import { writeFileSync } from "node:fs";

import { buildExamples, Utterance } from "./features.js";
import {
  DEFAULT_EPS, DEFAULT_OVEREST, frameLoss, frameLossGrad,
  logAggregate, logAggregateGradFactor,
} from "./loss.js";
import {
  Adam, backward, forward, ForwardTrace, initNetwork, makeRng,
  Network, zeroGradients,
} from "./mlp.js";

export interface TrainConfig {
  epochs: number;
  lrInit: number;
  lrMin: number;
  /** Epochs without validation improvement before the rate is halved. */
  lrHalvingPatience: number;
  eps: number;
  overest: number;
  seed: number;
  theta: number;
}

export const DEFAULT_CONFIG: TrainConfig = {
  epochs: 10,
  lrInit: 1e-3,
  lrMin: 1e-5,
  lrHalvingPatience: 4,
  eps: DEFAULT_EPS,
  overest: DEFAULT_OVEREST,
  seed: 0,
  theta: 0.1,
};

export interface EpochLog {
  epoch: number;
  trainLoss: number;
  valLoss: number;
  lr: number;
}

export interface TrainResult {
  net: Network;
  initialValLoss: number;
  bestValLoss: number;
  log: EpochLog[];
}

/** Seeded 90/10 file split; at least one file lands in validation. */
export function splitUtterances(utts: Utterance[], seed: number):
    { train: Utterance[]; val: Utterance[] } {
  if (utts.length < 2) {
    throw new Error("need at least two utterances to split");
  }
  const rng = makeRng(seed ^ 0x5f3759df);
  const order = utts.map((_, i) => i);
  for (let i = order.length - 1; i > 0; i--) {
    const j = Math.floor(rng() * (i + 1));
    [order[i], order[j]] = [order[j], order[i]];
  }
  const numVal = Math.max(1, Math.round(0.1 * utts.length));
  const valIdx = new Set(order.slice(0, numVal));
  return {
    train: utts.filter((_, i) => !valIdx.has(i)),
    val: utts.filter((_, i) => valIdx.has(i)),
  };
}

export function utteranceLoss(net: Network, utt: Utterance,
                              cfg: TrainConfig): number {
  const per = utt.frames.map((ex) =>
    frameLoss(forward(net, ex.input), ex.target, cfg.overest));
  return logAggregate(per, cfg.eps);
}

export function datasetLoss(net: Network, utts: Utterance[],
                            cfg: TrainConfig): number {
  let acc = 0;
  let n = 0;
  for (const u of utts) {
    if (u.frames.length === 0) continue;
    acc += utteranceLoss(net, u, cfg);
    n += 1;
  }
  if (n === 0) {
    throw new Error("no frames in dataset");
  }
  return acc / n;
}

/** One optimizer step on one utterance; returns the utterance loss. */
export function trainStep(net: Network, utt: Utterance, opt: Adam,
                          cfg: TrainConfig): number {
  const traces: ForwardTrace[] = [];
  const perLoss: number[] = [];
  for (const ex of utt.frames) {
    const trace = {} as ForwardTrace;
    const out = forward(net, ex.input, trace);
    traces.push(trace);
    perLoss.push(frameLoss(out, ex.target, cfg.overest));
  }
  const loss = logAggregate(perLoss, cfg.eps);
  if (!Number.isFinite(loss)) {
    return loss;
  }
  let mean = 0;
  for (const v of perLoss) mean += v;
  mean /= perLoss.length;
  const chain = logAggregateGradFactor(mean, cfg.eps) / perLoss.length;

  const grads = zeroGradients(net);
  for (let f = 0; f < utt.frames.length; f++) {
    const g = frameLossGrad(traces[f].output, utt.frames[f].target,
                            cfg.overest);
    for (let k = 0; k < g.length; k++) g[k] *= chain;
    backward(net, utt.frames[f].input, traces[f], g, grads);
  }
  opt.step(net, grads);
  return loss;
}

function snapshot(net: Network): Network {
  return {
    theta: net.theta,
    layers: net.layers.map((l) => ({
      w: l.w.slice(), b: l.b.slice(), rows: l.rows, cols: l.cols,
    })),
  };
}

export function train(utts: Utterance[], cfg: TrainConfig,
                      onEpoch?: (e: EpochLog) => void): TrainResult {
  const { train: trainSet, val: valSet } = splitUtterances(utts, cfg.seed);
  const net = initNetwork(cfg.seed, cfg.theta);
  const opt = new Adam(net, cfg.lrInit);
  const shuffleRng = makeRng(cfg.seed ^ 0x9e3779b9);

  const initialValLoss = datasetLoss(net, valSet, cfg);
  let best = snapshot(net);
  let bestValLoss = initialValLoss;
  let sinceImprovement = 0;
  const log: EpochLog[] = [];

  for (let epoch = 1; epoch <= cfg.epochs; epoch++) {
    const order = trainSet.map((_, i) => i);
    for (let i = order.length - 1; i > 0; i--) {
      const j = Math.floor(shuffleRng() * (i + 1));
      [order[i], order[j]] = [order[j], order[i]];
    }
    let trainAcc = 0;
    let trainN = 0;
    for (const i of order) {
      if (trainSet[i].frames.length === 0) continue;
      const loss = trainStep(net, trainSet[i], opt, cfg);
      if (!Number.isFinite(loss)) {
        throw new Error(
          `non-finite training loss at epoch ${epoch} `
          + `(${trainSet[i].file}); aborting`);
      }
      trainAcc += loss;
      trainN += 1;
    }
    const valLoss = datasetLoss(net, valSet, cfg);
    if (!Number.isFinite(valLoss)) {
      throw new Error(`non-finite validation loss at epoch ${epoch}; aborting`);
    }

    if (valLoss < bestValLoss) {
      bestValLoss = valLoss;
      best = snapshot(net);
      sinceImprovement = 0;
    } else {
      sinceImprovement += 1;
      if (sinceImprovement >= cfg.lrHalvingPatience) {
        opt.lr = Math.max(cfg.lrMin, opt.lr / 2);
        sinceImprovement = 0;
      }
    }

    const entry = {
      epoch,
      trainLoss: trainN ? trainAcc / trainN : NaN,
      valLoss,
      lr: opt.lr,
    };
    log.push(entry);
    if (onEpoch) onEpoch(entry);
  }

  return { net: best, initialValLoss, bestValLoss, log };
}

export function trainCorpus(corpusDir: string, cfg: TrainConfig,
                            onEpoch?: (e: EpochLog) => void): TrainResult {
  return train(buildExamples(corpusDir), cfg, onEpoch);
}

export function writeTrainingLog(path: string, result: TrainResult): void {
  writeFileSync(path, JSON.stringify({
    initialValLoss: result.initialValLoss,
    bestValLoss: result.bestValLoss,
    epochs: result.log,
  }, null, 2) + "\n");
}
