import { describe, expect, it } from "vitest";

import { Example, Utterance } from "../src/features.js";
import { Adam, forward, initNetwork, makeRng } from "../src/mlp.js";
import {
  datasetLoss, DEFAULT_CONFIG, splitUtterances, train, trainStep,
  utteranceLoss,
} from "../src/train.js";

function synthUtterance(seed: number, numFrames = 2): Utterance {
  const rng = makeRng(seed);
  const frames: Example[] = [];
  for (let f = 0; f < numFrames; f++) {
    const input = new Float64Array(257).map(() => Math.log(0.01 + rng()));
    const target = new Float64Array(512).map(() => 0.05 + 0.2 * rng());
    frames.push({ input, target });
  }
  return { file: `synth-${seed}`, frames };
}

const utts = Array.from({ length: 10 }, (_, i) => synthUtterance(100 + i));

describe("splitUtterances", () => {
  it("makes a deterministic 90/10 file split", () => {
    const a = splitUtterances(utts, 1);
    const b = splitUtterances(utts, 1);
    expect(a.val.length).toBe(1);
    expect(a.train.length).toBe(9);
    expect(a.val.map((u) => u.file)).toEqual(b.val.map((u) => u.file));
    const all = [...a.train, ...a.val].map((u) => u.file).sort();
    expect(all).toEqual(utts.map((u) => u.file).sort());
  });

  it("keeps at least one validation file for tiny corpora", () => {
    const two = splitUtterances(utts.slice(0, 2), 0);
    expect(two.val.length).toBe(1);
    expect(two.train.length).toBe(1);
    expect(() => splitUtterances(utts.slice(0, 1), 0)).toThrow(/two/);
  });
});

describe("training", () => {
  it("utterance loss agrees with a manual evaluation", () => {
    const net = initNetwork(5);
    const utt = utts[0];
    const manual = (() => {
      let mean = 0;
      for (const ex of utt.frames) {
        const out = forward(net, ex.input);
        let acc = 0;
        for (let k = 0; k < 512; k++) {
          const d = out[k] > ex.target[k] ? 2 : 1;
          acc += (d * out[k] - d * ex.target[k]) ** 2;
        }
        mean += acc / 512;
      }
      return 10 * Math.log10(1e-12 + mean / utt.frames.length);
    })();
    expect(utteranceLoss(net, utt, DEFAULT_CONFIG)).toBeCloseTo(manual, 10);
  });

  it("repeated steps on one utterance reduce its loss", () => {
    const net = initNetwork(2);
    const opt = new Adam(net, 1e-3);
    const utt = utts[1];
    const before = utteranceLoss(net, utt, DEFAULT_CONFIG);
    let last = before;
    for (let i = 0; i < 40; i++) {
      last = trainStep(net, utt, opt, DEFAULT_CONFIG);
    }
    const after = utteranceLoss(net, utt, DEFAULT_CONFIG);
    expect(after).toBeLessThan(before);
    expect(Number.isFinite(last)).toBe(true);
  });

  it("a non-finite loss leaves the weights untouched", () => {
    const net = initNetwork(3);
    net.layers[3].b.fill(5000); // exp overflow
    const snapshot = net.layers[0].w.slice();
    const opt = new Adam(net, 1e-3);
    const loss = trainStep(net, utts[2], opt, DEFAULT_CONFIG);
    expect(Number.isFinite(loss)).toBe(false);
    expect(net.layers[0].w).toEqual(snapshot);
  });

  it("zero epochs returns the freshly initialized network", () => {
    const cfg = { ...DEFAULT_CONFIG, epochs: 0, seed: 6 };
    const result = train(utts, cfg);
    expect(result.log.length).toBe(0);
    expect(result.bestValLoss).toBe(result.initialValLoss);
    const fresh = initNetwork(6, cfg.theta);
    expect(result.net.layers[0].w).toEqual(fresh.layers[0].w);
  });

  it("tracks the best validation loss and keeps lr above the floor", () => {
    const cfg = {
      ...DEFAULT_CONFIG, epochs: 6, seed: 1, lrHalvingPatience: 1,
    };
    const result = train(utts, cfg);
    expect(result.log.length).toBe(6);
    expect(result.bestValLoss).toBeLessThanOrEqual(result.initialValLoss);
    const minVal = Math.min(...result.log.map((e) => e.valLoss));
    expect(result.bestValLoss).toBeCloseTo(
      Math.min(result.initialValLoss, minVal), 10);
    let prev = cfg.lrInit;
    for (const e of result.log) {
      expect(e.lr).toBeLessThanOrEqual(prev);
      expect(e.lr).toBeGreaterThanOrEqual(cfg.lrMin);
      expect(Number.isFinite(e.trainLoss)).toBe(true);
      prev = e.lr;
    }
    // exported weights reproduce the best validation loss
    const { val } = splitUtterances(utts, cfg.seed);
    expect(datasetLoss(result.net, val, cfg)).toBeCloseTo(
      result.bestValLoss, 10);
  });

  it("is reproducible for a fixed seed", () => {
    const cfg = { ...DEFAULT_CONFIG, epochs: 2, seed: 9 };
    const a = train(utts, cfg);
    const b = train(utts, cfg);
    expect(a.log).toEqual(b.log);
    expect(a.net.layers[3].w).toEqual(b.net.layers[3].w);
  });
});
