import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, describe, expect, it } from "vitest";

import {
  analyzeMagnitudes, buildExamples, DFT_SIZE, FRAME_LEN, FRAME_SHIFT,
  framesToExamples, loadUtterance, sqrtHannWindow, UB_BINS, WB_BINS,
} from "../src/features.js";
import { writeWavPcm16 } from "../src/wav.js";
import { makeRng } from "../src/mlp.js";

const dir = mkdtempSync(join(tmpdir(), "feat-"));
afterAll(() => rmSync(dir, { recursive: true, force: true }));

function tone(freq: number, seconds: number, amp = 0.5): Float64Array {
  const n = Math.round(48000 * seconds);
  const out = new Float64Array(n);
  for (let t = 0; t < n; t++) {
    out[t] = amp * Math.sin((2 * Math.PI * freq * t) / 48000);
  }
  return out;
}

describe("features", () => {
  it("uses the 48 kHz analysis grid", () => {
    expect(FRAME_LEN).toBe(1272);
    expect(FRAME_SHIFT).toBe(636);
    expect(DFT_SIZE).toBe(1536);
    expect(WB_BINS).toBe(257);
    expect(UB_BINS).toBe(512);
  });

  it("window squares sum to one across the 50% overlap", () => {
    const w = sqrtHannWindow();
    for (let n = 0; n < FRAME_SHIFT; n++) {
      const s = w[n] * w[n] + w[n + FRAME_SHIFT] * w[n + FRAME_SHIFT];
      expect(s).toBeCloseTo(1, 9);
    }
  });

  it("puts a 12 kHz tone at target index 127 (absolute bin 384)", () => {
    // quiet 1 kHz component keeps the frames above the wideband energy gate
    const sig = tone(12000, 0.25, 0.4);
    const low = tone(1000, 0.25, 0.05);
    for (let t = 0; t < sig.length; t++) sig[t] += low[t];
    const examples = framesToExamples(analyzeMagnitudes(sig));
    expect(examples.length).toBeGreaterThan(0);
    for (const ex of examples) {
      const peak = ex.target.indexOf(Math.max(...ex.target));
      expect(peak).toBe(384 - WB_BINS);
      expect(peak).toBe(127);
    }
  });

  it("counts only complete frames", () => {
    expect(analyzeMagnitudes(new Float64Array(FRAME_LEN - 1)).length).toBe(0);
    expect(analyzeMagnitudes(new Float64Array(FRAME_LEN)).length).toBe(1);
    expect(
      analyzeMagnitudes(new Float64Array(FRAME_LEN + FRAME_SHIFT)).length,
    ).toBe(2);
  });

  it("gates frames below -60 dBFS wideband energy", () => {
    const silent = framesToExamples(analyzeMagnitudes(new Float64Array(48000)));
    expect(silent.length).toBe(0);
    const faint = framesToExamples(analyzeMagnitudes(tone(1000, 0.2, 1e-5)));
    expect(faint.length).toBe(0);
    const loud = framesToExamples(analyzeMagnitudes(tone(1000, 0.2, 0.1)));
    expect(loud.length).toBeGreaterThan(0);
  });

  it("gates on wideband energy only", () => {
    // a loud tone above 8 kHz has almost no wideband power
    const ubOnly = framesToExamples(analyzeMagnitudes(tone(15000, 0.2, 0.5)));
    expect(ubOnly.length).toBe(0);
  });

  it("floors the log inputs", () => {
    const loud = framesToExamples(analyzeMagnitudes(tone(1000, 0.1, 0.1)));
    for (const v of loud[0].input) {
      expect(v).toBeGreaterThanOrEqual(Math.log(1e-10));
      expect(Number.isFinite(v)).toBe(true);
    }
  });

  it("is deterministic and rejects other sample rates", () => {
    const rng = makeRng(21);
    const samples = new Float64Array(12000).map(() => 0.3 * (rng() - 0.5));
    const a = join(dir, "a.wav");
    writeWavPcm16(a, samples, 48000);
    const u1 = loadUtterance(a);
    const u2 = loadUtterance(a);
    expect(u1.frames.length).toBe(u2.frames.length);
    for (let f = 0; f < u1.frames.length; f++) {
      expect(u1.frames[f].input).toEqual(u2.frames[f].input);
      expect(u1.frames[f].target).toEqual(u2.frames[f].target);
    }

    const bad = join(dir, "bad-rate.wav");
    writeWavPcm16(bad, samples, 16000);
    expect(() => loadUtterance(bad)).toThrow(/48 kHz/);
  });

  it("scans a corpus directory in sorted order", () => {
    const sub = mkdtempSync(join(dir, "corpus-"));
    writeWavPcm16(join(sub, "b.wav"), tone(500, 0.1), 48000);
    writeWavPcm16(join(sub, "a.wav"), tone(700, 0.1), 48000);
    const utts = buildExamples(sub);
    expect(utts.length).toBe(2);
    expect(utts[0].file.endsWith("a.wav")).toBe(true);
    expect(utts[1].file.endsWith("b.wav")).toBe(true);

    const empty = mkdtempSync(join(dir, "empty-"));
    expect(() => buildExamples(empty)).toThrow(/no WAV files/);
  });
});
