/**
 * Dataset construction: sqrt-Hann framed analysis on the 48 kHz grid
 * (1272-sample frames, 50% shift, 1536-point DFT), producing per-frame
 * (log wideband magnitudes, upper-band magnitude targets) pairs.
 */

import { readdirSync } from "node:fs";
import { join } from "node:path";

import { rfft } from "./fft.js";
import { readWav } from "./wav.js";

export const FRAME_LEN = 1272;
export const FRAME_SHIFT = 636;
export const DFT_SIZE = 1536;
export const WB_BINS = 257;
export const UB_BINS = 512;
export const LOG_FLOOR = 1e-10;
export const ENERGY_GATE_DB = -60;

export interface Example {
  /** ln of the floored wideband magnitudes, bins 0..256. */
  input: Float64Array;
  /** True upper-band magnitudes, bins 257..768. */
  target: Float64Array;
}

export interface Utterance {
  file: string;
  frames: Example[];
}

let windowCache: Float64Array | null = null;

export function sqrtHannWindow(): Float64Array {
  if (!windowCache) {
    const w = new Float64Array(FRAME_LEN);
    for (let n = 0; n < FRAME_LEN; n++) {
      w[n] = Math.sqrt(0.5 * (1 - Math.cos((2 * Math.PI * n) / FRAME_LEN)));
    }
    windowCache = w;
  }
  return windowCache;
}

/** One-sided magnitude spectra of all complete frames. */
export function analyzeMagnitudes(samples: Float64Array): Float64Array[] {
  if (samples.length < FRAME_LEN) {
    return [];
  }
  const win = sqrtHannWindow();
  const numFrames = Math.floor((samples.length - FRAME_LEN) / FRAME_SHIFT) + 1;
  const frames: Float64Array[] = [];
  const buf = new Float64Array(FRAME_LEN);
  for (let l = 0; l < numFrames; l++) {
    const start = l * FRAME_SHIFT;
    for (let n = 0; n < FRAME_LEN; n++) {
      buf[n] = samples[start + n] * win[n];
    }
    const spec = rfft(buf, DFT_SIZE);
    const mags = new Float64Array(spec.re.length);
    for (let k = 0; k < mags.length; k++) {
      mags[k] = Math.hypot(spec.re[k], spec.im[k]);
    }
    frames.push(mags);
  }
  return frames;
}

function wbPowerDb(mags: Float64Array): number {
  // mean per-sample wideband power of the windowed frame, via Parseval
  let acc = 0;
  for (let k = 1; k < WB_BINS - 1; k++) {
    acc += 2 * mags[k] * mags[k];
  }
  acc += mags[0] * mags[0] + mags[WB_BINS - 1] * mags[WB_BINS - 1];
  const power = acc / (DFT_SIZE * FRAME_LEN);
  return 10 * Math.log10(power + 1e-300);
}

export function framesToExamples(mags: Float64Array[]): Example[] {
  const out: Example[] = [];
  for (const m of mags) {
    if (wbPowerDb(m) < ENERGY_GATE_DB) {
      continue;
    }
    const input = new Float64Array(WB_BINS);
    for (let k = 0; k < WB_BINS; k++) {
      input[k] = Math.log(Math.max(m[k], LOG_FLOOR));
    }
    const target = new Float64Array(UB_BINS);
    for (let k = 0; k < UB_BINS; k++) {
      target[k] = m[WB_BINS + k];
    }
    out.push({ input, target });
  }
  return out;
}

export function loadUtterance(path: string): Utterance {
  const wav = readWav(path);
  if (wav.sampleRate !== 48000) {
    throw new Error(`${path}: expected 48 kHz, got ${wav.sampleRate}`);
  }
  return { file: path, frames: framesToExamples(analyzeMagnitudes(wav.samples)) };
}

/** All WAV files of a corpus directory, sorted for determinism. */
export function buildExamples(corpusDir: string): Utterance[] {
  const files = readdirSync(corpusDir)
    .filter((f) => f.toLowerCase().endsWith(".wav"))
    .sort();
  if (files.length === 0) {
    throw new Error(`no WAV files in ${corpusDir}`);
  }
  return files.map((f) => loadUtterance(join(corpusDir, f)));
}
