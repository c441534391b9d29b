/** Minimal mono WAV reader: PCM 16-bit and IEEE float 32-bit. */

import { readFileSync, writeFileSync } from "node:fs";

export interface WavData {
  samples: Float64Array;
  sampleRate: number;
}

export function readWav(path: string): WavData {
  const buf = readFileSync(path);
  if (buf.length < 12 || buf.toString("ascii", 0, 4) !== "RIFF"
      || buf.toString("ascii", 8, 12) !== "WAVE") {
    throw new Error(`${path}: not a RIFF/WAVE file`);
  }

  let fmt: { format: number; channels: number; rate: number; bits: number } | null = null;
  let data: Buffer | null = null;
  let off = 12;
  while (off + 8 <= buf.length) {
    const id = buf.toString("ascii", off, off + 4);
    const size = buf.readUInt32LE(off + 4);
    const body = buf.subarray(off + 8, off + 8 + size);
    if (id === "fmt ") {
      fmt = {
        format: body.readUInt16LE(0),
        channels: body.readUInt16LE(2),
        rate: body.readUInt32LE(4),
        bits: body.readUInt16LE(14),
      };
    } else if (id === "data") {
      data = Buffer.from(body);
    }
    off += 8 + size + (size % 2);
  }
  if (!fmt || !data) {
    throw new Error(`${path}: missing fmt/data chunk`);
  }
  if (fmt.channels !== 1) {
    throw new Error(`${path}: expected mono, got ${fmt.channels} channels`);
  }

  let samples: Float64Array;
  if (fmt.format === 1 && fmt.bits === 16) {
    const n = Math.floor(data.length / 2);
    samples = new Float64Array(n);
    for (let i = 0; i < n; i++) {
      samples[i] = data.readInt16LE(2 * i) / 32768;
    }
  } else if (fmt.format === 3 && fmt.bits === 32) {
    const n = Math.floor(data.length / 4);
    samples = new Float64Array(n);
    for (let i = 0; i < n; i++) {
      samples[i] = data.readFloatLE(4 * i);
    }
  } else {
    throw new Error(`${path}: unsupported format ${fmt.format}/${fmt.bits} bit`);
  }
  return { samples, sampleRate: fmt.rate };
}

/** Writes mono PCM 16-bit; used by tests to synthesize toy corpora. */
export function writeWavPcm16(path: string, samples: Float64Array,
                              sampleRate: number): void {
  const n = samples.length;
  const buf = Buffer.alloc(44 + 2 * n);
  buf.write("RIFF", 0, "ascii");
  buf.writeUInt32LE(36 + 2 * n, 4);
  buf.write("WAVE", 8, "ascii");
  buf.write("fmt ", 12, "ascii");
  buf.writeUInt32LE(16, 16);
  buf.writeUInt16LE(1, 20);
  buf.writeUInt16LE(1, 22);
  buf.writeUInt32LE(sampleRate, 24);
  buf.writeUInt32LE(sampleRate * 2, 28);
  buf.writeUInt16LE(2, 32);
  buf.writeUInt16LE(16, 34);
  buf.write("data", 36, "ascii");
  buf.writeUInt32LE(2 * n, 40);
  for (let i = 0; i < n; i++) {
    const v = Math.max(-1, Math.min(32767 / 32768, samples[i]));
    buf.writeInt16LE(Math.round(v * 32768), 44 + 2 * i);
  }
  writeFileSync(path, buf);
}
