/**
 * BWEW v1 weight file serialization.
 *
 * Little-endian: magic "BWEW", u32 version=1, u32 layer_count=4, per layer
 * {u32 rows, u32 cols, rows*cols f32 row-major matrix, rows f32 bias},
 * f32 theta, u32 CRC-32 of all preceding bytes.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { crc32 } from "node:zlib";

import { LAYER_DIMS, Network } from "./mlp.js";

const MAGIC = "BWEW";
const VERSION = 1;

export function encodeWeights(net: Network): Buffer {
  let size = 4 + 8;
  for (const l of net.layers) {
    size += 8 + 4 * (l.w.length + l.b.length);
  }
  size += 4 + 4;
  const buf = Buffer.alloc(size);
  let off = 0;
  buf.write(MAGIC, off, "ascii");
  off += 4;
  off = buf.writeUInt32LE(VERSION, off);
  off = buf.writeUInt32LE(net.layers.length, off);
  for (const l of net.layers) {
    off = buf.writeUInt32LE(l.rows, off);
    off = buf.writeUInt32LE(l.cols, off);
    for (let i = 0; i < l.w.length; i++) {
      off = buf.writeFloatLE(l.w[i], off);
    }
    for (let i = 0; i < l.b.length; i++) {
      off = buf.writeFloatLE(l.b[i], off);
    }
  }
  off = buf.writeFloatLE(net.theta, off);
  buf.writeUInt32LE(crc32(buf.subarray(0, off)) >>> 0, off);
  return buf;
}

export function saveWeights(net: Network, path: string): void {
  writeFileSync(path, encodeWeights(net));
}

export function loadWeights(path: string): Network {
  const blob = readFileSync(path);
  if (blob.length < 16) {
    throw new Error("file too short for BWEW header");
  }
  const body = blob.subarray(0, blob.length - 4);
  if ((crc32(body) >>> 0) !== blob.readUInt32LE(blob.length - 4)) {
    throw new Error("CRC mismatch");
  }
  if (body.toString("ascii", 0, 4) !== MAGIC) {
    throw new Error("bad magic");
  }
  const version = body.readUInt32LE(4);
  if (version !== VERSION) {
    throw new Error(`unsupported version ${version}`);
  }
  const layerCount = body.readUInt32LE(8);
  if (layerCount !== LAYER_DIMS.length - 1) {
    throw new Error(`expected ${LAYER_DIMS.length - 1} layers`);
  }
  let off = 12;
  const layers = [];
  for (let i = 0; i < layerCount; i++) {
    const rows = body.readUInt32LE(off);
    const cols = body.readUInt32LE(off + 4);
    off += 8;
    if (rows !== LAYER_DIMS[i + 1] || cols !== LAYER_DIMS[i]) {
      throw new Error(`layer ${i} dims ${rows}x${cols} do not match `
        + `${LAYER_DIMS[i + 1]}x${LAYER_DIMS[i]}`);
    }
    const w = new Float64Array(rows * cols);
    for (let j = 0; j < w.length; j++) {
      w[j] = body.readFloatLE(off + 4 * j);
    }
    off += 4 * w.length;
    const b = new Float64Array(rows);
    for (let j = 0; j < rows; j++) {
      b[j] = body.readFloatLE(off + 4 * j);
    }
    off += 4 * rows;
    layers.push({ w, b, rows, cols });
  }
  if (off + 4 !== body.length) {
    throw new Error("trailing bytes after theta");
  }
  const theta = body.readFloatLE(off);
  return { layers, theta };
}
