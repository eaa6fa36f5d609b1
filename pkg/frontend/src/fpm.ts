/** FPM1 checkpoint reader, plus a float64 reference forward pass.
 *
 * Layout, little-endian: magic "FPM1", u32 version (= 1), u64 seed,
 * u32 epochs_trained, u32 size-chain length, then the u32 size chain,
 * then per layer the float64 weight matrix [units, fan_in] row-major
 * followed by the float64 bias vector [units]. ReLU between layers,
 * linear output.
 */

import { readFileSync } from "node:fs";

import { DumpFormatError } from "./errors.js";

export interface Checkpoint {
  seed: bigint;
  epochsTrained: number;
  /** [input, hidden..., output] unit counts. */
  sizes: number[];
  /** Per layer, row-major [units, fanIn]. */
  weights: Float64Array[];
  biases: Float64Array[];
}

export function readCheckpoint(path: string): Checkpoint {
  const buf = readFileSync(path);
  if (buf.length < 24) throw new DumpFormatError(`${path}: shorter than checkpoint header`);
  if (buf.toString("ascii", 0, 4) !== "FPM1") {
    throw new DumpFormatError(`${path}: bad magic`);
  }
  const version = buf.readUInt32LE(4);
  if (version !== 1) throw new DumpFormatError(`${path}: unsupported checkpoint version ${version}`);
  const seed = buf.readBigUInt64LE(8);
  const epochsTrained = buf.readUInt32LE(16);
  const numSizes = buf.readUInt32LE(20);
  let off = 24;
  if (buf.length < off + 4 * numSizes) throw new DumpFormatError(`${path}: truncated size chain`);
  const sizes: number[] = [];
  for (let i = 0; i < numSizes; i++) sizes.push(buf.readUInt32LE(off + 4 * i));
  off += 4 * numSizes;
  if (sizes.length < 2 || Math.min(...sizes) < 1) {
    throw new DumpFormatError(`${path}: invalid size chain [${sizes}]`);
  }
  const weights: Float64Array[] = [];
  const biases: Float64Array[] = [];
  for (let l = 1; l < sizes.length; l++) {
    const units = sizes[l];
    const fanIn = sizes[l - 1];
    const need = 8 * units * (fanIn + 1);
    if (buf.length < off + need) {
      throw new DumpFormatError(`${path}: truncated parameters at layer ${l}`);
    }
    const w = new Float64Array(units * fanIn);
    for (let i = 0; i < w.length; i++) w[i] = buf.readDoubleLE(off + 8 * i);
    off += 8 * w.length;
    const b = new Float64Array(units);
    for (let i = 0; i < units; i++) b[i] = buf.readDoubleLE(off + 8 * i);
    off += 8 * units;
    weights.push(w);
    biases.push(b);
  }
  if (off !== buf.length) {
    throw new DumpFormatError(`${path}: ${buf.length - off} trailing bytes`);
  }
  return { seed, epochsTrained, sizes, weights, biases };
}

/** Full-precision logits for [n, inputDim] row-major features. The
 * reference side of every bridge equivalence check. */
export function forwardLogits(ckpt: Checkpoint, features: Float64Array, n: number): Float64Array {
  const inDim = ckpt.sizes[0];
  if (features.length !== n * inDim) {
    throw new DumpFormatError(
      `features have ${features.length} values, expected ${n} x ${inDim}`
    );
  }
  let cur = features;
  let curDim = inDim;
  for (let l = 0; l < ckpt.weights.length; l++) {
    const units = ckpt.sizes[l + 1];
    const w = ckpt.weights[l];
    const b = ckpt.biases[l];
    const next = new Float64Array(n * units);
    const last = l === ckpt.weights.length - 1;
    for (let i = 0; i < n; i++) {
      for (let j = 0; j < units; j++) {
        let acc = b[j];
        for (let k = 0; k < curDim; k++) acc += w[j * curDim + k] * cur[i * curDim + k];
        next[i * units + j] = last ? acc : Math.max(acc, 0);
      }
    }
    cur = next;
    curDim = units;
  }
  return cur;
}
