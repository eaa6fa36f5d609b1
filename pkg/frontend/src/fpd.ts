/** FPD1 binary dumps: one file per (layer, kind) tensor.
 *
 * Header, 26 bytes little-endian: magic "FPD1", u32 version (= 1),
 * u8 kind (0 activations, 1 weight-gradient, 2 bias-gradient, 3 weights,
 * 4 biases), u32 layer_id, u32 unit_count J, u32 sample_count n (0 for
 * parameter kinds), u32 unit_dim d, u8 labels_present (1 exactly for
 * kind 0). Float32 payload follows: [n, J, d] for activations, [J, d]
 * for weight kinds, [J] for bias kinds (whose unit_dim is fixed to 1).
 * Activations append n u32 class labels. File length must match exactly.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { DumpFormatError } from "./errors.js";

export const KIND_ACTIVATIONS = 0;
export const KIND_WEIGHT_GRADIENT = 1;
export const KIND_BIAS_GRADIENT = 2;
export const KIND_WEIGHTS = 3;
export const KIND_BIASES = 4;

export const HEADER_SIZE = 26;
const MAGIC = "FPD1";
const VERSION = 1;

const KIND_NAMES: Record<number, string> = {
  [KIND_ACTIVATIONS]: "activations",
  [KIND_WEIGHT_GRADIENT]: "weight-gradient",
  [KIND_BIAS_GRADIENT]: "bias-gradient",
  [KIND_WEIGHTS]: "weights",
  [KIND_BIASES]: "biases",
};

export function kindName(kind: number): string {
  return KIND_NAMES[kind] ?? `unknown(${kind})`;
}

export interface FpdHeader {
  kind: number;
  layerId: number;
  unitCount: number;
  sampleCount: number;
  unitDim: number;
  labelsPresent: number;
}

export interface Dump {
  header: FpdHeader;
  /** Row-major payload in the shape the kind implies. */
  data: Float32Array;
  /** Class labels, present exactly for activations. */
  labels?: Uint32Array;
}

function checkU32(value: number, what: string): number {
  if (!Number.isInteger(value) || value < 0 || value > 0xffffffff) {
    throw new DumpFormatError(`${what} must be a u32, got ${value}`);
  }
  return value;
}

/** Expected payload element count, or a thrown error for a bad header. */
function payloadLength(h: FpdHeader): number {
  const { kind, unitCount: j, sampleCount: n, unitDim: d } = h;
  if (!(kind in KIND_NAMES)) {
    throw new DumpFormatError(`unknown dump kind ${kind}`);
  }
  if (j < 1) throw new DumpFormatError(`unit_count must be >= 1, got ${j}`);
  if (d < 1) throw new DumpFormatError(`unit_dim must be >= 1, got ${d}`);
  if (kind === KIND_ACTIVATIONS) {
    if (n < 1) throw new DumpFormatError(`activations need sample_count >= 1, got ${n}`);
    if (h.labelsPresent !== 1) {
      throw new DumpFormatError("activations must carry labels (labels_present = 1)");
    }
    return n * j * d;
  }
  if (h.labelsPresent !== 0) {
    throw new DumpFormatError(`${kindName(kind)} dumps carry no labels`);
  }
  if (kind === KIND_BIAS_GRADIENT || kind === KIND_BIASES) {
    if (d !== 1) throw new DumpFormatError(`${kindName(kind)} dumps fix unit_dim to 1, got ${d}`);
  }
  if (kind === KIND_WEIGHTS || kind === KIND_BIASES) {
    if (n !== 0) throw new DumpFormatError(`parameter dumps fix sample_count to 0, got ${n}`);
  } else if (n < 1) {
    throw new DumpFormatError(`gradient dumps need the summed sample_count, got ${n}`);
  }
  return j * d;
}

export function validateDump(dump: Dump): void {
  const expect = payloadLength(dump.header);
  if (dump.data.length !== expect) {
    throw new DumpFormatError(
      `payload has ${dump.data.length} values, header implies ${expect}`
    );
  }
  const wantLabels = dump.header.kind === KIND_ACTIVATIONS ? dump.header.sampleCount : 0;
  const gotLabels = dump.labels?.length ?? 0;
  if (gotLabels !== wantLabels) {
    throw new DumpFormatError(`expected ${wantLabels} labels, got ${gotLabels}`);
  }
  for (const v of dump.data) {
    if (!Number.isFinite(v)) throw new DumpFormatError("payload contains a non-finite value");
  }
}

export function writeDump(path: string, dump: Dump): void {
  validateDump(dump);
  const h = dump.header;
  const labels = dump.labels ?? new Uint32Array(0);
  const buf = Buffer.alloc(HEADER_SIZE + 4 * dump.data.length + 4 * labels.length);
  buf.write(MAGIC, 0, "ascii");
  buf.writeUInt32LE(VERSION, 4);
  buf.writeUInt8(checkU32(h.kind, "kind") & 0xff, 8);
  buf.writeUInt32LE(checkU32(h.layerId, "layer_id"), 9);
  buf.writeUInt32LE(checkU32(h.unitCount, "unit_count"), 13);
  buf.writeUInt32LE(checkU32(h.sampleCount, "sample_count"), 17);
  buf.writeUInt32LE(checkU32(h.unitDim, "unit_dim"), 21);
  buf.writeUInt8(checkU32(h.labelsPresent, "labels_present") & 0xff, 25);
  let off = HEADER_SIZE;
  for (const v of dump.data) {
    buf.writeFloatLE(v, off);
    off += 4;
  }
  for (const v of labels) {
    buf.writeUInt32LE(v, off);
    off += 4;
  }
  writeFileSync(path, buf);
}

export function readDump(path: string): Dump {
  const buf = readFileSync(path);
  if (buf.length < HEADER_SIZE) {
    throw new DumpFormatError(`${path}: shorter than the 26-byte header`);
  }
  if (buf.toString("ascii", 0, 4) !== MAGIC) {
    throw new DumpFormatError(`${path}: bad magic`);
  }
  const version = buf.readUInt32LE(4);
  if (version !== VERSION) {
    throw new DumpFormatError(`${path}: unsupported version ${version}`);
  }
  const header: FpdHeader = {
    kind: buf.readUInt8(8),
    layerId: buf.readUInt32LE(9),
    unitCount: buf.readUInt32LE(13),
    sampleCount: buf.readUInt32LE(17),
    unitDim: buf.readUInt32LE(21),
    labelsPresent: buf.readUInt8(25),
  };
  let expect: number;
  try {
    expect = payloadLength(header);
  } catch (err) {
    throw new DumpFormatError(`${path}: ${(err as Error).message}`);
  }
  const nLabels = header.kind === KIND_ACTIVATIONS ? header.sampleCount : 0;
  const want = HEADER_SIZE + 4 * expect + 4 * nLabels;
  if (buf.length !== want) {
    throw new DumpFormatError(`${path}: file is ${buf.length} bytes, header implies ${want}`);
  }
  const data = new Float32Array(expect);
  for (let i = 0; i < expect; i++) data[i] = buf.readFloatLE(HEADER_SIZE + 4 * i);
  let labels: Uint32Array | undefined;
  if (nLabels > 0) {
    labels = new Uint32Array(nLabels);
    const base = HEADER_SIZE + 4 * expect;
    for (let i = 0; i < nLabels; i++) labels[i] = buf.readUInt32LE(base + 4 * i);
  }
  const dump = { header, data, labels };
  try {
    validateDump(dump);
  } catch (err) {
    throw new DumpFormatError(`${path}: ${(err as Error).message}`);
  }
  return dump;
}

export function activationDump(
  layerId: number,
  sampleCount: number,
  unitCount: number,
  unitDim: number,
  data: Float32Array,
  labels: Uint32Array
): Dump {
  const dump: Dump = {
    header: {
      kind: KIND_ACTIVATIONS,
      layerId,
      unitCount,
      sampleCount,
      unitDim,
      labelsPresent: 1,
    },
    data,
    labels,
  };
  validateDump(dump);
  return dump;
}

export function gradientDump(
  kind: number,
  layerId: number,
  unitCount: number,
  unitDim: number,
  sampleCount: number,
  data: Float32Array
): Dump {
  if (kind !== KIND_WEIGHT_GRADIENT && kind !== KIND_BIAS_GRADIENT) {
    throw new DumpFormatError(`not a gradient kind: ${kind}`);
  }
  const dump: Dump = {
    header: { kind, layerId, unitCount, sampleCount, unitDim, labelsPresent: 0 },
    data,
  };
  validateDump(dump);
  return dump;
}

export function paramDump(
  kind: number,
  layerId: number,
  unitCount: number,
  unitDim: number,
  data: Float32Array
): Dump {
  if (kind !== KIND_WEIGHTS && kind !== KIND_BIASES) {
    throw new DumpFormatError(`not a parameter kind: ${kind}`);
  }
  const dump: Dump = {
    header: { kind, layerId, unitCount, sampleCount: 0, unitDim, labelsPresent: 0 },
    data,
  };
  validateDump(dump);
  return dump;
}
