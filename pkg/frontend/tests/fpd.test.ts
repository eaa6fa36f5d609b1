import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { beforeAll, describe, expect, test } from "vitest";

import {
  KIND_ACTIVATIONS,
  KIND_BIASES,
  KIND_BIAS_GRADIENT,
  KIND_WEIGHTS,
  KIND_WEIGHT_GRADIENT,
  activationDump,
  gradientDump,
  paramDump,
  readDump,
  writeDump,
} from "../src/fpd.js";
import { DumpFormatError } from "../src/errors.js";
import { FIXTURE_DIR, lcg } from "./helpers.js";

let dir: string;
beforeAll(() => {
  dir = mkdtempSync(join(tmpdir(), "fpd-"));
});

function randomFloats(count: number, seed: number): Float32Array {
  const rand = lcg(seed);
  return Float32Array.from({ length: count }, () => Math.fround(rand() * 4 - 2));
}

describe("round trips", () => {
  test("activations keep header, payload, and labels exactly", () => {
    const data = randomFloats(5 * 3 * 2, 1);
    const labels = Uint32Array.from([0, 2, 1, 1, 0]);
    const path = join(dir, "acts.fpd");
    writeDump(path, activationDump(7, 5, 3, 2, data, labels));
    const back = readDump(path);
    expect(back.header).toEqual({
      kind: KIND_ACTIVATIONS,
      layerId: 7,
      unitCount: 3,
      sampleCount: 5,
      unitDim: 2,
      labelsPresent: 1,
    });
    expect(Array.from(back.data)).toEqual(Array.from(data));
    expect(Array.from(back.labels!)).toEqual(Array.from(labels));
  });

  test("every non-activation kind survives unchanged", () => {
    const cases = [
      gradientDump(KIND_WEIGHT_GRADIENT, 2, 4, 6, 100, randomFloats(24, 2)),
      gradientDump(KIND_BIAS_GRADIENT, 2, 4, 1, 100, randomFloats(4, 3)),
      paramDump(KIND_WEIGHTS, 2, 4, 6, randomFloats(24, 4)),
      paramDump(KIND_BIASES, 2, 4, 1, randomFloats(4, 5)),
    ];
    cases.forEach((dump, i) => {
      const path = join(dir, `kind${dump.header.kind}-${i}.fpd`);
      writeDump(path, dump);
      const back = readDump(path);
      expect(back.header).toEqual(dump.header);
      expect(Array.from(back.data)).toEqual(Array.from(dump.data));
      expect(back.labels).toBeUndefined();
    });
  });

  test("reads a reference capture dump from the other implementation", () => {
    const acts = readDump(join(FIXTURE_DIR, "py_dumps", "layer1_activations.fpd"));
    expect(acts.header.kind).toBe(KIND_ACTIVATIONS);
    expect(acts.header.layerId).toBe(1);
    expect(acts.header.unitCount).toBe(24);
    expect(acts.header.sampleCount).toBe(240);
    expect(acts.header.unitDim).toBe(1);
    expect(acts.labels!.length).toBe(240);

    const weights = readDump(join(FIXTURE_DIR, "py_dumps", "layer2_weights.fpd"));
    expect(weights.header.kind).toBe(KIND_WEIGHTS);
    expect(weights.header.unitCount).toBe(12);
    expect(weights.header.unitDim).toBe(24);
    expect(weights.header.sampleCount).toBe(0);
  });
});

describe("malformed files are refused", () => {
  function validBytes(): Buffer {
    const path = join(dir, "valid.fpd");
    writeDump(
      path,
      activationDump(1, 2, 3, 1, randomFloats(6, 9), Uint32Array.from([0, 1]))
    );
    return Buffer.from(readFileSync(path));
  }

  function expectRejected(bytes: Buffer, pattern: RegExp): void {
    const path = join(dir, "mangled.fpd");
    writeFileSync(path, bytes);
    expect(() => readDump(path)).toThrowError(DumpFormatError);
    expect(() => readDump(path)).toThrowError(pattern);
  }

  test("bad magic", () => {
    const bytes = validBytes();
    bytes.write("NOPE", 0, "ascii");
    expectRejected(bytes, /bad magic/);
  });

  test("unsupported version", () => {
    const bytes = validBytes();
    bytes.writeUInt32LE(9, 4);
    expectRejected(bytes, /unsupported version 9/);
  });

  test("truncated payload", () => {
    expectRejected(validBytes().subarray(0, 40), /file is 40 bytes/);
  });

  test("trailing bytes", () => {
    expectRejected(Buffer.concat([validBytes(), Buffer.from([0])]), /header implies/);
  });

  test("unknown kind", () => {
    const bytes = validBytes();
    bytes.writeUInt8(9, 8);
    expectRejected(bytes, /unknown dump kind 9/);
  });

  test("labels flagged on a parameter dump", () => {
    const path = join(dir, "weights-labels.fpd");
    writeDump(path, paramDump(KIND_WEIGHTS, 1, 3, 2, randomFloats(6, 10)));
    const bytes = Buffer.from(readFileSync(path));
    bytes.writeUInt8(1, 25);
    expectRejected(bytes, /carry no labels/);
  });

  test("non-finite payload", () => {
    const bytes = validBytes();
    bytes.writeFloatLE(Number.NaN, 26);
    expectRejected(bytes, /non-finite/);
  });
});

describe("constructor contracts", () => {
  test("bias dumps fix unit_dim to 1", () => {
    expect(() => paramDump(KIND_BIASES, 1, 3, 2, randomFloats(6, 11))).toThrowError(
      /fix unit_dim to 1/
    );
  });

  test("gradient dumps need a positive summed sample_count", () => {
    expect(() =>
      gradientDump(KIND_WEIGHT_GRADIENT, 1, 3, 2, 0, randomFloats(6, 12))
    ).toThrowError(/sample_count/);
  });

  test("payload length must match the header", () => {
    expect(() => paramDump(KIND_WEIGHTS, 1, 3, 2, randomFloats(5, 13))).toThrowError(
      /header implies 6/
    );
  });

  test("label count must match the sample count", () => {
    expect(() =>
      activationDump(1, 2, 3, 1, randomFloats(6, 14), Uint32Array.from([0]))
    ).toThrowError(/expected 2 labels, got 1/);
  });
});
