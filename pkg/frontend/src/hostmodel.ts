/** Host-model helpers: build a tfjs MLP from an FPM1 checkpoint, and
 * save/load tfjs models to a plain directory (model.json + weights.bin)
 * without any framework-specific file handler. */

import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import * as tf from "@tensorflow/tfjs";

import { ensureBackend } from "./chain.js";
import { DumpFormatError } from "./errors.js";
import type { Checkpoint } from "./fpm.js";
import type { LayerBinding } from "./bindings.js";

/** Dense ReLU chain with a linear head, weights cast to float32. Kernel
 * layout is the transpose of the checkpoint's [units, fanIn] matrices. */
export function mlpFromCheckpoint(ckpt: Checkpoint): tf.Sequential {
  ensureBackend();
  const model = tf.sequential();
  for (let l = 1; l < ckpt.sizes.length; l++) {
    const units = ckpt.sizes[l];
    const fanIn = ckpt.sizes[l - 1];
    model.add(
      tf.layers.dense({
        units,
        activation: l === ckpt.sizes.length - 1 ? "linear" : "relu",
        inputShape: l === 1 ? [fanIn] : undefined,
        name: `dense_l${l}`,
      })
    );
    const w = ckpt.weights[l - 1];
    const kernelT = new Float32Array(fanIn * units);
    for (let j = 0; j < units; j++) {
      for (let k = 0; k < fanIn; k++) kernelT[k * units + j] = Math.fround(w[j * fanIn + k]);
    }
    const bias = Float32Array.from(ckpt.biases[l - 1], Math.fround);
    model.layers[model.layers.length - 1].setWeights([
      tf.tensor2d(kernelT, [fanIn, units]),
      tf.tensor1d(bias),
    ]);
  }
  return model;
}

/** Default bindings for a checkpoint-shaped MLP: every hidden layer,
 * layer_id counting from 1 as capture does. */
export function mlpBindings(ckpt: Checkpoint): LayerBinding[] {
  const out: LayerBinding[] = [];
  for (let l = 1; l < ckpt.sizes.length - 1; l++) {
    out.push({ layerId: l, path: `dense_l${l}`, unitAxis: "dense-units" });
  }
  return out;
}

export async function saveModel(model: tf.LayersModel, dir: string): Promise<void> {
  mkdirSync(dir, { recursive: true });
  await model.save(
    tf.io.withSaveHandler(async (artifacts) => {
      const manifest = {
        modelTopology: artifacts.modelTopology,
        format: artifacts.format,
        generatedBy: artifacts.generatedBy,
        convertedBy: null,
        weightsManifest: [{ paths: ["weights.bin"], weights: artifacts.weightSpecs }],
      };
      writeFileSync(join(dir, "model.json"), JSON.stringify(manifest));
      const data = artifacts.weightData as ArrayBuffer;
      writeFileSync(join(dir, "weights.bin"), Buffer.from(data));
      return {
        modelArtifactsInfo: {
          dateSaved: new Date(),
          modelTopologyType: "JSON",
        },
      };
    })
  );
}

export async function loadModel(dir: string): Promise<tf.LayersModel> {
  ensureBackend();
  let manifest: any;
  try {
    manifest = JSON.parse(readFileSync(join(dir, "model.json"), "utf8"));
  } catch (err) {
    throw new DumpFormatError(`${dir}: ${(err as Error).message}`);
  }
  const weightData = readFileSync(join(dir, "weights.bin"));
  const weightSpecs = manifest.weightsManifest.flatMap((g: any) => g.weights);
  return tf.loadLayersModel(
    tf.io.fromMemory({
      modelTopology: manifest.modelTopology,
      weightSpecs,
      weightData: weightData.buffer.slice(
        weightData.byteOffset,
        weightData.byteOffset + weightData.byteLength
      ),
    })
  );
}
