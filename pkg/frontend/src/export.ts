/** Dump export: run the prune split through a host model, capture
 * post-activation outputs of the bound layers, accumulate loss-gradient
 * sums for their parameters, and write the five FPD1 files per layer
 * that the scorer consumes.
 *
 * Gradients are of the summed per-sample cross-entropy over the whole
 * split, so dumps stay per-unit sized no matter how many samples flow
 * through. Accumulation happens in float64 across batches.
 */

import { mkdirSync } from "node:fs";
import { join } from "node:path";

import * as tf from "@tensorflow/tfjs";

import type { LayerBinding, BoundLayer } from "./bindings.js";
import { resolveBindings } from "./bindings.js";
import type { ChainNode } from "./chain.js";
import { ensureBackend, nodeForward, walkChain } from "./chain.js";
import type { LabeledData } from "./csv.js";
import { BridgeContractError } from "./errors.js";
import {
  KIND_BIASES,
  KIND_BIAS_GRADIENT,
  KIND_WEIGHTS,
  KIND_WEIGHT_GRADIENT,
  activationDump,
  gradientDump,
  paramDump,
  writeDump,
} from "./fpd.js";

export interface ExportOptions {
  batchSize?: number;
}

interface WeightAccumulator {
  node: ChainNode;
  kernelGrad: Float64Array;
  biasGrad: Float64Array;
}

/** [J, d] channel-major copy of a conv kernel [kh, kw, inC, outC]; each
 * channel's [kh, kw, inC] block is flattened row-major. */
function channelMajorKernel(kernel: Float32Array | Float64Array, shape: number[]): Float32Array {
  const [kh, kw, inC, outC] = shape;
  const d = kh * kw * inC;
  const out = new Float32Array(outC * d);
  for (let y = 0; y < kh; y++) {
    for (let x = 0; x < kw; x++) {
      for (let c = 0; c < inC; c++) {
        const flat = (y * kw + x) * inC + c;
        for (let j = 0; j < outC; j++) {
          out[j * d + flat] = Math.fround(kernel[flat * outC + j]);
        }
      }
    }
  }
  return out;
}

/** [J, fanIn] copy of a dense kernel stored [fanIn, units]. */
function unitMajorKernel(kernel: Float32Array | Float64Array, shape: number[]): Float32Array {
  const [fanIn, units] = shape;
  const out = new Float32Array(units * fanIn);
  for (let k = 0; k < fanIn; k++) {
    for (let j = 0; j < units; j++) out[j * fanIn + k] = Math.fround(kernel[k * units + j]);
  }
  return out;
}

export interface ExportResult {
  /** Written files, five per bound layer. */
  paths: string[];
  /** Bound layer ids in chain order. */
  layerIds: number[];
}

export function exportDumps(
  model: tf.LayersModel,
  data: LabeledData,
  bindings: LayerBinding[],
  outDir: string,
  opts: ExportOptions = {}
): ExportResult {
  ensureBackend();
  const nodes = walkChain(model);
  const bound = resolveBindings(nodes, bindings);
  if (bound.length === 0) throw new BridgeContractError("no layers bound; nothing to export");
  const n = data.sampleCount;
  if (n < 1) throw new BridgeContractError("cannot export dumps from zero samples");
  if (data.labels.length !== n) {
    throw new BridgeContractError(`${n} samples but ${data.labels.length} labels`);
  }

  const head = nodes[nodes.length - 1];
  if (head.activation !== "linear") {
    throw new BridgeContractError(
      "export needs linear logits; the final layer's fused activation is " + head.activation
    );
  }
  const classCount = head.unitCount;
  for (const y of data.labels) {
    if (y >= classCount) {
      throw new BridgeContractError(`label ${y} outside the model's ${classCount} outputs`);
    }
  }
  for (const b of bound) {
    if (b.nodeIndex === nodes.length - 1) {
      throw new BridgeContractError("the output layer cannot be bound for scoring");
    }
  }

  const inputShape = model.inputs[0].shape.slice(1) as number[];
  const flatIn = inputShape.reduce((a, b) => a * b, 1);
  if (data.featureCount !== flatIn) {
    throw new BridgeContractError(
      `model wants ${flatIn} features per sample, data has ${data.featureCount}`
    );
  }

  // activation buffers per bound layer, [n, J, d] row-major
  const actDims = bound.map((b) => {
    if (b.node.kind === "dense") return { j: b.node.unitCount, d: 1, h: 0, w: 0 };
    const [h, w, c] = b.node.outShape;
    return { j: c, d: h * w, h, w };
  });
  const actBuffers = bound.map((b, i) => new Float32Array(n * actDims[i].j * actDims[i].d));

  // gradient accumulators for every weight layer, in chain order
  const weightNodes = nodes.filter((nd) => nd.kind === "dense" || nd.kind === "conv2d");
  const accums: WeightAccumulator[] = weightNodes.map((nd) => ({
    node: nd,
    kernelGrad: new Float64Array(nd.kernel!.length),
    biasGrad: new Float64Array(nd.bias!.length),
  }));
  const weightTensors: tf.Tensor[] = [];
  for (const nd of weightNodes) {
    weightTensors.push(tf.tensor(nd.kernel!, nd.kernelShape!));
    weightTensors.push(tf.tensor1d(nd.bias!));
  }

  const forwardAll = (x: tf.Tensor, weights: tf.Tensor[], capture: tf.Tensor[] | null) => {
    let t = x;
    let wi = 0;
    for (let i = 0; i < nodes.length; i++) {
      const nd = nodes[i];
      if (nd.kind === "dense" || nd.kind === "conv2d") {
        t = nodeForward(nd, t, weights[2 * wi], weights[2 * wi + 1], { linearHead: true });
        wi += 1;
      } else {
        t = nodeForward(nd, t, null, null);
      }
      if (capture) {
        const slot = bound.findIndex((b) => b.nodeIndex === i);
        if (slot >= 0) capture[slot] = t;
      }
    }
    return t;
  };

  const batchSize = opts.batchSize ?? 256;
  for (let start = 0; start < n; start += batchSize) {
    const bn = Math.min(batchSize, n - start);
    const xs = new Float32Array(bn * flatIn);
    for (let i = 0; i < bn * flatIn; i++) xs[i] = Math.fround(data.features[start * flatIn + i]);
    const ys = Int32Array.from(data.labels.subarray(start, start + bn));

    tf.tidy(() => {
      const xb = tf.tensor(xs, [bn, ...inputShape]);

      // pass 1: activations of the bound layers
      const captured: tf.Tensor[] = new Array(bound.length);
      forwardAll(xb, weightTensors, captured);
      captured.forEach((t, slot) => {
        const { j, d, h, w } = actDims[slot];
        const raw = t.dataSync() as Float32Array;
        const buf = actBuffers[slot];
        if (bound[slot].node.kind === "dense") {
          buf.set(raw, start * j);
          return;
        }
        const colMajor = bound[slot].binding.flatten === "column-major";
        for (let i = 0; i < bn; i++) {
          for (let y = 0; y < h; y++) {
            for (let x = 0; x < w; x++) {
              const base = ((i * h + y) * w + x) * j;
              const cell = colMajor ? x * h + y : y * w + x;
              for (let c = 0; c < j; c++) {
                buf[((start + i) * j + c) * d + cell] = raw[base + c];
              }
            }
          }
        }
      });

      // pass 2: batch-summed loss gradients for every weight layer
      const lossOf = (...weights: tf.Tensor[]) => {
        const logits = forwardAll(xb, weights, null);
        const oneHot = tf.oneHot(tf.tensor1d(ys, "int32"), classCount);
        return tf.neg(tf.sum(tf.mul(tf.logSoftmax(logits), oneHot))) as tf.Scalar;
      };
      const gradTensors = tf.grads(lossOf)(weightTensors);
      gradTensors.forEach((g, idx) => {
        const acc = accums[Math.floor(idx / 2)];
        const target = idx % 2 === 0 ? acc.kernelGrad : acc.biasGrad;
        const raw = g.dataSync() as Float32Array;
        for (let i = 0; i < raw.length; i++) target[i] += raw[i];
      });
    });
  }
  weightTensors.forEach((t) => t.dispose());

  mkdirSync(outDir, { recursive: true });
  const labels = Uint32Array.from(data.labels);
  const paths: string[] = [];
  const weightIndexOf = new Map<ChainNode, number>();
  weightNodes.forEach((nd, i) => weightIndexOf.set(nd, i));

  bound.forEach((b, slot) => {
    const id = b.binding.layerId;
    const { j, d } = actDims[slot];
    const acc = accums[weightIndexOf.get(b.node)!];
    const dense = b.node.kind === "dense";
    const kernelDump = dense
      ? unitMajorKernel(b.node.kernel!, b.node.kernelShape!)
      : channelMajorKernel(b.node.kernel!, b.node.kernelShape!);
    const kernelGradDump = dense
      ? unitMajorKernel(acc.kernelGrad, b.node.kernelShape!)
      : channelMajorKernel(acc.kernelGrad, b.node.kernelShape!);
    const paramD = dense ? b.node.kernelShape![0] : kernelDump.length / j;

    const emit = (name: string, dump: ReturnType<typeof paramDump>) => {
      const path = join(outDir, name);
      writeDump(path, dump);
      paths.push(path);
    };
    emit(`layer${id}_activations.fpd`, activationDump(id, n, j, d, actBuffers[slot], labels));
    emit(`layer${id}_wgrad.fpd`, gradientDump(KIND_WEIGHT_GRADIENT, id, j, paramD, n, kernelGradDump));
    emit(
      `layer${id}_bgrad.fpd`,
      gradientDump(KIND_BIAS_GRADIENT, id, j, 1, n, Float32Array.from(acc.biasGrad, Math.fround))
    );
    emit(`layer${id}_weights.fpd`, paramDump(KIND_WEIGHTS, id, j, paramD, kernelDump));
    emit(`layer${id}_biases.fpd`, paramDump(KIND_BIASES, id, j, 1, b.node.bias!));
  });
  return { paths, layerIds: bound.map((b) => b.binding.layerId) };
}
