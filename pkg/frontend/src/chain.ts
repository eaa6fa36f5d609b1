/** Host-model introspection: reduce a tfjs LayersModel to a plain chain
 * of supported layers, refusing anything whose pruning semantics would
 * be a guess (branches, merges, batch-norm, exotic layer types).
 *
 * Supported: Dense and Conv2D (relu or linear fused activation, biased,
 * channels-last), Flatten, MaxPooling2D, AveragePooling2D. A softmax is
 * tolerated on the final layer only, for models used purely as pruning
 * targets; export refuses it because gradient dumps need logits.
 */

import * as tf from "@tensorflow/tfjs";

import { BridgeContractError } from "./errors.js";

let backendReady = false;

/** Pin the plain CPU backend; everything here is desk-scale. */
export function ensureBackend(): void {
  if (!backendReady) {
    tf.setBackend("cpu");
    backendReady = true;
  }
}

export type NodeKind = "dense" | "conv2d" | "flatten" | "maxpool" | "avgpool";

export interface ChainNode {
  kind: NodeKind;
  name: string;
  /** Fused activation for weight layers; "linear" otherwise. */
  activation: "relu" | "linear" | "softmax";
  /** Dense units or conv output channels; 0 for weightless layers. */
  unitCount: number;
  /** Dense [fanIn, units] or Conv2D [kh, kw, inC, outC], row-major. */
  kernel?: Float32Array;
  kernelShape?: number[];
  bias?: Float32Array;
  /** Feature shape coming out of this node, batch axis dropped:
   * [dim] after dense/flatten, [h, w, c] after conv/pool. */
  outShape: number[];
  config: Record<string, unknown>;
}

function activationName(config: Record<string, unknown>): string {
  const a = config["activation"];
  if (a === null || a === undefined) return "linear";
  if (typeof a === "string") return a;
  if (typeof a === "object" && a !== null && "className" in (a as object)) {
    return String((a as { className: unknown }).className).toLowerCase();
  }
  return String(a);
}

function convOut(size: number, k: number, stride: number, padding: string): number {
  if (padding === "same") return Math.ceil(size / stride);
  return Math.floor((size - k) / stride) + 1;
}

function pair(value: unknown): [number, number] {
  if (Array.isArray(value)) return [Number(value[0]), Number(value[1] ?? value[0])];
  return [Number(value), Number(value)];
}

/** Walk model.layers as a single pipeline, validating linearity. */
export function walkChain(model: tf.LayersModel): ChainNode[] {
  ensureBackend();
  const layers = model.layers.filter((l) => l.getClassName() !== "InputLayer");
  if (layers.length === 0) throw new BridgeContractError("model has no layers");

  const inputShape = model.inputs[0].shape.slice(1).map((d) => {
    if (d === null || d < 1) {
      throw new BridgeContractError("model input shape must be fully specified");
    }
    return d;
  });
  if (model.inputs.length !== 1 || model.outputs.length !== 1) {
    throw new BridgeContractError("only single-input single-output models are supported");
  }

  const nodes: ChainNode[] = [];
  let shape = inputShape;
  let prev: tf.layers.Layer | null = null;
  for (let i = 0; i < layers.length; i++) {
    const layer = layers[i];
    const inbound = (layer as unknown as { inboundNodes: Array<{ inboundLayers: unknown[] }> })
      .inboundNodes;
    if (inbound.length !== 1 || inbound[0].inboundLayers.length > 1) {
      throw new BridgeContractError(
        `layer ${layer.name} is wired into a branch or merge; only simple chains are supported`
      );
    }
    if (prev !== null) {
      const feeder = inbound[0].inboundLayers[0];
      if (feeder !== prev && (feeder as tf.layers.Layer).getClassName?.() !== "InputLayer") {
        throw new BridgeContractError(
          `layer ${layer.name} does not consume the previous layer's output`
        );
      }
    }
    prev = layer;

    const cls = layer.getClassName();
    const config = layer.getConfig() as Record<string, unknown>;
    if (cls === "Dense") {
      const act = activationName(config);
      if (act !== "relu" && act !== "linear" && act !== "softmax") {
        throw new BridgeContractError(`layer ${layer.name}: unsupported activation ${act}`);
      }
      if (act === "softmax" && i !== layers.length - 1) {
        throw new BridgeContractError(`layer ${layer.name}: softmax before the final layer`);
      }
      if (config["useBias"] === false) {
        throw new BridgeContractError(`layer ${layer.name}: bias-free layers are not supported`);
      }
      if (shape.length !== 1) {
        throw new BridgeContractError(`layer ${layer.name}: dense input is not flat; add Flatten`);
      }
      const [kernel, bias] = layer.getWeights();
      nodes.push({
        kind: "dense",
        name: layer.name,
        activation: act,
        unitCount: Number(config["units"]),
        kernel: kernel.dataSync() as Float32Array,
        kernelShape: kernel.shape.slice(),
        bias: bias.dataSync() as Float32Array,
        outShape: [Number(config["units"])],
        config,
      });
      shape = [Number(config["units"])];
    } else if (cls === "Conv2D") {
      const act = activationName(config);
      if (act !== "relu" && act !== "linear") {
        throw new BridgeContractError(`layer ${layer.name}: unsupported activation ${act}`);
      }
      if (config["useBias"] === false) {
        throw new BridgeContractError(`layer ${layer.name}: bias-free layers are not supported`);
      }
      if (config["dataFormat"] === "channelsFirst") {
        throw new BridgeContractError(`layer ${layer.name}: channelsFirst is not supported`);
      }
      if (shape.length !== 3) {
        throw new BridgeContractError(`layer ${layer.name}: conv input must be [h, w, c]`);
      }
      const [kh, kw] = pair(config["kernelSize"]);
      const [sy, sx] = pair(config["strides"] ?? 1);
      const [dy, dx] = pair(config["dilationRate"] ?? 1);
      if (dy !== 1 || dx !== 1) {
        throw new BridgeContractError(`layer ${layer.name}: dilated convolutions are not supported`);
      }
      const padding = String(config["padding"] ?? "valid");
      const filters = Number(config["filters"]);
      const [kernel, bias] = layer.getWeights();
      const h = convOut(shape[0], kh, sy, padding);
      const w = convOut(shape[1], kw, sx, padding);
      nodes.push({
        kind: "conv2d",
        name: layer.name,
        activation: act,
        unitCount: filters,
        kernel: kernel.dataSync() as Float32Array,
        kernelShape: kernel.shape.slice(),
        bias: bias.dataSync() as Float32Array,
        outShape: [h, w, filters],
        config,
      });
      shape = [h, w, filters];
    } else if (cls === "Flatten") {
      const flat = shape.reduce((a, b) => a * b, 1);
      nodes.push({
        kind: "flatten",
        name: layer.name,
        activation: "linear",
        unitCount: 0,
        outShape: [flat],
        config,
      });
      shape = [flat];
    } else if (cls === "MaxPooling2D" || cls === "AveragePooling2D") {
      if (shape.length !== 3) {
        throw new BridgeContractError(`layer ${layer.name}: pooling input must be [h, w, c]`);
      }
      if (config["dataFormat"] === "channelsFirst") {
        throw new BridgeContractError(`layer ${layer.name}: channelsFirst is not supported`);
      }
      const [py, px] = pair(config["poolSize"] ?? 2);
      const [sy, sx] = pair(config["strides"] ?? config["poolSize"] ?? 2);
      const padding = String(config["padding"] ?? "valid");
      const h = convOut(shape[0], py, sy, padding);
      const w = convOut(shape[1], px, sx, padding);
      nodes.push({
        kind: cls === "MaxPooling2D" ? "maxpool" : "avgpool",
        name: layer.name,
        activation: "linear",
        unitCount: 0,
        outShape: [h, w, shape[2]],
        config,
      });
      shape = [h, w, shape[2]];
    } else {
      throw new BridgeContractError(
        `layer ${layer.name} (${cls}) is not supported; the bridge refuses rather than guessing`
      );
    }
  }
  const last = nodes[nodes.length - 1];
  if (last.kind !== "dense" && last.kind !== "conv2d") {
    throw new BridgeContractError("model must end in a weight layer");
  }
  return nodes;
}

/** One node's forward rule from explicit kernel/bias tensors, so the same
 * code path serves prediction and tf.grads. `last` keeps final logits
 * linear even when walkChain tolerated a softmax head. */
export function nodeForward(
  node: ChainNode,
  x: tf.Tensor,
  kernel: tf.Tensor | null,
  bias: tf.Tensor | null,
  opts: { linearHead?: boolean } = {}
): tf.Tensor {
  if (node.kind === "dense") {
    let out = tf.add(tf.matMul(x as tf.Tensor2D, kernel as tf.Tensor2D), bias as tf.Tensor);
    if (node.activation === "relu") out = tf.relu(out);
    else if (node.activation === "softmax" && !opts.linearHead) out = tf.softmax(out);
    return out;
  }
  if (node.kind === "conv2d") {
    const [sy, sx] = pair(node.config["strides"] ?? 1);
    const padding = String(node.config["padding"] ?? "valid") as "valid" | "same";
    let out = tf.add(
      tf.conv2d(x as tf.Tensor4D, kernel as tf.Tensor4D, [sy, sx], padding),
      bias as tf.Tensor
    );
    if (node.activation === "relu") out = tf.relu(out);
    return out;
  }
  if (node.kind === "flatten") {
    return tf.reshape(x, [x.shape[0], -1]);
  }
  const [py, px] = pair(node.config["poolSize"] ?? 2);
  const [sy, sx] = pair(node.config["strides"] ?? node.config["poolSize"] ?? 2);
  const padding = String(node.config["padding"] ?? "valid") as "valid" | "same";
  if (node.kind === "maxpool") {
    return tf.maxPool(x as tf.Tensor4D, [py, px], [sy, sx], padding);
  }
  return tf.avgPool(x as tf.Tensor4D, [py, px], [sy, sx], padding);
}
