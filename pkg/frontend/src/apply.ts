/** Plan application: rebuild the host model with the planned units gone.
 *
 * Removing unit j of a bound layer drops its outgoing row (dense kernel
 * column, conv filter) and bias entry, then drops the matching input
 * slice of the next weight layer downstream: dense kernel rows, conv
 * input channels, or, across a Flatten, every flattened position that
 * came from a removed channel. Pooling passes channel identity through
 * untouched. Anything more entangled was already refused by walkChain.
 */

import * as tf from "@tensorflow/tfjs";

import type { BoundLayer, LayerBinding } from "./bindings.js";
import { resolveBindings } from "./bindings.js";
import type { ChainNode } from "./chain.js";
import { ensureBackend, walkChain } from "./chain.js";
import { BridgeContractError } from "./errors.js";
import type { PruningPlan } from "./plan.js";

export interface ApplyResult {
  model: tf.Sequential;
  paramsBefore: number;
  paramsAfter: number;
  /** 1 - after/before under the host model's parameter counting. */
  realizedRate: number;
}

function keepList(total: number, remove: number[]): number[] {
  const gone = new Set(remove);
  const keep: number[] = [];
  for (let i = 0; i < total; i++) if (!gone.has(i)) keep.push(i);
  return keep;
}

/** Select rows of a row-major [rows, cols] matrix. */
function takeRows(data: Float32Array, rows: number, cols: number, keep: number[]): Float32Array {
  const out = new Float32Array(keep.length * cols);
  keep.forEach((r, i) => out.set(data.subarray(r * cols, (r + 1) * cols), i * cols));
  return out;
}

/** Select columns of a row-major [rows, cols] matrix. */
function takeCols(data: Float32Array, rows: number, cols: number, keep: number[]): Float32Array {
  const out = new Float32Array(rows * keep.length);
  for (let r = 0; r < rows; r++) {
    keep.forEach((c, i) => {
      out[r * keep.length + i] = data[r * cols + c];
    });
  }
  return out;
}

/** Pending upstream removal, expressed on the next consumer's input
 * axis: flat fan-in indices for dense, channel indices for conv. */
interface Pending {
  axis: "flat" | "channels";
  keep: number[];
  total: number;
}

export function applyPlan(
  model: tf.LayersModel,
  plan: PruningPlan,
  bindings: LayerBinding[]
): ApplyResult {
  ensureBackend();
  const nodes = walkChain(model);
  const bound = resolveBindings(nodes, bindings);
  const boundById = new Map<number, BoundLayer>();
  for (const b of bound) boundById.set(b.binding.layerId, b);

  const removeAt = new Map<number, number[]>(); // chain index -> removed units
  for (const lp of plan.layers) {
    const b = boundById.get(lp.layerId);
    if (!b) {
      throw new BridgeContractError(`plan layer ${lp.layerId} has no binding into this model`);
    }
    if (lp.unitCount !== b.node.unitCount) {
      throw new BridgeContractError(
        `plan says layer ${lp.layerId} has J=${lp.unitCount}, host layer ${b.binding.path} has ${b.node.unitCount}`
      );
    }
    if (b.nodeIndex === nodes.length - 1) {
      throw new BridgeContractError(`plan layer ${lp.layerId} is the output layer; refusing`);
    }
    removeAt.set(b.nodeIndex, lp.remove);
  }

  const countParams = (ns: Array<{ kernel?: Float32Array; bias?: Float32Array }>) =>
    ns.reduce((acc, nd) => acc + (nd.kernel?.length ?? 0) + (nd.bias?.length ?? 0), 0);
  const paramsBefore = countParams(nodes);

  const rebuilt = tf.sequential();
  const inputShape = model.inputs[0].shape.slice(1) as number[];
  const newWeights: Array<[number, tf.Tensor[]]> = [];
  let pending: Pending | null = null;
  for (let i = 0; i < nodes.length; i++) {
    const node = nodes[i];
    const removed = removeAt.get(i) ?? [];
    const first = i === 0;
    if (node.kind === "dense") {
      const [fanIn, units] = node.kernelShape!;
      let kernel = node.kernel!;
      let rows = fanIn;
      if (pending) {
        if (pending.axis !== "flat" || pending.total !== fanIn) {
          throw new BridgeContractError(
            `layer ${node.name}: upstream removal does not map onto its ${fanIn} inputs`
          );
        }
        kernel = takeRows(kernel, fanIn, units, pending.keep);
        rows = pending.keep.length;
        pending = null;
      }
      const keepUnits = keepList(units, removed);
      let bias = node.bias!;
      if (removed.length > 0) {
        kernel = takeCols(kernel, rows, units, keepUnits);
        bias = Float32Array.from(keepUnits, (j) => node.bias![j]);
        pending = { axis: "flat", keep: keepUnits, total: units };
      }
      rebuilt.add(
        tf.layers.dense({
          units: keepUnits.length,
          activation: node.activation as "relu" | "linear" | "softmax",
          useBias: true,
          name: node.name,
          inputShape: first ? inputShape : undefined,
        })
      );
      newWeights.push([
        rebuilt.layers.length - 1,
        [tf.tensor2d(kernel, [rows, keepUnits.length]), tf.tensor1d(bias)],
      ]);
    } else if (node.kind === "conv2d") {
      const [kh, kw, inC, outC] = node.kernelShape!;
      let kernel = node.kernel!;
      let channels = inC;
      if (pending) {
        if (pending.axis !== "channels" || pending.total !== inC) {
          throw new BridgeContractError(
            `layer ${node.name}: upstream removal does not map onto its ${inC} input channels`
          );
        }
        // kernel viewed as [kh*kw, inC, outC]: select along the middle axis
        const picked = new Float32Array(kh * kw * pending.keep.length * outC);
        let w = 0;
        for (let s = 0; s < kh * kw; s++) {
          for (const c of pending.keep) {
            picked.set(kernel.subarray((s * inC + c) * outC, (s * inC + c + 1) * outC), w);
            w += outC;
          }
        }
        kernel = picked;
        channels = pending.keep.length;
        pending = null;
      }
      const keepUnits = keepList(outC, removed);
      let bias = node.bias!;
      if (removed.length > 0) {
        kernel = takeCols(kernel, kh * kw * channels, outC, keepUnits);
        bias = Float32Array.from(keepUnits, (j) => node.bias![j]);
        pending = { axis: "channels", keep: keepUnits, total: outC };
      }
      rebuilt.add(
        tf.layers.conv2d({
          filters: keepUnits.length,
          kernelSize: (node.config["kernelSize"] as number[]) ?? 1,
          strides: (node.config["strides"] as number[]) ?? 1,
          padding: (node.config["padding"] as "valid" | "same") ?? "valid",
          activation: node.activation as "relu" | "linear",
          useBias: true,
          name: node.name,
          inputShape: first ? inputShape : undefined,
        })
      );
      newWeights.push([
        rebuilt.layers.length - 1,
        [tf.tensor4d(kernel, [kh, kw, channels, keepUnits.length]), tf.tensor1d(bias)],
      ]);
    } else if (node.kind === "flatten") {
      if (pending && pending.axis === "channels") {
        // [h, w, C] flattens row-major with channels fastest; a removed
        // channel disappears at every spatial position
        const spatial = node.outShape[0] / pending.total;
        const keepSet = new Set(pending.keep);
        const keep: number[] = [];
        for (let s = 0; s < spatial; s++) {
          for (let ch = 0; ch < pending.total; ch++) {
            if (keepSet.has(ch)) keep.push(s * pending.total + ch);
          }
        }
        pending = { axis: "flat", keep, total: node.outShape[0] };
      }
      rebuilt.add(tf.layers.flatten({ name: node.name, inputShape: first ? inputShape : undefined }));
    } else {
      const opts = {
        poolSize: (node.config["poolSize"] as [number, number]) ?? [2, 2],
        strides: (node.config["strides"] as [number, number]) ?? undefined,
        padding: ((node.config["padding"] as string) ?? "valid") as "valid" | "same",
        name: node.name,
        inputShape: first ? inputShape : undefined,
      };
      rebuilt.add(node.kind === "maxpool" ? tf.layers.maxPooling2d(opts) : tf.layers.averagePooling2d(opts));
    }
  }

  for (const [idx, tensors] of newWeights) {
    rebuilt.layers[idx].setWeights(tensors);
  }
  const paramsAfter = rebuilt.layers.reduce(
    (acc, l) => acc + l.getWeights().reduce((a, t) => a + t.size, 0),
    0
  );
  return {
    model: rebuilt,
    paramsBefore,
    paramsAfter,
    realizedRate: 1 - paramsAfter / paramsBefore,
  };
}
