/** Layer bindings connect dump layer ids to host-model layers and fix
 * the unit-axis and flatten conventions for each. */

import { readFileSync } from "node:fs";

import { BridgeContractError, DumpFormatError } from "./errors.js";
import type { ChainNode } from "./chain.js";

export type UnitAxis = "dense-units" | "conv-channels";
export type FlattenRule = "row-major" | "column-major";

export interface LayerBinding {
  /** layer_id written to dump headers and matched against plans. */
  layerId: number;
  /** Host layer name (tfjs layer.name). */
  path: string;
  unitAxis: UnitAxis;
  /** How a channel's [h, w] map becomes a d-vector; conv layers only. */
  flatten?: FlattenRule;
}

export interface BoundLayer {
  binding: LayerBinding;
  nodeIndex: number;
  node: ChainNode;
}

export function loadBindings(path: string): LayerBinding[] {
  let payload: unknown;
  try {
    payload = JSON.parse(readFileSync(path, "utf8"));
  } catch (err) {
    throw new DumpFormatError(`${path}: ${(err as Error).message}`);
  }
  if (!Array.isArray(payload)) throw new DumpFormatError(`${path}: expected a JSON array`);
  return payload.map((entry: any, i: number) => {
    if (!Number.isInteger(entry.layerId) || entry.layerId < 1) {
      throw new DumpFormatError(`${path}: binding ${i}: layerId must be a positive integer`);
    }
    if (typeof entry.path !== "string" || entry.path.length === 0) {
      throw new DumpFormatError(`${path}: binding ${i}: missing layer path`);
    }
    if (entry.unitAxis !== "dense-units" && entry.unitAxis !== "conv-channels") {
      throw new DumpFormatError(`${path}: binding ${i}: unitAxis must be dense-units or conv-channels`);
    }
    if (entry.flatten !== undefined && entry.flatten !== "row-major" && entry.flatten !== "column-major") {
      throw new DumpFormatError(`${path}: binding ${i}: flatten must be row-major or column-major`);
    }
    return {
      layerId: entry.layerId,
      path: entry.path,
      unitAxis: entry.unitAxis,
      flatten: entry.flatten,
    } as LayerBinding;
  });
}

/** Match bindings to chain nodes, checking axis conventions and unit
 * counts. Order follows the chain, not the binding list. */
export function resolveBindings(nodes: ChainNode[], bindings: LayerBinding[]): BoundLayer[] {
  const ids = new Set<number>();
  for (const b of bindings) {
    if (ids.has(b.layerId)) throw new BridgeContractError(`duplicate binding for layer_id ${b.layerId}`);
    ids.add(b.layerId);
  }
  const byPath = new Map<string, number>();
  nodes.forEach((node, i) => byPath.set(node.name, i));
  const bound: BoundLayer[] = [];
  for (const binding of bindings) {
    const idx = byPath.get(binding.path);
    if (idx === undefined) {
      throw new BridgeContractError(
        `binding for layer_id ${binding.layerId} names unknown layer ${binding.path}`
      );
    }
    const node = nodes[idx];
    if (binding.unitAxis === "dense-units" && node.kind !== "dense") {
      throw new BridgeContractError(`layer ${binding.path} is ${node.kind}, not dense`);
    }
    if (binding.unitAxis === "conv-channels" && node.kind !== "conv2d") {
      throw new BridgeContractError(`layer ${binding.path} is ${node.kind}, not conv2d`);
    }
    bound.push({ binding, nodeIndex: idx, node });
  }
  bound.sort((a, b) => a.nodeIndex - b.nodeIndex);
  return bound;
}
