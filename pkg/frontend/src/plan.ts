/** PruningPlan JSON, the contract consumed from the planner:
 * {"tod_level": float|null, "layers": [{"layer", "J", "m_hat",
 * "remove": [int...], "achieved_tod": float|null}], "pruning_rate": float}
 */

import { readFileSync } from "node:fs";

import { DumpFormatError } from "./errors.js";

export interface LayerPlan {
  layerId: number;
  unitCount: number;
  mHat: number;
  /** Ascending original unit indices to remove. */
  remove: number[];
  achievedTod: number | null;
}

export interface PruningPlan {
  todLevel: number | null;
  layers: LayerPlan[];
  pruningRate: number;
}

function asInt(value: unknown, what: string): number {
  if (typeof value !== "number" || !Number.isInteger(value)) {
    throw new DumpFormatError(`${what} must be an integer, got ${JSON.stringify(value)}`);
  }
  return value;
}

export function planFromJson(text: string): PruningPlan {
  let payload: any;
  try {
    payload = JSON.parse(text);
  } catch (err) {
    throw new DumpFormatError(`plan is not valid JSON: ${(err as Error).message}`);
  }
  if (!payload || !Array.isArray(payload.layers)) {
    throw new DumpFormatError("plan has no layers array");
  }
  const layers: LayerPlan[] = payload.layers.map((entry: any) => {
    const layerId = asInt(entry.layer, "layer");
    const unitCount = asInt(entry.J, "J");
    const mHat = asInt(entry.m_hat, "m_hat");
    if (!Array.isArray(entry.remove)) {
      throw new DumpFormatError(`layer ${layerId}: remove must be an array`);
    }
    const remove = entry.remove.map((k: unknown) => asInt(k, "remove entry"));
    if (remove.length !== mHat) {
      throw new DumpFormatError(`layer ${layerId}: m_hat=${mHat} but ${remove.length} removals`);
    }
    for (let i = 0; i < remove.length; i++) {
      if (remove[i] < 0 || remove[i] >= unitCount) {
        throw new DumpFormatError(`layer ${layerId}: unit ${remove[i]} outside 0..${unitCount - 1}`);
      }
      if (i > 0 && remove[i] <= remove[i - 1]) {
        throw new DumpFormatError(`layer ${layerId}: remove list must be strictly ascending`);
      }
    }
    if (mHat >= unitCount) {
      throw new DumpFormatError(`layer ${layerId}: removing all ${unitCount} units`);
    }
    const achievedTod = entry.achieved_tod === null ? null : Number(entry.achieved_tod);
    return { layerId, unitCount, mHat, remove, achievedTod };
  });
  const seen = new Set<number>();
  for (const lp of layers) {
    if (seen.has(lp.layerId)) throw new DumpFormatError(`duplicate plan entry for layer ${lp.layerId}`);
    seen.add(lp.layerId);
  }
  const rate = Number(payload.pruning_rate);
  if (!Number.isFinite(rate) || rate < 0 || rate >= 1) {
    throw new DumpFormatError(`pruning_rate out of [0, 1): ${payload.pruning_rate}`);
  }
  return {
    todLevel: payload.tod_level === null || payload.tod_level === undefined
      ? null
      : Number(payload.tod_level),
    layers,
    pruningRate: rate,
  };
}

export function readPlan(path: string): PruningPlan {
  return planFromJson(readFileSync(path, "utf8"));
}
