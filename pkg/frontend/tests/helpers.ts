import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

/** Where global-setup materializes the reference fixtures. */
export const FIXTURE_DIR = join(dirname(fileURLToPath(import.meta.url)), ".fixtures");

export function maxAbsDiff(a: ArrayLike<number>, b: ArrayLike<number>): number {
  if (a.length !== b.length) {
    throw new Error(`length mismatch: ${a.length} vs ${b.length}`);
  }
  let worst = 0;
  for (let i = 0; i < a.length; i++) {
    const d = Math.abs(a[i] - b[i]);
    if (d > worst) worst = d;
  }
  return worst;
}

/** Small deterministic generator so test models need no RNG dependency. */
export function lcg(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state * 1664525 + 1013904223) >>> 0;
    return state / 2 ** 32;
  };
}
