#!/usr/bin/env node
/** Command line bridge: export capture dumps from a host model, or
 * apply a pruning plan to one.
 *
 * Exit codes: 0 success, 1 unexpected failure, 2 usage or unreadable
 * input, 3 inputs that are well formed but do not fit together.
 */

import { parseArgs } from "node:util";
import { mkdirSync } from "node:fs";

import * as tf from "@tensorflow/tfjs";

import type { LayerBinding } from "./bindings.js";
import { loadBindings } from "./bindings.js";
import { readLabeledCsv } from "./csv.js";
import { BridgeContractError, DumpFormatError } from "./errors.js";
import { exportDumps } from "./export.js";
import { readCheckpoint } from "./fpm.js";
import { loadModel, mlpBindings, mlpFromCheckpoint, saveModel } from "./hostmodel.js";
import { applyPlan } from "./apply.js";
import { readPlan } from "./plan.js";

const USAGE = `usage:
  bridge export (--model DIR | --fpm FILE) --data CSV --out DIR [--bindings JSON] [--batch N]
  bridge apply  (--model DIR | --fpm FILE) --plan JSON --out DIR [--bindings JSON]

--model loads a saved host model directory (model.json + weights.bin);
--fpm builds a dense ReLU host from a checkpoint file. --bindings is
required with --model and optional with --fpm, where every hidden layer
is bound by default.`;

class UsageError extends Error {}

interface Host {
  model: tf.LayersModel;
  bindings: LayerBinding[];
}

async function loadHost(values: {
  model?: string;
  fpm?: string;
  bindings?: string;
}): Promise<Host> {
  if ((values.model ? 1 : 0) + (values.fpm ? 1 : 0) !== 1) {
    throw new UsageError("exactly one of --model or --fpm is required");
  }
  if (values.model) {
    if (!values.bindings) {
      throw new UsageError("--model needs --bindings; only --fpm hosts have defaults");
    }
    return { model: await loadModel(values.model), bindings: loadBindings(values.bindings) };
  }
  const ckpt = readCheckpoint(values.fpm!);
  return {
    model: mlpFromCheckpoint(ckpt),
    bindings: values.bindings ? loadBindings(values.bindings) : mlpBindings(ckpt),
  };
}

async function cmdExport(argv: string[]): Promise<number> {
  const { values } = parseArgs({
    args: argv,
    options: {
      model: { type: "string" },
      fpm: { type: "string" },
      data: { type: "string" },
      bindings: { type: "string" },
      out: { type: "string" },
      batch: { type: "string" },
    },
  });
  if (!values.data || !values.out) throw new UsageError("export needs --data and --out");
  const batchSize = values.batch ? Number(values.batch) : 256;
  if (!Number.isInteger(batchSize) || batchSize < 1) {
    throw new UsageError(`--batch must be a positive integer, got ${values.batch}`);
  }
  const host = await loadHost(values);
  const data = readLabeledCsv(values.data);
  mkdirSync(values.out, { recursive: true });
  const result = exportDumps(host.model, data, host.bindings, values.out, { batchSize });
  console.log(
    JSON.stringify({
      command: "export",
      out: values.out,
      samples: data.sampleCount,
      layers: result.layerIds,
      files: result.paths.length,
    })
  );
  return 0;
}

async function cmdApply(argv: string[]): Promise<number> {
  const { values } = parseArgs({
    args: argv,
    options: {
      model: { type: "string" },
      fpm: { type: "string" },
      plan: { type: "string" },
      bindings: { type: "string" },
      out: { type: "string" },
    },
  });
  if (!values.plan || !values.out) throw new UsageError("apply needs --plan and --out");
  const host = await loadHost(values);
  const plan = readPlan(values.plan);
  const result = applyPlan(host.model, plan, host.bindings);
  await saveModel(result.model, values.out);
  console.log(
    JSON.stringify({
      command: "apply",
      out: values.out,
      params_before: result.paramsBefore,
      params_after: result.paramsAfter,
      realized_rate: result.realizedRate,
    })
  );
  return 0;
}

export async function main(argv: string[]): Promise<number> {
  try {
    const [cmd, ...rest] = argv;
    if (cmd === "export") return await cmdExport(rest);
    if (cmd === "apply") return await cmdApply(rest);
    throw new UsageError(USAGE);
  } catch (err) {
    if (err instanceof UsageError) {
      console.error(err.message);
      return 2;
    }
    if (err instanceof DumpFormatError || (err as NodeJS.ErrnoException)?.code === "ENOENT") {
      console.error(`error: ${(err as Error).message}`);
      return 2;
    }
    if (err instanceof BridgeContractError) {
      console.error(`error: ${err.message}`);
      return 3;
    }
    if (err instanceof Error && err.constructor.name === "TypeError" && /option/i.test(err.message)) {
      console.error(err.message);
      return 2;
    }
    console.error(err instanceof Error ? (err.stack ?? err.message) : String(err));
    return 1;
  }
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("cli.js") || entry.endsWith("cli.ts")) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
