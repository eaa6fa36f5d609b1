export { DumpFormatError, BridgeContractError } from "./errors.js";
export {
  KIND_ACTIVATIONS,
  KIND_WEIGHT_GRADIENT,
  KIND_BIAS_GRADIENT,
  KIND_WEIGHTS,
  KIND_BIASES,
  readDump,
  writeDump,
  activationDump,
  gradientDump,
  paramDump,
} from "./fpd.js";
export type { Dump, FpdHeader } from "./fpd.js";
export { readCheckpoint, forwardLogits } from "./fpm.js";
export type { Checkpoint } from "./fpm.js";
export { readLabeledCsv, writeLabeledCsv } from "./csv.js";
export type { LabeledData } from "./csv.js";
export { readPlan, planFromJson } from "./plan.js";
export type { PruningPlan, LayerPlan } from "./plan.js";
export { walkChain, ensureBackend } from "./chain.js";
export type { ChainNode } from "./chain.js";
export { loadBindings, resolveBindings } from "./bindings.js";
export type { LayerBinding, BoundLayer } from "./bindings.js";
export { mlpFromCheckpoint, mlpBindings, saveModel, loadModel } from "./hostmodel.js";
export { exportDumps } from "./export.js";
export type { ExportResult } from "./export.js";
export { applyPlan } from "./apply.js";
export type { ApplyResult } from "./apply.js";
