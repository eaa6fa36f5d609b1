/** Labeled CSV: header row, one column named "label" holding the class
 * index, every other column a numeric feature. Matches the dataset file
 * convention of the scoring CLI. */

import { readFileSync, writeFileSync } from "node:fs";

import { DumpFormatError } from "./errors.js";

export interface LabeledData {
  /** Row-major [n, featureCount]. */
  features: Float64Array;
  labels: Int32Array;
  sampleCount: number;
  featureCount: number;
}

export function readLabeledCsv(path: string): LabeledData {
  const lines = readFileSync(path, "utf8").split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length < 2) throw new DumpFormatError(`${path}: no data rows`);
  const header = lines[0].split(",").map((c) => c.trim());
  const labelCol = header.indexOf("label");
  if (labelCol < 0) throw new DumpFormatError(`${path}: no column named 'label'`);
  const n = lines.length - 1;
  const p = header.length - 1;
  const features = new Float64Array(n * p);
  const labels = new Int32Array(n);
  for (let i = 0; i < n; i++) {
    const cells = lines[i + 1].split(",");
    if (cells.length !== header.length) {
      throw new DumpFormatError(
        `${path}: row ${i + 1} has ${cells.length} columns, header has ${header.length}`
      );
    }
    let f = 0;
    for (let c = 0; c < cells.length; c++) {
      const value = Number(cells[c]);
      if (!Number.isFinite(value)) {
        throw new DumpFormatError(`${path}: non-numeric cell ${cells[c]!.trim()} in row ${i + 1}`);
      }
      if (c === labelCol) {
        if (!Number.isInteger(value) || value < 0) {
          throw new DumpFormatError(`${path}: bad class label ${cells[c]!.trim()} in row ${i + 1}`);
        }
        labels[i] = value;
      } else {
        features[i * p + f] = value;
        f += 1;
      }
    }
  }
  return { features, labels, sampleCount: n, featureCount: p };
}

export function writeLabeledCsv(path: string, data: LabeledData): void {
  const p = data.featureCount;
  const rows: string[] = [];
  rows.push([...Array.from({ length: p }, (_, i) => `f${i}`), "label"].join(","));
  for (let i = 0; i < data.sampleCount; i++) {
    const cells: string[] = [];
    for (let c = 0; c < p; c++) cells.push(data.features[i * p + c].toPrecision(17));
    cells.push(String(data.labels[i]));
    rows.push(cells.join(","));
  }
  writeFileSync(path, rows.join("\n") + "\n");
}
