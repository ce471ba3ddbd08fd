/**
 * In-memory client for the lidarclust toolkit.
 *
 * `cluster` turns a point buffer plus per-point semantic classes into
 * panoptic label words; `evaluate` scores predicted labels against ground
 * truth. Both shell out to the `lidarclust` CLI with the exact binary file
 * formats it consumes, so results match the command line bit for bit.
 */

import { readFile, writeFile } from "node:fs/promises";
import { join } from "node:path";

import {
  decodeLabels,
  encodeLabels,
  encodeScan,
  packLabels,
  pointCount,
} from "./formats.js";
import { cliBinary, parseKeyValues, runCli, withWorkDir } from "./runner.js";

export {
  decodeLabels,
  decodeScan,
  encodeLabels,
  encodeScan,
  packLabels,
  splitLabels,
} from "./formats.js";
export { CliError, parseKeyValues } from "./runner.js";

export const ALGORITHMS = ["euclidean", "supervoxel", "depth", "slr"] as const;
export type Algorithm = (typeof ALGORITHMS)[number];

export interface ProjectionOptions {
  rows?: number;
  cols?: number;
  fov_up_deg?: number;
  fov_down_deg?: number;
}

export interface ClusterOptions {
  /** Algorithm parameter overrides, validated by the CLI's config schema. */
  params?: Record<string, number | boolean>;
  /** Range-image geometry for the projection-based algorithms. */
  projection?: ProjectionOptions;
  /** Cluster all thing points jointly instead of per class. */
  crossClass?: boolean;
  /** Replace each cluster's semantic labels with its majority class. */
  majorityVote?: boolean;
  /** Path to a class list file; defaults to the CLI's built-in classes. */
  classConfig?: string;
  /** CLI executable; defaults to `lidarclust` (or LIDARCLUST_BIN). */
  bin?: string;
}

export interface EvaluateOptions {
  /** Ground-truth instances smaller than this are ignored (CLI default 50). */
  minPoints?: number;
  classConfig?: string;
  bin?: string;
}

function configDocument(algorithm: Algorithm, opts: ClusterOptions): string {
  // JSON is a YAML subset, so the CLI's config loader reads this as-is
  const doc: Record<string, unknown> = {};
  if (opts.params && Object.keys(opts.params).length > 0) doc[algorithm] = opts.params;
  if (opts.projection && Object.keys(opts.projection).length > 0) {
    doc.projection = opts.projection;
  }
  return JSON.stringify(doc);
}

/**
 * Cluster one frame into panoptic labels.
 *
 * @param points flat (x, y, z, remission) float buffer, 4 values per point
 * @param semantics per-point semantic class ids (only the low 16 bits of
 *   each value are used, so packed label words are accepted too)
 * @returns packed label words: predicted class low 16 bits, instance id
 *   high 16 bits, exactly as the CLI writes them
 */
export async function cluster(
  points: Float32Array,
  semantics: Uint32Array | Uint16Array,
  algorithm: Algorithm,
  opts: ClusterOptions = {}
): Promise<Uint32Array> {
  if (!ALGORITHMS.includes(algorithm)) {
    throw new RangeError(`unknown algorithm ${JSON.stringify(algorithm)}`);
  }
  const n = pointCount(points);
  if (semantics.length !== n) {
    throw new RangeError(`semantics length ${semantics.length} does not match ${n} points`);
  }
  return withWorkDir(async (dir) => {
    const scanPath = join(dir, "scan.bin");
    const semPath = join(dir, "semantics.label");
    const outPath = join(dir, "clusters.label");
    await writeFile(scanPath, encodeScan(points));
    const words =
      semantics instanceof Uint32Array ? semantics : packLabels(semantics);
    await writeFile(semPath, encodeLabels(words));

    const args = [
      "cluster",
      "--scan", scanPath,
      "--semantics", semPath,
      "--out", outPath,
      "--algorithm", algorithm,
    ];
    const config = configDocument(algorithm, opts);
    if (config !== "{}") {
      const cfgPath = join(dir, "config.yaml");
      await writeFile(cfgPath, config);
      args.push("--config", cfgPath);
    }
    if (opts.classConfig) args.push("--class-config", opts.classConfig);
    if (opts.crossClass) args.push("--cross-class");
    if (opts.majorityVote) args.push("--majority-vote");

    await runCli(cliBinary(opts.bin), args);
    return decodeLabels(await readFile(outPath));
  });
}

/**
 * Score predicted panoptic labels against ground truth.
 *
 * Both arguments are packed label words of equal length. Returns the CLI's
 * key-value report as a map, e.g. `{ PQ: 100.0, PQ_th: 100.0, mIoU: 100.0 }`.
 */
export async function evaluate(
  gt: Uint32Array,
  pred: Uint32Array,
  opts: EvaluateOptions = {}
): Promise<Record<string, number>> {
  if (gt.length !== pred.length) {
    throw new RangeError(`label lengths differ: ${gt.length} vs ${pred.length}`);
  }
  return withWorkDir(async (dir) => {
    const gtPath = join(dir, "gt.label");
    const predPath = join(dir, "pred.label");
    const reportPath = join(dir, "report.txt");
    await writeFile(gtPath, encodeLabels(gt));
    await writeFile(predPath, encodeLabels(pred));

    const args = ["evaluate", "--gt", gtPath, "--pred", predPath, "--out", reportPath];
    if (opts.minPoints !== undefined) args.push("--min-points", String(opts.minPoints));
    if (opts.classConfig) args.push("--class-config", opts.classConfig);

    await runCli(cliBinary(opts.bin), args);
    return parseKeyValues(await readFile(reportPath, "utf8"));
  });
}
