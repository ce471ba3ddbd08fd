/**
 * Subprocess plumbing for the lidarclust command line tool.
 *
 * Every operation round-trips through temporary files in the CLI's binary
 * formats; nothing here links against the Python package directly, so the
 * two components can only disagree if the file formats do.
 */

import { execFile } from "node:child_process";
import { mkdtemp, rm } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";

/** Executable name; override with the LIDARCLUST_BIN environment variable. */
export function cliBinary(override?: string): string {
  return override ?? process.env.LIDARCLUST_BIN ?? "lidarclust";
}

export interface CliResult {
  stdout: string;
  stderr: string;
}

export class CliError extends Error {
  constructor(message: string, public readonly stderr: string) {
    super(message);
    this.name = "CliError";
  }
}

export function runCli(bin: string, args: string[]): Promise<CliResult> {
  return new Promise((resolve, reject) => {
    execFile(bin, args, { maxBuffer: 64 * 1024 * 1024 }, (err, stdout, stderr) => {
      if (err) {
        // surface the CLI's own diagnostic (it names the offending
        // parameter on config errors) rather than the generic exit status
        const detail = (stderr || stdout || err.message).trim();
        const tail = detail.split("\n").slice(-3).join("\n");
        reject(new CliError(`lidarclust ${args[0]} failed: ${tail}`, stderr));
        return;
      }
      resolve({ stdout, stderr });
    });
  });
}

/** Run fn with a private temporary directory, removed afterwards. */
export async function withWorkDir<T>(fn: (dir: string) => Promise<T>): Promise<T> {
  const dir = await mkdtemp(join(tmpdir(), "lidarclust-"));
  try {
    return await fn(dir);
  } finally {
    await rm(dir, { recursive: true, force: true });
  }
}

/** Parse the CLI's key-value report ("PQ 57.2" per line) into numbers. */
export function parseKeyValues(text: string): Record<string, number> {
  const out: Record<string, number> = {};
  for (const line of text.split("\n")) {
    const trimmed = line.trim();
    if (!trimmed || trimmed.startsWith("#")) continue;
    const space = trimmed.indexOf(" ");
    if (space < 0) continue;
    const value = Number(trimmed.slice(space + 1));
    if (Number.isNaN(value)) continue;
    out[trimmed.slice(0, space)] = value;
  }
  return out;
}
