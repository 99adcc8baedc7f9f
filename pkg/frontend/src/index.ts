/**
 * Node bindings for the loghmm command-line interface.
 *
 * Fit, decode, scoring, and model I/O on plain numeric arrays. The core is
 * never linked: every call shells out to the CLI and exchanges data through
 * its documented JSON and delimited-text formats, so results are exactly the
 * core's results. Observation arrays are copied into temp files per call.
 *
 * The Python interpreter is resolved from LOGHMM_PYTHON (default "python3")
 * and must have the loghmm package importable.
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

/** Mirrors the core package version. */
export const VERSION = "0.1.0";

export type Sequence = readonly number[];

export interface EmissionDocument {
  family: string;
  params: Record<string, number>;
}

export interface ModelDocument {
  schema_version: string;
  num_states: number;
  initial: number[];
  transitions: number[][];
  emissions: EmissionDocument[];
}

export interface FitOptions {
  states?: number;
  families?: string | readonly string[];
  seedModel?: ModelHandle;
  maxIterations?: number;
  tolerance?: number;
}

export interface FitReport {
  iterations: number;
  converged: boolean;
  logLikelihood: number;
  aic: number;
  bic: number;
  aicc: number | null;
  wallTimeS: number;
}

export interface ScoreReport {
  logLikelihood: number;
  numParams: number;
  numObs: number;
  aic: number;
  bic: number;
  aicc: number | null;
}

export type DecodeMethod = "viterbi" | "posterior";

/** Immutable wrapper around a model document produced or accepted by the core. */
export class ModelHandle {
  readonly text: string;
  readonly document: ModelDocument;

  constructor(text: string) {
    this.text = text;
    this.document = JSON.parse(text) as ModelDocument;
  }

  get numStates(): number {
    return this.document.num_states;
  }

  families(): string[] {
    return this.document.emissions.map((e) => e.family);
  }

  params(state: number): Record<string, number> {
    const emission = this.document.emissions[state];
    if (!emission) {
      throw new Error(`state ${state} out of range (model has ${this.numStates})`);
    }
    return { ...emission.params };
  }
}

function pythonExecutable(): string {
  return process.env.LOGHMM_PYTHON ?? "python3";
}

function runCli(args: string[], okCodes: readonly number[] = [0]): {
  stdout: string;
  status: number;
} {
  const res = spawnSync(pythonExecutable(), ["-m", "loghmm", ...args], {
    encoding: "utf8",
    maxBuffer: 64 * 1024 * 1024,
  });
  if (res.error) {
    throw new Error(`failed to launch the loghmm CLI: ${res.error.message}`);
  }
  const status = res.status ?? -1;
  if (!okCodes.includes(status)) {
    const detail = (res.stderr || res.stdout || "").trim();
    throw new Error(detail.replace(/^error:\s*/, "") || `loghmm exited with code ${status}`);
  }
  return { stdout: res.stdout, status };
}

function asSequences(observations: Sequence | readonly Sequence[]): readonly Sequence[] {
  if (observations.length === 0) {
    throw new Error("observations must be non-empty");
  }
  return Array.isArray(observations[0])
    ? (observations as readonly Sequence[])
    : [observations as Sequence];
}

/** Serialize sequences in the CLI's text format: one value per line, blank
 * lines between sequences. Number.toString() round-trips doubles exactly. */
function sequencesToText(sequences: readonly Sequence[]): string {
  return sequences
    .map((seq) => {
      if (seq.length === 0) throw new Error("sequences must be non-empty");
      return seq.map((v) => {
        if (typeof v !== "number" || Number.isNaN(v)) {
          throw new Error("observations must be numeric and not NaN");
        }
        return v.toString();
      }).join("\n");
    })
    .join("\n\n") + "\n";
}

function withTempDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "loghmm-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

interface RawFitPayload {
  iterations: number;
  converged: boolean;
  log_likelihood: number;
  aic: number;
  bic: number;
  aicc: number | null;
  wall_time_s: number;
}

interface RawScorePayload {
  log_likelihood: number;
  num_params: number;
  num_obs: number;
  aic: number;
  bic: number;
  aicc: number | null;
}

/** Train a model on one or more observation sequences. */
export function fit(
  observations: Sequence | readonly Sequence[],
  options: FitOptions,
): { model: ModelHandle; report: FitReport } {
  const sequences = asSequences(observations);
  return withTempDir((dir) => {
    const dataPath = join(dir, "data.txt");
    const modelPath = join(dir, "model.json");
    writeFileSync(dataPath, sequencesToText(sequences));
    const args = ["fit", "--data", dataPath, "--out", modelPath, "--format", "json"];
    if (options.seedModel) {
      const seedPath = join(dir, "seed.json");
      writeFileSync(seedPath, options.seedModel.text);
      args.push("--seed-model", seedPath);
    } else {
      if (!options.states || !options.families) {
        throw new Error("fit needs either seedModel or both states and families");
      }
      const families = Array.isArray(options.families)
        ? options.families.join(",")
        : (options.families as string);
      args.push("--states", String(options.states), "--family", families);
    }
    if (options.maxIterations !== undefined) {
      args.push("--max-iter", String(options.maxIterations));
    }
    if (options.tolerance !== undefined) {
      args.push("--tol", options.tolerance.toString());
    }
    // exit code 2 means the iteration cap was reached; the fit is still valid
    const { stdout } = runCli(args, [0, 2]);
    const payload = JSON.parse(stdout) as RawFitPayload;
    return {
      model: new ModelHandle(readFileSync(modelPath, "utf8")),
      report: {
        iterations: payload.iterations,
        converged: payload.converged,
        logLikelihood: payload.log_likelihood,
        aic: payload.aic,
        bic: payload.bic,
        aicc: payload.aicc,
        wallTimeS: payload.wall_time_s,
      },
    };
  });
}

/** State path(s) for the observations; shape mirrors the input nesting. */
export function decode(
  model: ModelHandle,
  observations: Sequence,
  method?: DecodeMethod,
): number[];
export function decode(
  model: ModelHandle,
  observations: readonly Sequence[],
  method?: DecodeMethod,
): number[][];
export function decode(
  model: ModelHandle,
  observations: Sequence | readonly Sequence[],
  method: DecodeMethod = "viterbi",
): number[] | number[][] {
  const nested = Array.isArray(observations[0]);
  const sequences = asSequences(observations);
  const paths = withTempDir((dir) => {
    const dataPath = join(dir, "data.txt");
    const modelPath = join(dir, "model.json");
    writeFileSync(dataPath, sequencesToText(sequences));
    writeFileSync(modelPath, model.text);
    const { stdout } = runCli([
      "decode", "--model", modelPath, "--data", dataPath, "--method", method,
    ]);
    return stdout
      .replace(/\n$/, "")
      .split("\n\n")
      .map((block) => block.split("\n").map((line) => Number.parseInt(line, 10)));
  });
  if (paths.length !== sequences.length) {
    throw new Error(`expected ${sequences.length} decoded paths, got ${paths.length}`);
  }
  paths.forEach((path, i) => {
    if (path.length !== sequences[i].length) {
      throw new Error(`decoded path ${i} has length ${path.length}, expected ${sequences[i].length}`);
    }
  });
  return nested ? paths : paths[0];
}

/** Log-likelihood and information criteria of the model on the observations. */
export function score(
  model: ModelHandle,
  observations: Sequence | readonly Sequence[],
): ScoreReport {
  const sequences = asSequences(observations);
  return withTempDir((dir) => {
    const dataPath = join(dir, "data.txt");
    const modelPath = join(dir, "model.json");
    writeFileSync(dataPath, sequencesToText(sequences));
    writeFileSync(modelPath, model.text);
    const { stdout } = runCli([
      "eval", "--model", modelPath, "--data", dataPath, "--format", "json",
    ]);
    const payload = JSON.parse(stdout) as RawScorePayload;
    return {
      logLikelihood: payload.log_likelihood,
      numParams: payload.num_params,
      numObs: payload.num_obs,
      aic: payload.aic,
      bic: payload.bic,
      aicc: payload.aicc,
    };
  });
}

/** Write the model document; the text is byte-identical to what core wrote. */
export function saveModel(model: ModelHandle, path: string): void {
  writeFileSync(path, model.text);
}

/** Read and validate a model document from disk (validation happens core-side
 * on first use; parsing here catches malformed JSON early). */
export function loadModel(path: string): ModelHandle {
  return new ModelHandle(readFileSync(path, "utf8"));
}
