/**
 * Trace CSV and manifest JSON parsing with schema validation.
 *
 * The trace schema mirrors the solver side exactly: a fixed column order,
 * finite residual/objective columns, and strictly increasing cumulative
 * oracle calls. Anything else is rejected.
 */

export const TRACE_COLUMNS = [
  "k",
  "j",
  "lambda",
  "H",
  "f",
  "F",
  "grad_norm",
  "step_norm",
  "oracle_calls",
  "time_s",
] as const;

export interface TraceRow {
  k: number;
  j: number;
  lambda: number;
  H: number;
  f: number;
  F: number;
  grad_norm: number;
  step_norm: number;
  oracle_calls: number;
  time_s: number;
}

export class TraceSchemaError extends Error {}
export class FigureSpecError extends Error {}

export function parseTrace(csv: string, source = "<trace>"): TraceRow[] {
  const lines = csv.split(/\r?\n/).filter((line) => line.trim().length > 0);
  if (lines.length === 0) {
    throw new TraceSchemaError(`${source}: empty trace file`);
  }
  const header = lines[0].split(",");
  if (header.length !== TRACE_COLUMNS.length || header.some((h, i) => h !== TRACE_COLUMNS[i])) {
    throw new TraceSchemaError(`${source}: unexpected header "${lines[0]}"`);
  }
  const rows: TraceRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== TRACE_COLUMNS.length) {
      throw new TraceSchemaError(`${source}: line ${i + 1} has ${cells.length} cells`);
    }
    const row = {} as Record<string, number>;
    for (let c = 0; c < cells.length; c++) {
      const value = Number(cells[c]);
      if (cells[c].trim() === "" || Number.isNaN(value) && cells[c].trim().toLowerCase() !== "nan") {
        throw new TraceSchemaError(`${source}: line ${i + 1}, column ${TRACE_COLUMNS[c]} is not numeric`);
      }
      row[TRACE_COLUMNS[c]] = value;
    }
    rows.push(row as unknown as TraceRow);
  }
  validateRows(rows, source);
  return rows;
}

export function validateRows(rows: TraceRow[], source = "<trace>"): void {
  if (rows.length === 0) {
    throw new TraceSchemaError(`${source}: no data rows`);
  }
  for (let i = 0; i < rows.length; i++) {
    const row = rows[i];
    if (row.k !== i) {
      throw new TraceSchemaError(`${source}: row ${i} has iteration counter ${row.k}`);
    }
    if (!Number.isFinite(row.grad_norm) || !Number.isFinite(row.F)) {
      throw new TraceSchemaError(`${source}: row ${i} has non-finite residual or objective`);
    }
    if (i > 0) {
      if (row.oracle_calls <= rows[i - 1].oracle_calls) {
        throw new TraceSchemaError(`${source}: oracle_calls not strictly increasing at row ${i}`);
      }
      if (row.time_s < rows[i - 1].time_s) {
        throw new TraceSchemaError(`${source}: time_s decreased at row ${i}`);
      }
    }
  }
}

export interface ManifestRun {
  problem_id: string;
  solver_id: string;
  trace: string | null;
  status: string;
  error: string | null;
  problem?: { fstar?: number | null; [key: string]: unknown };
  [key: string]: unknown;
}

export interface Manifest {
  schema_version: number;
  experiment: string;
  runs: ManifestRun[];
  [key: string]: unknown;
}

export function parseManifest(json: string, source = "<manifest>"): Manifest {
  let raw: unknown;
  try {
    raw = JSON.parse(json);
  } catch (err) {
    throw new TraceSchemaError(`${source}: not valid JSON (${String(err)})`);
  }
  const manifest = raw as Manifest;
  if (typeof manifest !== "object" || manifest === null || !Array.isArray(manifest.runs)) {
    throw new TraceSchemaError(`${source}: manifest must be an object with a runs array`);
  }
  for (const run of manifest.runs) {
    if (typeof run.problem_id !== "string" || typeof run.solver_id !== "string") {
      throw new TraceSchemaError(`${source}: every run needs problem_id and solver_id`);
    }
  }
  return manifest;
}
