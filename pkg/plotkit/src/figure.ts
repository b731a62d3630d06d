/**
 * Figure specs and series extraction.
 *
 * A figure takes one manifest, selects runs by problem/solver id, pulls one
 * (x, y) series per trace, and renders an SVG. Rendering is a pure function
 * of the inputs: no timestamps, no randomness.
 */

import { existsSync, readFileSync } from "fs";
import * as path from "path";

import { FigureSpecError, Manifest, ManifestRun, parseManifest, parseTrace, TraceRow } from "./schema.js";
import { renderSvg, Panel, Series } from "./svg.js";

export type XAxis = "iterations" | "oracle_calls" | "time_s";
export type YAxis = "F_residual" | "grad_norm" | "H";

export interface FigureSpec {
  /** manifest path; the CLI argument takes precedence when both are given */
  manifest?: string;
  x_axis: XAxis;
  y_axis: YAxis | "F-residual";
  log_x?: boolean;
  log_y?: boolean;
  /** select by problem id; default: all problems in the manifest */
  problems?: string[];
  /** select by solver id; default: all solvers */
  solvers?: string[];
  /** one panel per series instead of one shared panel */
  facet?: boolean;
  /** when false, a missing optimum value for F_residual is an error instead
   *  of falling back to the min-over-traces baseline */
  allow_baseline_fallback?: boolean;
  title?: string;
  out: string;
}

export interface RenderResult {
  path: string;
  seriesCount: number;
  notes: string[];
  svg: string;
}

const X_AXES: XAxis[] = ["iterations", "oracle_calls", "time_s"];

function normalizeYAxis(y: FigureSpec["y_axis"]): YAxis {
  if (y === "F-residual") return "F_residual";
  if (y === "F_residual" || y === "grad_norm" || y === "H") return y;
  throw new FigureSpecError(`unknown y_axis ${JSON.stringify(y)}`);
}

export function loadSpecs(specJson: string, source = "<figurespec>"): FigureSpec[] {
  let raw: unknown;
  try {
    raw = JSON.parse(specJson);
  } catch (err) {
    throw new FigureSpecError(`${source}: not valid JSON (${String(err)})`);
  }
  const list = Array.isArray(raw) ? raw : [raw];
  return list.map((entry, i) => {
    const spec = entry as FigureSpec;
    if (typeof spec !== "object" || spec === null) {
      throw new FigureSpecError(`${source}[${i}]: spec must be an object`);
    }
    if (!X_AXES.includes(spec.x_axis)) {
      throw new FigureSpecError(`${source}[${i}]: unknown x_axis ${JSON.stringify(spec.x_axis)}`);
    }
    normalizeYAxis(spec.y_axis);
    if (typeof spec.out !== "string" || spec.out.length === 0) {
      throw new FigureSpecError(`${source}[${i}]: missing output path`);
    }
    return spec;
  });
}

/** Trace paths in a manifest are relative to the experiment output root. */
export function resolveTracePath(manifestPath: string, rel: string): string {
  const near = path.resolve(path.dirname(manifestPath), rel);
  if (existsSync(near)) return near;
  return path.resolve(path.dirname(manifestPath), "..", rel);
}

interface LoadedRun {
  run: ManifestRun;
  rows: TraceRow[];
}

function selectRuns(manifest: Manifest, manifestPath: string, spec: FigureSpec): LoadedRun[] {
  const loaded: LoadedRun[] = [];
  for (const run of manifest.runs) {
    if (spec.problems && !spec.problems.includes(run.problem_id)) continue;
    if (spec.solvers && !spec.solvers.includes(run.solver_id)) continue;
    if (!run.trace) continue;
    const tracePath = resolveTracePath(manifestPath, run.trace);
    const rows = parseTrace(readFileSync(tracePath, "utf8"), tracePath);
    loaded.push({ run, rows });
  }
  return loaded;
}

function xValue(row: TraceRow, axis: XAxis): number {
  switch (axis) {
    case "iterations":
      return row.k;
    case "oracle_calls":
      return row.oracle_calls;
    case "time_s":
      return row.time_s;
  }
}

/**
 * Baseline for the objective residual: the stored optimum when the problem
 * metadata carries one, otherwise the minimum objective seen across the
 * problem's selected traces minus a tiny guard (noted in the legend).
 */
function residualBaselines(
  runs: LoadedRun[],
  notes: string[],
  allowFallback: boolean
): Map<string, number> {
  const baselines = new Map<string, number>();
  const byProblem = new Map<string, LoadedRun[]>();
  for (const item of runs) {
    const list = byProblem.get(item.run.problem_id) ?? [];
    list.push(item);
    byProblem.set(item.run.problem_id, list);
  }
  for (const [pid, items] of byProblem) {
    const fstar = items[0].run.problem?.fstar;
    if (typeof fstar === "number" && Number.isFinite(fstar)) {
      baselines.set(pid, fstar);
    } else if (allowFallback) {
      let minSeen = Infinity;
      for (const item of items) {
        for (const row of item.rows) minSeen = Math.min(minSeen, row.F);
      }
      baselines.set(pid, minSeen - 1e-16);
      notes.push(`${pid}: baseline = min over traces - 1e-16`);
    } else {
      throw new FigureSpecError(
        `${pid}: no stored optimum value and the baseline fallback is disabled`
      );
    }
  }
  return baselines;
}

const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#e377c2",
  "#17becf",
  "#bcbd22",
  "#7f7f7f",
];

function fnv1a(text: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193) >>> 0;
  }
  return hash;
}

/**
 * Deterministic styling keyed by solver id: each id hashes to a palette
 * slot; collisions within one figure resolve by linear probing over the ids
 * in sorted order, so a rerender (or a reordered manifest) cannot change
 * the assignment.
 */
function colorAssignment(solverIds: string[]): Map<string, string> {
  const taken = new Set<number>();
  const assigned = new Map<string, string>();
  for (const id of [...new Set(solverIds)].sort()) {
    let slot = fnv1a(id) % PALETTE.length;
    for (let probe = 0; probe < PALETTE.length && taken.has(slot); probe++) {
      slot = (slot + 1) % PALETTE.length;
    }
    taken.add(slot);
    assigned.set(id, PALETTE[slot]);
  }
  return assigned;
}

export function buildSeries(manifest: Manifest, manifestPath: string, spec: FigureSpec): { series: Series[]; notes: string[] } {
  const notes: string[] = [];
  const yAxis = normalizeYAxis(spec.y_axis);
  const runs = selectRuns(manifest, manifestPath, spec);
  const baselines =
    yAxis === "F_residual"
      ? residualBaselines(runs, notes, spec.allow_baseline_fallback !== false)
      : new Map<string, number>();
  const multiProblem = new Set(runs.map((r) => r.run.problem_id)).size > 1;
  const colors = colorAssignment(runs.map((r) => r.run.solver_id));

  const series: Series[] = [];
  for (const { run, rows } of runs) {
    const points: Array<[number, number]> = [];
    for (const row of rows) {
      const x = xValue(row, spec.x_axis);
      let y: number;
      if (yAxis === "grad_norm") y = row.grad_norm;
      else if (yAxis === "H") y = row.H;
      else y = row.F - (baselines.get(run.problem_id) ?? 0);
      if (!Number.isFinite(x) || !Number.isFinite(y)) continue;
      if (spec.log_x && x <= 0) continue;
      if (spec.log_y && y <= 0) continue;
      points.push([x, y]);
    }
    const label = multiProblem ? `${run.problem_id}/${run.solver_id}` : run.solver_id;
    if (points.length === 0) {
      notes.push(`skipped empty series ${label}`);
      continue;
    }
    series.push({ label, color: colors.get(run.solver_id) ?? PALETTE[0], points });
  }
  return { series, notes };
}

export function render(spec: FigureSpec, manifestPathArg?: string): RenderResult {
  const manifestPath = manifestPathArg ?? spec.manifest;
  if (!manifestPath) {
    throw new FigureSpecError("no manifest path given (neither CLI argument nor spec field)");
  }
  const manifest = parseManifest(readFileSync(manifestPath, "utf8"), manifestPath);
  const { series, notes } = buildSeries(manifest, manifestPath, spec);
  if (series.length === 0) {
    throw new FigureSpecError(`${spec.out}: no series left after selection`);
  }
  const yAxis = normalizeYAxis(spec.y_axis);
  const axisLabels = {
    x: spec.x_axis,
    y: yAxis === "F_residual" ? "objective residual" : yAxis,
  };
  const panels: Panel[] = spec.facet
    ? series.map((s) => ({ series: [s], title: s.label, ...axisLabels }))
    : [{ series, title: spec.title ?? "", ...axisLabels }];
  const svg = renderSvg(panels, {
    logX: Boolean(spec.log_x),
    logY: Boolean(spec.log_y),
    title: spec.title ?? "",
    notes,
  });
  return { path: spec.out, seriesCount: series.length, notes: [...notes], svg };
}
