#!/usr/bin/env node
/**
 * plotkit <manifest.json> <figurespec.json>
 *
 * Reads a benchmark manifest plus one figure spec (or an array of specs)
 * and writes one SVG per spec entry. Read-only over the benchmark output.
 */

import { readFileSync, writeFileSync, mkdirSync } from "fs";
import * as path from "path";
import { pathToFileURL } from "url";

import { loadSpecs, render } from "./figure.js";
import { FigureSpecError, TraceSchemaError } from "./schema.js";

export function main(argv: string[]): number {
  if (argv.length !== 2) {
    process.stderr.write("usage: plotkit <manifest.json> <figurespec.json>\n");
    return 1;
  }
  const [manifestPath, specPath] = argv;
  try {
    const specs = loadSpecs(readFileSync(specPath, "utf8"), specPath);
    for (const spec of specs) {
      const result = render(spec, manifestPath);
      mkdirSync(path.dirname(path.resolve(result.path)), { recursive: true });
      writeFileSync(result.path, result.svg);
      const notes = result.notes.length ? ` (${result.notes.join("; ")})` : "";
      process.stdout.write(`${result.path}: ${result.seriesCount} series${notes}\n`);
    }
    return 0;
  } catch (err) {
    if (err instanceof FigureSpecError || err instanceof TraceSchemaError) {
      process.stderr.write(`plotkit: ${err.message}\n`);
      return 1;
    }
    if (err instanceof Error && "code" in err) {
      process.stderr.write(`plotkit: ${err.message}\n`);
      return 1;
    }
    throw err;
  }
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}
