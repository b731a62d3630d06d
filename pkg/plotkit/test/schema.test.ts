import { describe, expect, it } from "vitest";
import { readFileSync, readdirSync } from "fs";
import * as path from "path";

import { parseManifest, parseTrace, TraceSchemaError, TRACE_COLUMNS } from "../src/schema.js";

const FIXTURES = path.join(__dirname, "fixtures");
const MANIFEST = path.join(FIXTURES, "demo", "polytope", "manifest.json");

const HEADER = TRACE_COLUMNS.join(",");

describe("trace parsing", () => {
  it("parses every fixture trace from the real benchmark run", () => {
    const manifest = parseManifest(readFileSync(MANIFEST, "utf8"));
    expect(manifest.runs.length).toBe(10);
    for (const run of manifest.runs) {
      expect(run.trace).toBeTruthy();
      const tracePath = path.join(FIXTURES, "demo", run.trace as string);
      const rows = parseTrace(readFileSync(tracePath, "utf8"), tracePath);
      expect(rows.length).toBeGreaterThan(1);
      expect(rows[0].oracle_calls).toBe(0);
    }
  });

  it("rejects a wrong header", () => {
    expect(() => parseTrace("a,b,c\n1,2,3\n")).toThrow(TraceSchemaError);
  });

  it("rejects non-increasing oracle calls", () => {
    const csv = `${HEADER}\n0,0,1,1,1,1,0.5,0.1,3,0.0\n1,0,1,1,1,1,0.4,0.1,3,0.1\n`;
    expect(() => parseTrace(csv)).toThrow(/strictly increasing/);
  });

  it("rejects a non-finite objective", () => {
    const csv = `${HEADER}\n0,0,1,1,1,nan,0.5,0.1,0,0.0\n`;
    expect(() => parseTrace(csv)).toThrow(/non-finite/);
  });

  it("rejects garbage cells", () => {
    const csv = `${HEADER}\n0,0,1,1,1,1,abc,0.1,0,0.0\n`;
    expect(() => parseTrace(csv)).toThrow(/not numeric/);
  });

  it("rejects out-of-order iteration counters", () => {
    const csv = `${HEADER}\n0,0,1,1,1,1,0.5,0.1,0,0.0\n2,0,1,1,1,1,0.4,0.1,1,0.1\n`;
    expect(() => parseTrace(csv)).toThrow(/iteration counter/);
  });

  it("rejects a manifest without runs", () => {
    expect(() => parseManifest("{}")).toThrow(TraceSchemaError);
    expect(() => parseManifest("not json")).toThrow(TraceSchemaError);
  });
});
