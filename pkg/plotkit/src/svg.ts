/**
 * Minimal deterministic SVG line charts: axes, decade or nice-number ticks,
 * one polyline per series, a legend, and optional footnotes. String building
 * only, so identical inputs yield identical bytes.
 */

export interface Series {
  label: string;
  color: string;
  points: Array<[number, number]>;
}

export interface Panel {
  title: string;
  x: string;
  y: string;
  series: Series[];
}

export interface RenderOptions {
  logX: boolean;
  logY: boolean;
  title: string;
  notes: string[];
}

const PANEL_W = 640;
const PANEL_H = 420;
const MARGIN = { left: 78, right: 16, top: 34, bottom: 48 };

function fmt(value: number): string {
  if (value === 0) return "0";
  const abs = Math.abs(value);
  if (abs >= 1e4 || abs < 1e-3) return value.toExponential(0).replace("+", "");
  return Number(value.toPrecision(4)).toString();
}

function niceTicks(lo: number, hi: number, count = 5): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = (span / count) / step;
  const factor = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const nice = step * factor;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / nice) * nice; v <= hi + 1e-12 * span; v += nice) {
    ticks.push(v);
  }
  return ticks;
}

function decadeTicks(lo: number, hi: number): number[] {
  const first = Math.ceil(Math.log10(lo));
  const last = Math.floor(Math.log10(hi));
  const stride = Math.max(1, Math.ceil((last - first + 1) / 9));
  const ticks: number[] = [];
  for (let e = first; e <= last; e += stride) {
    ticks.push(Math.pow(10, e));
  }
  if (ticks.length === 0) ticks.push(lo, hi);
  return ticks;
}

function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (lo === hi) {
    const pad = lo === 0 ? 1 : Math.abs(lo) * 0.5;
    return [lo - pad, hi + pad];
  }
  return [lo, hi];
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function renderPanel(panel: Panel, opts: RenderOptions, ox: number, oy: number): string {
  const xs = panel.series.flatMap((s) => s.points.map((p) => p[0]));
  const ys = panel.series.flatMap((s) => s.points.map((p) => p[1]));
  const [xLo, xHi] = extent(opts.logX ? xs.map(Math.log10) : xs);
  const [yLo, yHi] = extent(opts.logY ? ys.map(Math.log10) : ys);
  const plotW = PANEL_W - MARGIN.left - MARGIN.right;
  const plotH = PANEL_H - MARGIN.top - MARGIN.bottom;

  const px = (x: number) => {
    const t = opts.logX ? Math.log10(x) : x;
    return ox + MARGIN.left + ((t - xLo) / (xHi - xLo)) * plotW;
  };
  const py = (y: number) => {
    const t = opts.logY ? Math.log10(y) : y;
    return oy + MARGIN.top + plotH - ((t - yLo) / (yHi - yLo)) * plotH;
  };

  const parts: string[] = [];
  parts.push(
    `<rect x="${ox + MARGIN.left}" y="${oy + MARGIN.top}" width="${plotW}" height="${plotH}" fill="none" stroke="#333" stroke-width="1"/>`
  );
  if (panel.title) {
    parts.push(
      `<text x="${ox + PANEL_W / 2}" y="${oy + 20}" text-anchor="middle" font-size="14" font-family="sans-serif">${esc(panel.title)}</text>`
    );
  }

  const xTicks = opts.logX
    ? decadeTicks(Math.pow(10, xLo), Math.pow(10, xHi))
    : niceTicks(xLo, xHi, 6);
  for (const tick of xTicks) {
    const gx = px(tick);
    if (gx < ox + MARGIN.left - 0.5 || gx > ox + PANEL_W - MARGIN.right + 0.5) continue;
    parts.push(`<line x1="${gx.toFixed(2)}" y1="${oy + MARGIN.top}" x2="${gx.toFixed(2)}" y2="${oy + MARGIN.top + plotH}" stroke="#ddd" stroke-width="0.5"/>`);
    parts.push(
      `<text x="${gx.toFixed(2)}" y="${oy + MARGIN.top + plotH + 16}" text-anchor="middle" font-size="11" font-family="sans-serif">${fmt(tick)}</text>`
    );
  }
  const yTicks = opts.logY
    ? decadeTicks(Math.pow(10, yLo), Math.pow(10, yHi))
    : niceTicks(yLo, yHi, 6);
  for (const tick of yTicks) {
    const gy = py(tick);
    if (gy < oy + MARGIN.top - 0.5 || gy > oy + PANEL_H - MARGIN.bottom + 0.5) continue;
    parts.push(`<line x1="${ox + MARGIN.left}" y1="${gy.toFixed(2)}" x2="${ox + MARGIN.left + plotW}" y2="${gy.toFixed(2)}" stroke="#ddd" stroke-width="0.5"/>`);
    parts.push(
      `<text x="${ox + MARGIN.left - 6}" y="${(gy + 4).toFixed(2)}" text-anchor="end" font-size="11" font-family="sans-serif">${fmt(tick)}</text>`
    );
  }
  parts.push(
    `<text x="${ox + MARGIN.left + plotW / 2}" y="${oy + PANEL_H - 10}" text-anchor="middle" font-size="12" font-family="sans-serif">${esc(panel.x)}</text>`
  );
  parts.push(
    `<text x="${ox + 16}" y="${oy + MARGIN.top + plotH / 2}" text-anchor="middle" font-size="12" font-family="sans-serif" transform="rotate(-90 ${ox + 16} ${oy + MARGIN.top + plotH / 2})">${esc(panel.y)}</text>`
  );

  for (const series of panel.series) {
    const coords = series.points
      .map(([x, y]) => `${px(x).toFixed(2)},${py(y).toFixed(2)}`)
      .join(" ");
    parts.push(
      `<polyline fill="none" stroke="${series.color}" stroke-width="1.6" points="${coords}"/>`
    );
  }

  // legend in the top-right corner of the plot area
  let ly = oy + MARGIN.top + 14;
  for (const series of panel.series) {
    const lx = ox + MARGIN.left + plotW - 150;
    parts.push(`<line x1="${lx}" y1="${ly - 4}" x2="${lx + 24}" y2="${ly - 4}" stroke="${series.color}" stroke-width="2"/>`);
    parts.push(
      `<text x="${lx + 30}" y="${ly}" font-size="11" font-family="sans-serif">${esc(series.label)}</text>`
    );
    ly += 16;
  }
  return parts.join("\n");
}

export function renderSvg(panels: Panel[], opts: RenderOptions): string {
  const cols = panels.length > 1 ? Math.min(2, panels.length) : 1;
  const rows = Math.ceil(panels.length / cols);
  const noteLines = opts.notes.length;
  const width = cols * PANEL_W;
  const height = rows * PANEL_H + (noteLines ? 14 * noteLines + 8 : 0);
  const body: string[] = [];
  panels.forEach((panel, i) => {
    const ox = (i % cols) * PANEL_W;
    const oy = Math.floor(i / cols) * PANEL_H;
    body.push(renderPanel(panel, opts, ox, oy));
  });
  opts.notes.forEach((note, i) => {
    body.push(
      `<text x="8" y="${rows * PANEL_H + 14 * (i + 1)}" font-size="10" font-family="sans-serif" fill="#555">note: ${esc(note)}</text>`
    );
  });
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" width="${width}" height="${height}">`,
    `<rect x="0" y="0" width="${width}" height="${height}" fill="white"/>`,
    ...body,
    `</svg>`,
    ``,
  ].join("\n");
}
