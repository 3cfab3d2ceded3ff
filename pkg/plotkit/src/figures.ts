/**
 * The three figure kinds, rendered with a fixed style so identical
 * inputs yield identical images:
 *
 *   sweep    distance vs eps per observable (log-log), from sweep.csv
 *   moments  moment estimates vs eps, normalized per statistic by the
 *            coarsest-eps value (log-x), from stats.csv
 *   hoelder  increment value and value/sqrt(dt) vs stride (log-log),
 *            from hoelder.csv
 */

import { FigureKind, SchemaError, Table, column, numericColumn, parseCsv } from "./csv.js";
import { BLACK, Canvas, Color, GRAY, LIGHT_GRAY, PALETTE, WHITE } from "./raster.js";

const WIDTH = 800;
const HEIGHT = 560;
const MARGIN = { left: 80, right: 24, top: 40, bottom: 64 } as const;

interface Axis {
  toPixel(value: number): number;
  ticks: { value: number; label: string }[];
}

function formatTick(value: number): string {
  if (value === 0) {
    return "0";
  }
  const exponent = Math.floor(Math.log10(Math.abs(value)));
  if (exponent < -2 || exponent > 3) {
    const mantissa = value / 10 ** exponent;
    const head = Math.abs(mantissa - 1) < 1e-9 ? "1" : mantissa.toPrecision(2);
    return `${head}E${exponent}`;
  }
  return Number(value.toPrecision(3)).toString();
}

function logAxis(min: number, max: number, pixelA: number, pixelB: number): Axis {
  const lo = Math.log10(min);
  const hi = Math.log10(max);
  const span = hi - lo || 1;
  const ticks: { value: number; label: string }[] = [];
  for (let e = Math.ceil(lo - 1e-9); e <= Math.floor(hi + 1e-9); e++) {
    ticks.push({ value: 10 ** e, label: `1E${e}` });
  }
  if (ticks.length > 8) {
    const stride = Math.ceil(ticks.length / 8);
    for (let i = ticks.length - 1; i >= 0; i--) {
      if (i % stride !== 0) {
        ticks.splice(i, 1);
      }
    }
  }
  return {
    toPixel: (v) => pixelA + ((Math.log10(v) - lo) / span) * (pixelB - pixelA),
    ticks,
  };
}

function linearAxis(min: number, max: number, pixelA: number, pixelB: number): Axis {
  const span = max - min || 1;
  const rawStep = span / 5;
  const power = 10 ** Math.floor(Math.log10(rawStep));
  const step = [1, 2, 5, 10].map((m) => m * power).find((s) => span / s <= 6) ?? 10 * power;
  const ticks: { value: number; label: string }[] = [];
  for (let v = Math.ceil(min / step) * step; v <= max + 1e-12 * span; v += step) {
    ticks.push({ value: v, label: formatTick(v) });
  }
  return {
    toPixel: (v) => pixelA + ((v - min) / span) * (pixelB - pixelA),
    ticks,
  };
}

interface Series {
  label: string;
  color: Color;
  points: { x: number; y: number }[];
  dashed?: boolean;
}

function drawFrame(canvas: Canvas, title: string, xLabel: string, yLabel: string, xAxis: Axis, yAxis: Axis): void {
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  for (const tick of xAxis.ticks) {
    const px = xAxis.toPixel(tick.value);
    canvas.line(px, y0, px, y1, LIGHT_GRAY);
    canvas.line(px, y0, px, y0 + 4, BLACK);
    canvas.textCentered(px, y0 + 8, tick.label, BLACK);
  }
  for (const tick of yAxis.ticks) {
    const py = yAxis.toPixel(tick.value);
    canvas.line(x0, py, x1, py, LIGHT_GRAY);
    canvas.line(x0 - 4, py, x0, py, BLACK);
    canvas.text(x0 - 8 - canvas.textWidth(tick.label), py - 3, tick.label, BLACK);
  }
  canvas.line(x0, y0, x1, y0, BLACK);
  canvas.line(x0, y0, x0, y1, BLACK);
  canvas.textCentered((x0 + x1) / 2, 14, title, BLACK, 2);
  canvas.textCentered((x0 + x1) / 2, HEIGHT - 22, xLabel, BLACK);
  canvas.textVertical(14, (y0 + y1) / 2 + canvas.textWidth(yLabel) / 2, yLabel, BLACK);
}

function drawSeries(canvas: Canvas, series: Series[], xAxis: Axis, yAxis: Axis): void {
  for (const s of series) {
    for (let i = 1; i < s.points.length; i++) {
      const a = s.points[i - 1];
      const b = s.points[i];
      if (s.dashed) {
        canvas.dashedLine(xAxis.toPixel(a.x), yAxis.toPixel(a.y), xAxis.toPixel(b.x), yAxis.toPixel(b.y), s.color);
      } else {
        canvas.line(xAxis.toPixel(a.x), yAxis.toPixel(a.y), xAxis.toPixel(b.x), yAxis.toPixel(b.y), s.color, 2);
      }
    }
    if (!s.dashed) {
      for (const p of s.points) {
        canvas.marker(xAxis.toPixel(p.x), yAxis.toPixel(p.y), s.color);
      }
    }
  }
}

function drawLegend(canvas: Canvas, series: Series[]): void {
  const entries = series.filter((s) => s.label.length > 0);
  if (entries.length === 0) {
    return;
  }
  const widest = Math.max(...entries.map((s) => canvas.textWidth(s.label)));
  const boxW = widest + 34;
  const boxH = entries.length * 12 + 8;
  const bx = WIDTH - MARGIN.right - boxW - 6;
  const by = MARGIN.top + 6;
  canvas.fillRect(bx, by, boxW, boxH, WHITE);
  for (let x = bx; x <= bx + boxW; x++) {
    canvas.set(x, by, GRAY);
    canvas.set(x, by + boxH, GRAY);
  }
  for (let y = by; y <= by + boxH; y++) {
    canvas.set(bx, y, GRAY);
    canvas.set(bx + boxW, y, GRAY);
  }
  entries.forEach((s, i) => {
    const ly = by + 6 + i * 12;
    canvas.line(bx + 4, ly + 3, bx + 22, ly + 3, s.color, 2);
    canvas.text(bx + 28, ly, s.label, BLACK);
  });
}

const LOG_FLOOR = 1e-16;

function positiveOrFloor(v: number): number {
  return v > LOG_FLOOR ? v : LOG_FLOOR;
}

function renderLogLog(
  title: string,
  xLabel: string,
  yLabel: string,
  series: Series[],
): Canvas {
  const xs = series.flatMap((s) => s.points.map((p) => p.x));
  const ys = series.flatMap((s) => s.points.map((p) => p.y));
  const xAxis = logAxis(Math.min(...xs), Math.max(...xs), MARGIN.left, WIDTH - MARGIN.right);
  const yMin = Math.min(...ys);
  const yMax = Math.max(...ys);
  const yAxis = logAxis(
    yMin,
    yMax > yMin ? yMax : yMin * 10,
    HEIGHT - MARGIN.bottom,
    MARGIN.top,
  );
  const canvas = new Canvas(WIDTH, HEIGHT);
  drawFrame(canvas, title, xLabel, yLabel, xAxis, yAxis);
  drawSeries(canvas, series, xAxis, yAxis);
  drawLegend(canvas, series);
  return canvas;
}

function renderSweep(table: Table): Canvas {
  const eps = numericColumn(table, "eps");
  const distance = numericColumn(table, "distance");
  const names = column(table, "observable");
  const order: string[] = [];
  for (const name of names) {
    if (!order.includes(name)) {
      order.push(name);
    }
  }
  const series: Series[] = order.map((name, i) => {
    const points = eps
      .map((x, row) => ({ x, y: positiveOrFloor(distance[row]), name: names[row] }))
      .filter((p) => p.name === name)
      .sort((a, b) => a.x - b.x)
      .map((p) => ({ x: p.x, y: p.y }));
    return { label: name, color: PALETTE[i % PALETTE.length], points };
  });
  return renderLogLog("ENERGY DISTANCE VS EPS", "EPS", "ENERGY DISTANCE", series);
}

function renderMoments(table: Table): Canvas {
  const eps = numericColumn(table, "eps");
  const estimate = numericColumn(table, "estimate");
  const stat = column(table, "statistic");
  const mode = column(table, "mode");
  const keep = eps.map((e, i) => e > 0 && mode[i] === "oscillating");
  if (!keep.some(Boolean)) {
    throw new SchemaError("no oscillating-mode rows with eps > 0 to plot");
  }
  const order: string[] = [];
  for (let i = 0; i < stat.length; i++) {
    if (keep[i] && !order.includes(stat[i])) {
      order.push(stat[i]);
    }
  }
  const series: Series[] = order.map((name, idx) => {
    const points = eps
      .map((x, row) => ({ x, y: estimate[row], name: stat[row], keep: keep[row] }))
      .filter((p) => p.keep && p.name === name)
      .sort((a, b) => a.x - b.x);
    const reference = points[points.length - 1].y; // coarsest eps
    return {
      label: name.replaceAll("_", " "),
      color: PALETTE[idx % PALETTE.length],
      points: points.map((p) => ({ x: p.x, y: p.y / reference })),
    };
  });
  const xs = series.flatMap((s) => s.points.map((p) => p.x));
  const xAxis = logAxis(Math.min(...xs), Math.max(...xs), MARGIN.left, WIDTH - MARGIN.right);
  const yAxis = linearAxis(0, 2.4, HEIGHT - MARGIN.bottom, MARGIN.top);
  const canvas = new Canvas(WIDTH, HEIGHT);
  drawFrame(canvas, "MOMENT UNIFORMITY ACROSS EPS", "EPS", "ESTIMATE / COARSE EPS", xAxis, yAxis);
  // uniformity corridor: max/min <= 2 around the reference level
  canvas.dashedLine(MARGIN.left, yAxis.toPixel(2.0), WIDTH - MARGIN.right, yAxis.toPixel(2.0), GRAY);
  canvas.dashedLine(MARGIN.left, yAxis.toPixel(0.5), WIDTH - MARGIN.right, yAxis.toPixel(0.5), GRAY);
  drawSeries(canvas, series, xAxis, yAxis);
  drawLegend(canvas, series);
  return canvas;
}

function renderHoelder(table: Table): Canvas {
  const dt = numericColumn(table, "dt");
  const value = numericColumn(table, "value");
  const ratio = numericColumn(table, "ratio");
  const rows = dt
    .map((x, i) => ({ x, value: value[i], ratio: ratio[i] }))
    .filter((r) => r.x > 0)
    .sort((a, b) => a.x - b.x);
  if (rows.length === 0) {
    throw new SchemaError("no positive strides to plot");
  }
  const series: Series[] = [
    {
      label: "E|DU|1^2",
      color: PALETTE[0],
      points: rows.map((r) => ({ x: r.x, y: positiveOrFloor(r.value) })),
    },
    {
      label: "VALUE/SQRT(DT)",
      color: PALETTE[1],
      points: rows.map((r) => ({ x: r.x, y: positiveOrFloor(r.ratio) })),
    },
    {
      label: "SLOPE 1/2 REF",
      color: GRAY,
      dashed: true,
      points: rows.map((r) => ({
        x: r.x,
        y: positiveOrFloor(rows[0].value * Math.sqrt(r.x / rows[0].x)),
      })),
    },
  ];
  return renderLogLog("INCREMENT LADDER", "DT", "E|DU|1^2", series);
}

export function renderFigure(kind: FigureKind, csvText: string): Buffer {
  const table = parseCsv(csvText, kind);
  if (table.rows.length === 0) {
    throw new SchemaError("CSV has a header but no data rows");
  }
  let canvas: Canvas;
  switch (kind) {
    case "sweep":
      canvas = renderSweep(table);
      break;
    case "moments":
      canvas = renderMoments(table);
      break;
    case "hoelder":
      canvas = renderHoelder(table);
      break;
  }
  return canvas.toPng();
}
