/**
 * Hand-rolled SVG charts. The values plotted are payload fields passed
 * in unchanged; only pixel placement happens here.
 */

import type { SensitivityTable, TrajectoryRow } from "./api.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export const CHART_W = 360;
export const CHART_H = 160;
export const PAD = { top: 22, right: 10, bottom: 22, left: 44 };

function svgEl(tag: string, attrs: Record<string, string>): SVGElement {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  return node;
}

function plotArea(): { w: number; h: number } {
  return { w: CHART_W - PAD.left - PAD.right, h: CHART_H - PAD.top - PAD.bottom };
}

export function yPixel(value: number, lo: number, hi: number): number {
  const { h } = plotArea();
  const span = hi - lo || 1;
  return PAD.top + h * (1 - (value - lo) / span);
}

function baseSvg(title: string): SVGElement {
  const svg = svgEl("svg", {
    viewBox: `0 0 ${CHART_W} ${CHART_H}`,
    width: String(CHART_W),
    height: String(CHART_H),
    role: "img",
  });
  const cap = svgEl("text", { x: String(PAD.left), y: "14", class: "chart-title" });
  cap.textContent = title;
  svg.appendChild(cap);
  return svg;
}

type SeriesKey = "delta_theta" | "logdet" | "lambda_min" | "kw_gap";

/** Line chart of one diagnostic series against the sample size n. */
export function trajectoryChart(rows: TrajectoryRow[], key: SeriesKey, title: string): SVGElement {
  const svg = baseSvg(title);
  svg.setAttribute("data-series", key);
  const pts = rows
    .map((r) => ({ n: r.n, v: r[key] }))
    .filter((p): p is { n: number; v: number } => p.v !== null && isFinite(p.v as number));
  svg.setAttribute("data-points", String(pts.length));
  if (pts.length === 0) return svg;

  const { w } = plotArea();
  const ns = pts.map((p) => p.n);
  const vs = pts.map((p) => p.v);
  const nLo = Math.min(...ns);
  const nHi = Math.max(...ns);
  let vLo = Math.min(...vs);
  let vHi = Math.max(...vs);
  if (vLo === vHi) {
    vLo -= 0.5;
    vHi += 0.5;
  }
  const x = (n: number) => PAD.left + (w * (n - nLo)) / (nHi - nLo || 1);

  const axis = svgEl("line", {
    x1: String(PAD.left), y1: String(CHART_H - PAD.bottom),
    x2: String(CHART_W - PAD.right), y2: String(CHART_H - PAD.bottom),
    class: "axis",
  });
  svg.appendChild(axis);

  const line = svgEl("polyline", {
    points: pts.map((p) => `${x(p.n).toFixed(2)},${yPixel(p.v, vLo, vHi).toFixed(2)}`).join(" "),
    class: "series-line",
    fill: "none",
  });
  svg.appendChild(line);

  const loLabel = svgEl("text", {
    x: "2", y: String(CHART_H - PAD.bottom), class: "tick",
  });
  loLabel.textContent = Number(vLo.toPrecision(3)).toString();
  const hiLabel = svgEl("text", { x: "2", y: String(PAD.top + 8), class: "tick" });
  hiLabel.textContent = Number(vHi.toPrecision(3)).toString();
  svg.appendChild(loLabel);
  svg.appendChild(hiLabel);
  return svg;
}

/**
 * Bar chart of the sensitivity profile with the optimality reference
 * line at d = p; the served argmax bar is highlighted.
 */
export function sensitivityChart(table: SensitivityTable): SVGElement {
  const svg = baseSvg("sensitivity d(x) with the d = p reference");
  svg.setAttribute("data-role", "sensitivity-chart");
  const { w } = plotArea();
  const K = table.d.length;
  const yHi = Math.max(...table.d, table.p) * 1.05 || 1;
  svg.setAttribute("data-ymax", String(yHi));
  const slot = w / Math.max(K, 1);
  const barW = Math.max(1, Math.min(18, slot * 0.8));

  table.d.forEach((value, i) => {
    const xLeft = PAD.left + slot * i + (slot - barW) / 2;
    const yTop = yPixel(value, 0, yHi);
    const bar = svgEl("rect", {
      x: xLeft.toFixed(2),
      y: yTop.toFixed(2),
      width: barW.toFixed(2),
      height: (CHART_H - PAD.bottom - yTop).toFixed(2),
      class: i === table.argmax_index ? "bar argmax" : "bar",
      "data-index": String(i),
      "data-value": String(value),
    });
    const tip = svgEl("title", {});
    tip.textContent = `${table.labels[i]}: d = ${Number(value.toPrecision(5))}`;
    bar.appendChild(tip);
    svg.appendChild(bar);
  });

  const refY = yPixel(table.p, 0, yHi);
  const ref = svgEl("line", {
    x1: String(PAD.left),
    x2: String(CHART_W - PAD.right),
    y1: refY.toFixed(2),
    y2: refY.toFixed(2),
    class: "kw-reference",
    "data-role": "kw-reference",
    "data-value": String(table.p),
  });
  svg.appendChild(ref);
  const refLabel = svgEl("text", {
    x: String(CHART_W - PAD.right - 2),
    y: (refY - 3).toFixed(2),
    "text-anchor": "end",
    class: "tick",
  });
  refLabel.textContent = `d = ${table.p}`;
  svg.appendChild(refLabel);
  return svg;
}
