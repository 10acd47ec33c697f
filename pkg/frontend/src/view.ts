/**
 * DOM rendering for the session console.
 *
 * Discipline: every displayed statistic is a node carrying a
 * data-field attribute naming the one payload field it shows, e.g.
 * "estimate.theta_hat.0". Rendering resolves that path against the
 * fetched payloads and writes the formatted value; nothing on screen
 * is computed client-side, so the mapping is auditable by walking the
 * DOM.
 */

import type { Estimate, History, SensitivityTable, SessionState, Suggestion } from "./api.js";
import { sensitivityChart, trajectoryChart } from "./charts.js";

export interface ConsoleData {
  state: SessionState;
  suggest: Suggestion | null;
  estimate: Estimate | null;
  sensitivity: (SensitivityTable & { seq: number; n: number }) | null;
  history: History | null;
}

export type Leaf = number | string | boolean | null;

export function resolveField(data: ConsoleData, path: string): { ok: boolean; value: Leaf } {
  const parts = path.split(".");
  let node: unknown = data;
  for (const part of parts) {
    if (node === null || typeof node !== "object") return { ok: false, value: null };
    node = (node as Record<string, unknown>)[part];
    if (node === undefined) return { ok: false, value: null };
  }
  const t = typeof node;
  if (node !== null && t !== "number" && t !== "string" && t !== "boolean") {
    return { ok: false, value: null };
  }
  return { ok: true, value: node as Leaf };
}

export function formatValue(value: Leaf, format: string): string {
  if (value === null) return "n/a";
  switch (format) {
    case "raw":
      return String(value);
    case "int":
      return String(value);
    case "flag":
      return value ? "yes" : "no";
    case "sig":
      if (typeof value !== "number") return String(value);
      if (!isFinite(value)) return String(value);
      if (value === 0) return "0";
      return Number(value.toPrecision(5)).toString();
    default:
      return String(value);
  }
}

function el(tag: string, attrs: Record<string, string> = {}, text?: string): HTMLElement {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

function stat(path: string, format = "sig"): HTMLElement {
  return el("span", { "data-field": path, "data-format": format, class: "stat" });
}

function labeled(label: string, value: HTMLElement): HTMLElement {
  const row = el("div", { class: "stat-row" });
  row.appendChild(el("span", { class: "stat-label" }, label));
  row.appendChild(value);
  return row;
}

export function bindFields(root: HTMLElement, data: ConsoleData): void {
  for (const node of Array.from(root.querySelectorAll<HTMLElement>("[data-field]"))) {
    const path = node.dataset.field ?? "";
    const resolved = resolveField(data, path);
    node.textContent = resolved.ok
      ? formatValue(resolved.value, node.dataset.format ?? "sig")
      : "?";
  }
}

function suggestionCard(data: ConsoleData): HTMLElement {
  const card = el("section", { class: "card", "data-role": "suggestion" });
  card.appendChild(el("h2", {}, "next point"));
  if (data.state.phase !== "active") {
    card.appendChild(el("p", { class: "phase-note" },
      "collecting responses for the starting design"));
    const list = el("ul", { class: "pending-list" });
    data.state.pending_points.forEach((k, i) => {
      const item = el("li", {});
      item.appendChild(document.createTextNode("grid index "));
      item.appendChild(stat(`state.pending_points.${i}`, "int"));
      item.appendChild(document.createTextNode(` (${data.state.labels[k] ?? "?"})`));
      if (i === 0) item.classList.add("up-next");
      list.appendChild(item);
    });
    card.appendChild(list);
    return card;
  }
  const big = el("div", { class: "suggested-point" });
  big.appendChild(stat("suggest.label", "raw"));
  card.appendChild(big);
  const meta = el("div", { class: "suggestion-meta" });
  meta.appendChild(labeled("grid index", stat("suggest.index", "int")));
  meta.appendChild(labeled("answers suggestion seq", stat("suggest.suggestion_seq", "int")));
  card.appendChild(meta);
  return card;
}

function countsCard(): HTMLElement {
  const card = el("section", { class: "card", "data-role": "counts" });
  card.appendChild(el("h2", {}, "session"));
  card.appendChild(labeled("design points n", stat("state.n", "int")));
  card.appendChild(labeled("responses recorded", stat("state.n_observed", "int")));
  card.appendChild(labeled("event seq", stat("state.seq", "int")));
  card.appendChild(labeled("phase", stat("state.phase", "raw")));
  return card;
}

function estimateCard(data: ConsoleData): HTMLElement {
  const card = el("section", { class: "card", "data-role": "estimate" });
  card.appendChild(el("h2", {}, "parameter estimate"));
  const est = data.estimate;
  if (!est) {
    card.appendChild(el("p", { class: "phase-note" }, "no estimate yet"));
    return card;
  }
  // at_boundary is null before the estimator has run at all
  const anyBoundary = est.at_boundary !== null && est.at_boundary.some(Boolean);
  const table = el("table", { class: "estimate-table" });
  const head = el("tr", {});
  head.appendChild(el("th", {}, "coordinate"));
  head.appendChild(el("th", {}, "estimate"));
  const seHead = el("th", { "data-role": "se-header" }, "asymptotic SE");
  head.appendChild(seHead);
  table.appendChild(head);
  est.theta_hat.forEach((_, j) => {
    const row = el("tr", {});
    row.appendChild(el("td", {}, `theta_${j}`));
    const td = el("td", {});
    td.appendChild(stat(`estimate.theta_hat.${j}`));
    row.appendChild(td);
    const seCell = el("td", { "data-role": "se-value" });
    seCell.appendChild(stat(`estimate.se.${j}`));
    row.appendChild(seCell);
    table.appendChild(row);
  });
  card.appendChild(table);
  if (anyBoundary) {
    // standard errors rest on an interior solution; suppress them
    // whenever any coordinate sits on the box boundary
    for (const node of Array.from(card.querySelectorAll<HTMLElement>(
      '[data-role="se-value"], [data-role="se-header"]'))) {
      node.classList.add("hidden");
      node.setAttribute("hidden", "hidden");
    }
    card.appendChild(el("p", { class: "boundary-note", "data-role": "boundary-note" },
      "estimate is on the parameter box boundary; asymptotic standard errors not shown"));
  }
  card.appendChild(labeled("estimator converged", stat("estimate.converged", "flag")));
  return card;
}

function diagnosticsCard(): HTMLElement {
  const card = el("section", { class: "card", "data-role": "diagnostics" });
  card.appendChild(el("h2", {}, "design diagnostics"));
  card.appendChild(labeled("log det information", stat("estimate.logdet")));
  card.appendChild(labeled("smallest eigenvalue", stat("estimate.lambda_min")));
  card.appendChild(labeled("sensitivity gap", stat("estimate.kw_gap")));
  return card;
}

function chartsCard(data: ConsoleData): HTMLElement {
  const card = el("section", { class: "card wide", "data-role": "charts" });
  card.appendChild(el("h2", {}, "trajectory"));
  if (data.history && data.history.trajectory.length > 0) {
    const grid = el("div", { class: "chart-grid" });
    const rows = data.history.trajectory;
    grid.appendChild(trajectoryChart(rows, "delta_theta", "estimate movement per step"));
    grid.appendChild(trajectoryChart(rows, "logdet", "log det information"));
    grid.appendChild(trajectoryChart(rows, "lambda_min", "smallest eigenvalue"));
    grid.appendChild(trajectoryChart(rows, "kw_gap", "sensitivity gap"));
    card.appendChild(grid);
  } else {
    card.appendChild(el("p", { class: "phase-note" }, "no steps recorded yet"));
  }
  return card;
}

function sensitivityCard(data: ConsoleData): HTMLElement {
  const card = el("section", { class: "card wide", "data-role": "sensitivity" });
  card.appendChild(el("h2", {}, "sensitivity profile"));
  if (data.sensitivity) {
    card.appendChild(sensitivityChart(data.sensitivity));
    const foot = el("div", { class: "sensitivity-foot" });
    foot.appendChild(labeled("max gap over the bound", stat("sensitivity.kw_gap")));
    foot.appendChild(labeled("bound (dimension p)", stat("sensitivity.p", "int")));
    card.appendChild(foot);
  } else {
    card.appendChild(el("p", { class: "phase-note" },
      "profile appears once the starting design is complete"));
  }
  return card;
}

/** Rebuild the statistics region (everything except banner and form). */
export function renderStats(container: HTMLElement, data: ConsoleData): void {
  container.textContent = "";
  container.appendChild(suggestionCard(data));
  container.appendChild(countsCard());
  container.appendChild(estimateCard(data));
  container.appendChild(diagnosticsCard());
  container.appendChild(sensitivityCard(data));
  container.appendChild(chartsCard(data));
  bindFields(container, data);
}

export function renderUnknownSession(container: HTMLElement, sessionId: string, detail: string): void {
  container.textContent = "";
  const card = el("section", { class: "card error-state", "data-role": "unknown-session" });
  card.appendChild(el("h2", {}, "unknown session"));
  card.appendChild(el("p", {}, `the service has no session '${sessionId}'`));
  card.appendChild(el("p", { class: "detail" }, detail));
  container.appendChild(card);
}

export function renderNetworkFailure(container: HTMLElement, retryInMs: number): void {
  const card = el("section", { class: "card error-state", "data-role": "network-failure" });
  card.appendChild(el("h2", {}, "service unreachable"));
  card.appendChild(el("p", {},
    `could not reach the session service; retrying in ${Math.round(retryInMs / 1000)}s`));
  const existing = container.querySelector('[data-role="network-failure"]');
  if (existing) existing.replaceWith(card);
  else container.prepend(card);
}

export function clearNetworkFailure(container: HTMLElement): void {
  container.querySelector('[data-role="network-failure"]')?.remove();
}
