import { afterEach, describe, expect, it } from "vitest";
import type { ConsoleData } from "../src/view";
import {
  bindFields,
  formatValue,
  renderNetworkFailure,
  renderStats,
  renderUnknownSession,
  resolveField,
} from "../src/view";
import { estimateFx, estimatePrefit, fixtureData, stateAwaiting } from "./helpers";

function mount(): HTMLElement {
  const container = document.createElement("div");
  document.body.appendChild(container);
  return container;
}

afterEach(() => {
  document.body.textContent = "";
});

describe("resolveField", () => {
  const data = fixtureData();

  it("walks dotted paths, array indices included", () => {
    expect(resolveField(data, "state.n")).toEqual({ ok: true, value: 2 });
    expect(resolveField(data, "suggest.sensitivity.d.4")).toEqual({ ok: true, value: 10 });
    expect(resolveField(data, "estimate.converged")).toEqual({ ok: true, value: true });
  });

  it("resolves null leaves as present", () => {
    expect(resolveField(data, "history.trajectory.0.delta_theta")).toEqual({
      ok: true,
      value: null,
    });
  });

  it("refuses missing paths and non-leaf targets", () => {
    expect(resolveField(data, "state.nope").ok).toBe(false);
    expect(resolveField(data, "estimate.theta_hat").ok).toBe(false);
    expect(resolveField(data, "suggest.label.extra").ok).toBe(false);
    expect(resolveField(fixtureData({ suggest: null }), "suggest.index").ok).toBe(false);
  });
});

describe("formatValue", () => {
  it("rounds numbers to five significant digits", () => {
    expect(formatValue(0.19098300562505258, "sig")).toBe("0.19098");
    expect(formatValue(-1.3862943611198906, "sig")).toBe("-1.3863");
    expect(formatValue(8, "sig")).toBe("8");
    expect(formatValue(0, "sig")).toBe("0");
  });

  it("keeps ints and raw strings as-is and words flags", () => {
    expect(formatValue(161, "int")).toBe("161");
    expect(formatValue("active", "raw")).toBe("active");
    expect(formatValue(true, "flag")).toBe("yes");
    expect(formatValue(false, "flag")).toBe("no");
    expect(formatValue(null, "flag")).toBe("n/a");
  });
});

describe("payload mapping audit", () => {
  it("every displayed statistic names exactly one payload field and shows it", () => {
    const container = mount();
    const data = fixtureData();
    renderStats(container, data);

    const nodes = Array.from(container.querySelectorAll<HTMLElement>("[data-field]"));
    expect(nodes.length).toBeGreaterThanOrEqual(15);
    for (const node of nodes) {
      const path = node.dataset.field!;
      const resolved = resolveField(data, path);
      expect(resolved.ok, `data-field '${path}' must resolve to a payload leaf`).toBe(true);
      expect(node.textContent).toBe(formatValue(resolved.value, node.dataset.format ?? "sig"));
    }
  });

  it("shows the service's numbers, not recomputed ones", () => {
    const container = mount();
    // perturb one payload value; the screen must follow the payload
    const data = fixtureData();
    data.estimate!.kw_gap = 123.456;
    renderStats(container, data);
    const shown = container.querySelector('[data-field="estimate.kw_gap"]')!;
    expect(shown.textContent).toBe("123.46");
  });

  it("covers the statistics the console promises", () => {
    const container = mount();
    renderStats(container, fixtureData());
    const paths = Array.from(
      container.querySelectorAll<HTMLElement>("[data-field]"),
    ).map((n) => n.dataset.field!);
    for (const expected of [
      "state.n",
      "state.n_observed",
      "state.seq",
      "state.phase",
      "suggest.label",
      "suggest.index",
      "suggest.suggestion_seq",
      "estimate.theta_hat.0",
      "estimate.theta_hat.1",
      "estimate.se.0",
      "estimate.se.1",
      "estimate.converged",
      "estimate.logdet",
      "estimate.lambda_min",
      "estimate.kw_gap",
      "sensitivity.kw_gap",
      "sensitivity.p",
    ]) {
      expect(paths.filter((p) => p === expected), expected).toHaveLength(1);
    }
  });

  it("marks unresolvable fields instead of inventing values", () => {
    const container = mount();
    const span = document.createElement("span");
    span.setAttribute("data-field", "estimate.not_a_field");
    container.appendChild(span);
    bindFields(container, fixtureData());
    expect(span.textContent).toBe("?");
  });
});

describe("estimate card", () => {
  it("labels standard errors as asymptotic", () => {
    const container = mount();
    renderStats(container, fixtureData());
    const header = container.querySelector('[data-role="se-header"]')!;
    expect(header.textContent).toMatch(/asymptotic/);
    expect(header.hasAttribute("hidden")).toBe(false);
    const seValues = container.querySelectorAll('[data-role="se-value"]');
    expect(seValues).toHaveLength(2);
  });

  it("hides standard errors when any coordinate sits on the boundary", () => {
    const container = mount();
    const est = estimateFx();
    est.at_boundary = [true, false];
    renderStats(container, fixtureData({ estimate: est }));

    for (const node of container.querySelectorAll<HTMLElement>(
      '[data-role="se-value"], [data-role="se-header"]',
    )) {
      expect(node.hasAttribute("hidden")).toBe(true);
    }
    const note = container.querySelector('[data-role="boundary-note"]');
    expect(note).not.toBeNull();
    expect(note!.textContent).toMatch(/boundary/);
  });

  it("keeps standard errors visible when no coordinate is on the boundary", () => {
    const container = mount();
    renderStats(container, fixtureData());
    expect(container.querySelector('[data-role="boundary-note"]')).toBeNull();
    for (const node of container.querySelectorAll<HTMLElement>('[data-role="se-value"]')) {
      expect(node.hasAttribute("hidden")).toBe(false);
    }
  });

  it("says so when there is no estimate yet", () => {
    const container = mount();
    renderStats(container, fixtureData({ estimate: null }));
    const card = container.querySelector('[data-role="estimate"]')!;
    expect(card.textContent).toMatch(/no estimate yet/);
  });

  it("renders the seed estimate, whose flags are still null", () => {
    // before the first refit the service sends converged: null and
    // at_boundary: null; the card must not treat that as a boundary hit
    const container = mount();
    renderStats(container, fixtureData({ estimate: estimatePrefit() }));
    expect(container.querySelector('[data-role="boundary-note"]')).toBeNull();
    for (const node of container.querySelectorAll<HTMLElement>('[data-role="se-value"]')) {
      expect(node.hasAttribute("hidden")).toBe(false);
    }
    const converged = container.querySelector('[data-field="estimate.converged"]')!;
    expect(converged.textContent).toBe("n/a");
  });
});

describe("awaiting phase", () => {
  function awaitingData(): ConsoleData {
    return fixtureData({
      state: stateAwaiting(),
      suggest: null,
      sensitivity: null,
      history: null,
    });
  }

  it("lists the pending start points with the first marked up next", () => {
    const container = mount();
    renderStats(container, awaitingData());
    const items = container.querySelectorAll('[data-role="suggestion"] li');
    expect(items).toHaveLength(2);
    expect(items[0].classList.contains("up-next")).toBe(true);
    expect(items[1].classList.contains("up-next")).toBe(false);
    const first = items[0].querySelector<HTMLElement>("[data-field]")!;
    expect(first.dataset.field).toBe("state.pending_points.0");
    expect(first.textContent).toBe("0");
  });

  it("shows no suggested point and explains the sensitivity profile's absence", () => {
    const container = mount();
    renderStats(container, awaitingData());
    expect(container.querySelector(".suggested-point")).toBeNull();
    const card = container.querySelector('[data-role="sensitivity"]')!;
    expect(card.querySelector("svg")).toBeNull();
    expect(card.textContent).toMatch(/starting design/);
  });
});

describe("error states", () => {
  it("renders the unknown-session card with the service detail", () => {
    const container = mount();
    renderUnknownSession(container, "00000000deadbeef", "no such session on disk");
    const card = container.querySelector('[data-role="unknown-session"]')!;
    expect(card.textContent).toContain("00000000deadbeef");
    expect(card.textContent).toContain("no such session on disk");
  });

  it("shows one network banner however many failures arrive", () => {
    const container = mount();
    renderNetworkFailure(container, 2000);
    renderNetworkFailure(container, 2000);
    expect(container.querySelectorAll('[data-role="network-failure"]')).toHaveLength(1);
    expect(container.textContent).toMatch(/retrying in 2s/);
  });
});
