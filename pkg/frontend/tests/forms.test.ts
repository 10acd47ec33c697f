import { afterEach, describe, expect, it } from "vitest";
import { buildResponseForm, formKind, ResponseForm } from "../src/forms";

afterEach(() => {
  document.body.textContent = "";
});

function mount(kind: "bernoulli" | "poisson" | "gaussian"): {
  form: ResponseForm;
  emitted: number[];
} {
  const emitted: number[] = [];
  const form = buildResponseForm(kind, (y) => emitted.push(y));
  document.body.appendChild(form.element);
  return { form, emitted };
}

function submit(form: ResponseForm): void {
  form.element.dispatchEvent(new Event("submit", { cancelable: true }));
}

function entryError(form: ResponseForm): HTMLElement {
  const node = form.element.querySelector<HTMLElement>('[data-role="entry-error"]');
  expect(node).not.toBeNull();
  return node!;
}

function textInput(form: ResponseForm): HTMLInputElement {
  const node = form.element.querySelector<HTMLInputElement>('[data-role="response-input"]');
  expect(node).not.toBeNull();
  return node!;
}

describe("formKind", () => {
  it("maps family-link names to form kinds", () => {
    expect(formKind("bernoulli-logit")).toBe("bernoulli");
    expect(formKind("poisson-log")).toBe("poisson");
    expect(formKind("gaussian-identity")).toBe("gaussian");
  });

  it("refuses families it has no form for", () => {
    expect(() => formKind("gamma-reciprocal")).toThrow(/gamma-reciprocal/);
  });
});

describe("bernoulli form", () => {
  it("offers no free-entry element at all", () => {
    const { form } = mount("bernoulli");
    expect(form.element.querySelector("input, textarea, select")).toBeNull();
    const toggles = form.element.querySelectorAll("button.toggle");
    expect(toggles).toHaveLength(2);
  });

  it("emits nothing until a value is picked", () => {
    const { form, emitted } = mount("bernoulli");
    submit(form);
    expect(emitted).toEqual([]);
    expect(entryError(form).hasAttribute("hidden")).toBe(false);
    expect(entryError(form).textContent).toMatch(/pick 0 or 1/);
  });

  it("emits exactly the picked value", () => {
    const { form, emitted } = mount("bernoulli");
    const zero = form.element.querySelector<HTMLButtonElement>('[data-value="0"]')!;
    const one = form.element.querySelector<HTMLButtonElement>('[data-value="1"]')!;

    zero.click();
    expect(zero.classList.contains("selected")).toBe(true);
    submit(form);
    one.click();
    expect(one.classList.contains("selected")).toBe(true);
    expect(zero.classList.contains("selected")).toBe(false);
    submit(form);

    expect(emitted).toEqual([0, 1]);
  });

  it("cannot emit anything outside {0, 1} under any interaction", () => {
    const { form, emitted } = mount("bernoulli");
    // every clickable thing, every order, plus raw submit events
    const buttons = Array.from(form.element.querySelectorAll("button"));
    for (const b of buttons) b.click();
    submit(form);
    for (const b of [...buttons].reverse()) b.click();
    submit(form);
    form.reset();
    submit(form);
    for (const y of emitted) expect([0, 1]).toContain(y);
  });

  it("reports entry in progress after a pick and clears on reset", () => {
    const { form } = mount("bernoulli");
    expect(form.entryActive()).toBe(false);
    form.element.querySelector<HTMLButtonElement>('[data-value="1"]')!.click();
    expect(form.entryActive()).toBe(true);
    form.reset();
    expect(form.entryActive()).toBe(false);
    const submitBtn = form.element.querySelector<HTMLButtonElement>('button[type="submit"]')!;
    expect(submitBtn.disabled).toBe(true);
  });
});

describe("poisson form", () => {
  it("emits a nonnegative whole number", () => {
    const { form, emitted } = mount("poisson");
    textInput(form).value = "7";
    submit(form);
    expect(emitted).toEqual([7]);
  });

  it("accepts 0", () => {
    const { form, emitted } = mount("poisson");
    textInput(form).value = "0";
    submit(form);
    expect(emitted).toEqual([0]);
  });

  it("rejects everything that is not a nonnegative integer", () => {
    const { form, emitted } = mount("poisson");
    for (const bad of ["-2", "3.5", "x", "", "1e3", "0x10", " "]) {
      textInput(form).value = bad;
      submit(form);
    }
    expect(emitted).toEqual([]);
    expect(entryError(form).hasAttribute("hidden")).toBe(false);
    expect(entryError(form).textContent).toMatch(/whole numbers/);
  });

  it("clears the error as soon as typing resumes", () => {
    const { form } = mount("poisson");
    textInput(form).value = "bad";
    submit(form);
    expect(entryError(form).hasAttribute("hidden")).toBe(false);
    textInput(form).dispatchEvent(new Event("input"));
    expect(entryError(form).hasAttribute("hidden")).toBe(true);
  });
});

describe("gaussian form", () => {
  it("emits finite numbers, negatives included", () => {
    const { form, emitted } = mount("gaussian");
    textInput(form).value = "1.25";
    submit(form);
    textInput(form).value = "-0.5";
    submit(form);
    expect(emitted).toEqual([1.25, -0.5]);
  });

  it("rejects blanks, words and infinities", () => {
    const { form, emitted } = mount("gaussian");
    for (const bad of ["", "abc", "Infinity", "-Infinity", "NaN"]) {
      textInput(form).value = bad;
      submit(form);
    }
    expect(emitted).toEqual([]);
    expect(entryError(form).hasAttribute("hidden")).toBe(false);
  });

  it("reports entry in progress while text is pending", () => {
    const { form } = mount("gaussian");
    expect(form.entryActive()).toBe(false);
    textInput(form).value = "1.5";
    expect(form.entryActive()).toBe(true);
    form.reset();
    expect(form.entryActive()).toBe(false);
  });

  it("counts a focused empty input as entry in progress", () => {
    const { form } = mount("gaussian");
    textInput(form).focus();
    expect(form.entryActive()).toBe(true);
  });
});

describe("enable toggle", () => {
  it("disables the fieldset while a submit is in flight", () => {
    const { form } = mount("gaussian");
    const fieldset = form.element.querySelector("fieldset")!;
    expect(fieldset.disabled).toBe(false);
    form.setEnabled(false);
    expect(fieldset.disabled).toBe(true);
    form.setEnabled(true);
    expect(fieldset.disabled).toBe(false);
  });
});
