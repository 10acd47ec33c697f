/**
 * Response entry forms, one per response family. Each form constrains
 * what can be emitted: the Bernoulli form has no free entry at all, so
 * a value outside {0, 1} is unreachable; the Poisson form only emits
 * nonnegative integers; the Gaussian form only emits finite numbers.
 */

export type FormKind = "bernoulli" | "poisson" | "gaussian";

export function formKind(familyLink: string): FormKind {
  const family = familyLink.split("-")[0];
  if (family === "bernoulli" || family === "poisson" || family === "gaussian") {
    return family;
  }
  throw new Error(`no response form for family '${familyLink}'`);
}

export interface ResponseForm {
  element: HTMLFormElement;
  kind: FormKind;
  setEnabled(enabled: boolean): void;
  reset(): void;
  /** True while the user is mid-entry; polling pauses on this. */
  entryActive(): boolean;
}

function make(tag: string, attrs: Record<string, string>, text?: string): HTMLElement {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

function shell(kind: FormKind): { form: HTMLFormElement; fieldset: HTMLFieldSetElement; error: HTMLElement } {
  const form = document.createElement("form");
  form.setAttribute("data-role", "response-form");
  form.setAttribute("data-kind", kind);
  const fieldset = document.createElement("fieldset");
  const legend = make("legend", {}, "record response");
  fieldset.appendChild(legend);
  const error = make("p", { class: "entry-error", "data-role": "entry-error", hidden: "hidden" });
  form.appendChild(fieldset);
  form.appendChild(error);
  return { form, fieldset, error };
}

function showError(node: HTMLElement, message: string): void {
  node.textContent = message;
  node.removeAttribute("hidden");
}

function clearError(node: HTMLElement): void {
  node.textContent = "";
  node.setAttribute("hidden", "hidden");
}

function bernoulliForm(onSubmit: (y: number) => void): ResponseForm {
  const { form, fieldset, error } = shell("bernoulli");
  let selected: 0 | 1 | null = null;

  const zero = make("button", { type: "button", class: "toggle", "data-value": "0" }, "0") as HTMLButtonElement;
  const one = make("button", { type: "button", class: "toggle", "data-value": "1" }, "1") as HTMLButtonElement;
  const submit = make("button", { type: "submit", disabled: "disabled" }, "submit") as HTMLButtonElement;

  function select(value: 0 | 1): void {
    selected = value;
    zero.classList.toggle("selected", value === 0);
    one.classList.toggle("selected", value === 1);
    submit.disabled = false;
    clearError(error);
  }
  zero.addEventListener("click", () => select(0));
  one.addEventListener("click", () => select(1));

  const row = make("div", { class: "toggle-row" });
  row.appendChild(zero);
  row.appendChild(one);
  fieldset.appendChild(row);
  fieldset.appendChild(submit);

  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    if (selected === null) {
      showError(error, "pick 0 or 1 first");
      return;
    }
    onSubmit(selected);
  });

  return {
    element: form,
    kind: "bernoulli",
    setEnabled: (enabled) => { fieldset.disabled = !enabled; },
    reset: () => {
      selected = null;
      zero.classList.remove("selected");
      one.classList.remove("selected");
      submit.disabled = true;
      clearError(error);
    },
    entryActive: () => selected !== null,
  };
}

function numericForm(
  kind: FormKind,
  placeholder: string,
  parse: (raw: string) => { ok: true; y: number } | { ok: false; message: string },
  onSubmit: (y: number) => void,
): ResponseForm {
  const { form, fieldset, error } = shell(kind);
  const input = make("input", {
    type: "text",
    inputmode: "decimal",
    placeholder,
    "data-role": "response-input",
    autocomplete: "off",
  }) as HTMLInputElement;
  const submit = make("button", { type: "submit" }, "submit") as HTMLButtonElement;
  fieldset.appendChild(input);
  fieldset.appendChild(submit);

  input.addEventListener("input", () => clearError(error));

  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const verdict = parse(input.value.trim());
    if (!verdict.ok) {
      showError(error, verdict.message);
      return;
    }
    onSubmit(verdict.y);
  });

  return {
    element: form,
    kind,
    setEnabled: (enabled) => { fieldset.disabled = !enabled; },
    reset: () => {
      input.value = "";
      clearError(error);
    },
    entryActive: () =>
      input.value.trim() !== "" || document.activeElement === input,
  };
}

function parsePoisson(raw: string): { ok: true; y: number } | { ok: false; message: string } {
  if (!/^\d+$/.test(raw)) {
    return { ok: false, message: "count responses must be nonnegative whole numbers" };
  }
  return { ok: true, y: parseInt(raw, 10) };
}

function parseGaussian(raw: string): { ok: true; y: number } | { ok: false; message: string } {
  if (raw === "") return { ok: false, message: "enter a numeric response" };
  const y = Number(raw);
  if (!isFinite(y)) return { ok: false, message: "enter a finite numeric response" };
  return { ok: true, y };
}

export function buildResponseForm(kind: FormKind, onSubmit: (y: number) => void): ResponseForm {
  switch (kind) {
    case "bernoulli":
      return bernoulliForm(onSubmit);
    case "poisson":
      return numericForm("poisson", "count (0, 1, 2, ...)", parsePoisson, onSubmit);
    case "gaussian":
      return numericForm("gaussian", "measurement", parseGaussian, onSubmit);
  }
}
