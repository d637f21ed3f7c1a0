/** Query controls: object picker, membership kind toggle, tau slider,
 * weight mode, top-k, and inline validation messages. */

import {
  sliderToTau,
  tauToSlider,
  validateQuery,
  type UiQueryState,
} from "./state.js";
import type { MembershipKind, WeightMode } from "./types.js";

export interface QueryPanelHandlers {
  onChange(patch: Partial<UiQueryState>): void;
  onSubmit(): void;
}

const KINDS: MembershipKind[] = ["gaussian", "trapezoid"];
const WEIGHT_MODES: WeightMode[] = ["uniform", "cluster_diff", "svd"];
const SLIDER_STEPS = 1000;

export function renderQueryPanel(
  container: HTMLElement,
  state: UiQueryState,
  objectIds: string[],
  handlers: QueryPanelHandlers,
): void {
  const doc = container.ownerDocument;
  container.textContent = "";
  container.classList.add("query-panel");

  const picker = doc.createElement("select");
  picker.className = "object-picker";
  picker.multiple = true;
  for (const oid of objectIds) {
    const option = doc.createElement("option");
    option.value = oid;
    option.textContent = oid;
    option.selected = state.selectedIds.includes(oid);
    picker.appendChild(option);
  }
  picker.addEventListener("change", () => {
    const chosen = Array.from(picker.selectedOptions).map((o) => o.value);
    handlers.onChange({ selectedIds: chosen });
  });
  container.appendChild(picker);

  const kindRow = doc.createElement("div");
  kindRow.className = "kind-toggle";
  for (const kind of KINDS) {
    const button = doc.createElement("button");
    button.dataset.kind = kind;
    button.textContent = kind;
    button.classList.toggle("active", state.kind === kind);
    button.addEventListener("click", () => handlers.onChange({ kind }));
    kindRow.appendChild(button);
  }
  container.appendChild(kindRow);

  const tauRow = doc.createElement("label");
  tauRow.className = "tau-row";
  tauRow.textContent = `tau = ${state.tau.toPrecision(3)}`;
  const slider = doc.createElement("input");
  slider.type = "range";
  slider.className = "tau-slider";
  slider.min = "0";
  slider.max = String(SLIDER_STEPS);
  slider.value = String(Math.round(tauToSlider(state.kind, state.tau) * SLIDER_STEPS));
  slider.addEventListener("input", () => {
    const position = Number(slider.value) / SLIDER_STEPS;
    handlers.onChange({ tau: sliderToTau(state.kind, position) });
  });
  tauRow.appendChild(slider);
  container.appendChild(tauRow);

  const weightSelect = doc.createElement("select");
  weightSelect.className = "weight-mode";
  for (const mode of WEIGHT_MODES) {
    const option = doc.createElement("option");
    option.value = mode;
    option.textContent = mode;
    option.selected = state.weightMode === mode;
    weightSelect.appendChild(option);
  }
  weightSelect.addEventListener("change", () => {
    handlers.onChange({ weightMode: weightSelect.value as WeightMode });
  });
  container.appendChild(weightSelect);

  const topK = doc.createElement("input");
  topK.type = "number";
  topK.className = "top-k";
  topK.placeholder = "top-k (all)";
  topK.min = "1";
  topK.value = state.topK === null ? "" : String(state.topK);
  topK.addEventListener("change", () => {
    handlers.onChange({ topK: topK.value === "" ? null : Number(topK.value) });
  });
  container.appendChild(topK);

  const errors = validateQuery(state);
  const errorList = doc.createElement("ul");
  errorList.className = "query-errors";
  for (const error of errors) {
    const item = doc.createElement("li");
    item.dataset.field = error.field;
    item.textContent = error.message;
    errorList.appendChild(item);
  }
  container.appendChild(errorList);

  const submit = doc.createElement("button");
  submit.className = "run-query";
  submit.textContent = "Query";
  submit.disabled = errors.length > 0;
  submit.addEventListener("click", () => handlers.onSubmit());
  container.appendChild(submit);
}
