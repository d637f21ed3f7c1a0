/** Client-side query state and the validation mirror applied before any
 * request leaves the browser.  The server re-validates; this layer only
 * exists to surface problems next to the offending control. */

import type { MembershipKind, QueryRequestBody, QueryResponse, WeightMode } from "./types.js";

export const GAUSSIAN_TAU_MIN = 0.001;
export const GAUSSIAN_TAU_MAX = 5;

export interface UiQueryState {
  selectedIds: string[];
  kind: MembershipKind;
  tau: number;
  weightMode: WeightMode;
  explicit: number[] | null;
  topK: number | null;
  group: string | null;
  lastResponse: QueryResponse | null;
}

export function initialQueryState(): UiQueryState {
  return {
    selectedIds: [],
    kind: "gaussian",
    tau: 1.0,
    weightMode: "uniform",
    explicit: null,
    topK: null,
    group: null,
    lastResponse: null,
  };
}

/** Validation mirror of the server's request contract.  Returns one
 * message per violated rule, keyed so panels can highlight controls. */
export function validateQuery(state: UiQueryState): { field: string; message: string }[] {
  const errors: { field: string; message: string }[] = [];
  if (state.kind === "gaussian") {
    if (state.selectedIds.length !== 1) {
      errors.push({
        field: "ids",
        message: "gaussian queries take exactly one query object",
      });
    }
    if (!(state.tau > 0)) {
      errors.push({ field: "tau", message: "gaussian tau must be positive" });
    }
  } else {
    if (state.selectedIds.length < 2) {
      errors.push({
        field: "ids",
        message: "trapezoid queries take at least two query objects",
      });
    }
    if (!(state.tau >= 0 && state.tau <= 1)) {
      errors.push({ field: "tau", message: "trapezoid tau must be in [0, 1]" });
    }
  }
  if (state.topK !== null && (!Number.isInteger(state.topK) || state.topK < 1)) {
    errors.push({ field: "top_k", message: "top-k must be a positive integer" });
  }
  if (state.weightMode === "explicit") {
    if (!state.explicit || state.explicit.length === 0) {
      errors.push({
        field: "weights",
        message: "explicit weighting needs a weight vector",
      });
    } else if (state.explicit.some((w) => w < 0)) {
      errors.push({ field: "weights", message: "explicit weights must be non-negative" });
    }
  } else if (state.explicit !== null) {
    errors.push({
      field: "weights",
      message: "a weight vector is only allowed with explicit weighting",
    });
  }
  return errors;
}

/** Serialize state into the exact request body the service accepts. */
export function toRequestBody(state: UiQueryState): QueryRequestBody {
  return {
    kind: state.kind,
    tau: state.tau,
    ids: [...state.selectedIds],
    weights: state.weightMode,
    explicit: state.weightMode === "explicit" ? state.explicit : null,
    top_k: state.topK,
    group: state.group,
  };
}

/** Slider position in [0, 1] -> tau.  Gaussian uses a log scale over
 * (0.001, 5]; trapezoid is linear over [0, 1]. */
export function sliderToTau(kind: MembershipKind, position: number): number {
  const t = Math.min(1, Math.max(0, position));
  if (kind === "trapezoid") {
    return t;
  }
  const logMin = Math.log(GAUSSIAN_TAU_MIN);
  const logMax = Math.log(GAUSSIAN_TAU_MAX);
  return Math.exp(logMin + t * (logMax - logMin));
}

export function tauToSlider(kind: MembershipKind, tau: number): number {
  if (kind === "trapezoid") {
    return Math.min(1, Math.max(0, tau));
  }
  const logMin = Math.log(GAUSSIAN_TAU_MIN);
  const logMax = Math.log(GAUSSIAN_TAU_MAX);
  const clamped = Math.min(GAUSSIAN_TAU_MAX, Math.max(GAUSSIAN_TAU_MIN, tau));
  return (Math.log(clamped) - logMin) / (logMax - logMin);
}
