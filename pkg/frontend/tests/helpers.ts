import type {
  Estimate,
  History,
  SensitivityTable,
  SessionState,
  Suggestion,
} from "../src/api";
import type { ConsoleData } from "../src/view";

import stateActiveRaw from "./fixtures/state_active.json";
import stateAwaitingRaw from "./fixtures/state_awaiting.json";
import suggestRaw from "./fixtures/suggest.json";
import estimateRaw from "./fixtures/estimate.json";
import estimatePrefitRaw from "./fixtures/estimate_prefit.json";
import sensitivityRaw from "./fixtures/sensitivity.json";
import historyRaw from "./fixtures/history.json";
import errorStaleRaw from "./fixtures/error_stale.json";
import errorUnknownRaw from "./fixtures/error_unknown.json";

/** Deep copy so tests can mutate fixtures without leaking into each other. */
function copy<T>(raw: unknown): T {
  return JSON.parse(JSON.stringify(raw)) as T;
}

export const stateActive = (): SessionState => copy(stateActiveRaw);
export const stateAwaiting = (): SessionState => copy(stateAwaitingRaw);
export const suggestFx = (): Suggestion => copy(suggestRaw);
export const estimateFx = (): Estimate => copy(estimateRaw);
export const estimatePrefit = (): Estimate => copy(estimatePrefitRaw);
export const sensitivityFx = (): SensitivityTable & { seq: number; n: number } =>
  copy(sensitivityRaw);
export const historyFx = (): History => copy(historyRaw);
export const staleError = (): { status: number; body: { error: string; detail: string } } =>
  copy(errorStaleRaw);
export const unknownError = (): { status: number; body: { error: string; detail: string } } =>
  copy(errorUnknownRaw);

export function fixtureData(overrides: Partial<ConsoleData> = {}): ConsoleData {
  return {
    state: stateActive(),
    suggest: suggestFx(),
    estimate: estimateFx(),
    sensitivity: sensitivityFx(),
    history: historyFx(),
    ...overrides,
  };
}
