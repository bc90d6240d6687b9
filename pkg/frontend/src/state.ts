/** Session and cross-page view state. The token survives a reload via
 * sessionStorage; everything else is per-visit. */

import { DEFAULT_ALERT_THRESHOLD } from "./views/risk";

const TOKEN_KEY = "chronorisk.token";

export interface ViewState {
  token: string | null;
  selectedPatient: string | null;
  lastJobId: string | null;
  pollStatus: string | null;
  thresholds: { diabetes: number; heart: number; hypertension: number };
}

export function initialState(): ViewState {
  return {
    token: sessionStorage.getItem(TOKEN_KEY),
    selectedPatient: null,
    lastJobId: null,
    pollStatus: null,
    thresholds: {
      diabetes: DEFAULT_ALERT_THRESHOLD,
      heart: DEFAULT_ALERT_THRESHOLD,
      hypertension: DEFAULT_ALERT_THRESHOLD,
    },
  };
}

export function storeToken(state: ViewState, token: string | null): void {
  state.token = token;
  if (token === null) sessionStorage.removeItem(TOKEN_KEY);
  else sessionStorage.setItem(TOKEN_KEY, token);
}
