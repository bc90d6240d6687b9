/** Risk panel: one entry per disease, percentage to one decimal, alert
 * styling once the probability reaches the disease's threshold. */

import { formatPercent } from "../format";
import { renderErrorBanner } from "./banner";

export const DISEASES = ["diabetes", "heart_disease", "hypertension"] as const;
export type Disease = (typeof DISEASES)[number];

export const DISEASE_LABELS: Record<Disease, string> = {
  diabetes: "Diabetes",
  heart_disease: "Heart disease",
  hypertension: "Hypertension",
};

export const DEFAULT_ALERT_THRESHOLD = 0.7;

export type RiskThresholds = Partial<Record<Disease, number>>;

/** Renders the panel, or an inline banner naming the first missing or
 * non-numeric field. Never throws on malformed payloads. */
export function renderRiskPanel(
  container: HTMLElement,
  payload: unknown,
  thresholds: RiskThresholds = {},
): void {
  if (payload === null || typeof payload !== "object") {
    renderErrorBanner(container, "risk payload is not an object");
    return;
  }
  const risks = payload as Record<string, unknown>;
  for (const disease of DISEASES) {
    const value = risks[disease];
    if (typeof value !== "number" || !Number.isFinite(value)) {
      renderErrorBanner(container, `risk payload is missing ${disease}`);
      return;
    }
  }

  container.replaceChildren();
  const panel = document.createElement("div");
  panel.className = "risk-panel";
  for (const disease of DISEASES) {
    const probability = risks[disease] as number;
    const threshold = thresholds[disease] ?? DEFAULT_ALERT_THRESHOLD;

    const entry = document.createElement("div");
    entry.className = "risk-entry";
    entry.dataset.disease = disease;
    entry.dataset.probability = String(probability);
    if (probability >= threshold) entry.classList.add("alert");

    const label = document.createElement("span");
    label.className = "risk-label";
    label.textContent = DISEASE_LABELS[disease];

    const value = document.createElement("span");
    value.className = "risk-value";
    value.textContent = formatPercent(probability);

    entry.append(label, value);
    panel.appendChild(entry);
  }
  container.appendChild(panel);
}
