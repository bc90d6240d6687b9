/** Diabetes onset bar chart: four fixed horizons on a 0 to 100% axis.
 * Bar heights are percentage heights inside a fixed-height plot area, so
 * they stay proportional to the server's probabilities. */

import { formatPercent } from "../format";
import { renderErrorBanner } from "./banner";

export const HORIZON_DAYS = ["90", "180", "270", "360"] as const;

const AXIS_TICKS = [100, 75, 50, 25, 0];

export function renderHorizonChart(
  container: HTMLElement,
  horizons: unknown,
): void {
  if (horizons === null || typeof horizons !== "object") {
    renderErrorBanner(container, "horizon payload is not an object");
    return;
  }
  const table = horizons as Record<string, unknown>;
  for (const day of HORIZON_DAYS) {
    const value = table[day];
    if (typeof value !== "number" || !Number.isFinite(value)) {
      renderErrorBanner(container, `horizon payload is missing ${day}`);
      return;
    }
  }

  const values = HORIZON_DAYS.map((day) => table[day] as number);
  // The backend owns monotonicity; a violation here still renders.
  for (let i = 1; i < values.length; i++) {
    if (values[i] < values[i - 1]) {
      console.warn(
        `horizon probabilities are not non-decreasing: ` +
          `${HORIZON_DAYS[i - 1]}d=${values[i - 1]} > ${HORIZON_DAYS[i]}d=${values[i]}`,
      );
      break;
    }
  }

  container.replaceChildren();
  const chart = document.createElement("div");
  chart.className = "horizon-chart";

  const axis = document.createElement("div");
  axis.className = "horizon-axis";
  for (const tick of AXIS_TICKS) {
    const mark = document.createElement("span");
    mark.className = "axis-tick";
    mark.textContent = `${tick}%`;
    axis.appendChild(mark);
  }
  chart.appendChild(axis);

  const plot = document.createElement("div");
  plot.className = "horizon-plot";
  HORIZON_DAYS.forEach((day, i) => {
    const probability = values[i];

    const slot = document.createElement("div");
    slot.className = "horizon-slot";

    const area = document.createElement("div");
    area.className = "bar-area";

    const bar = document.createElement("div");
    bar.className = "horizon-bar";
    bar.dataset.day = day;
    bar.dataset.probability = String(probability);
    bar.style.height = `${probability * 100}%`;
    bar.title = `${day} days: ${formatPercent(probability)}`;

    const value = document.createElement("span");
    value.className = "bar-value";
    value.textContent = formatPercent(probability);
    bar.appendChild(value);

    const label = document.createElement("span");
    label.className = "bar-day";
    label.textContent = `${day}d`;

    area.appendChild(bar);
    slot.append(area, label);
    plot.appendChild(slot);
  });
  chart.appendChild(plot);
  container.appendChild(chart);
}
