/** Risk alerts: patients whose latest prediction crosses the per-disease
 * thresholds. Thresholds are client configuration with a 0.7 default. */

import { clearPage, isAbort, type AppContext } from "../app";
import { formatPercent } from "../format";
import type { RouteContext } from "../router";
import { renderErrorBanner } from "../views/banner";
import { DISEASE_LABELS, type Disease } from "../views/risk";

export async function renderAlertsPage(
  app: AppContext,
  ctx: RouteContext,
): Promise<void> {
  const page = clearPage(app, "Risk alerts");

  const form = document.createElement("form");
  form.className = "threshold-form";
  form.innerHTML = `
    <label>Diabetes
      <input name="diabetes" type="number" min="0" max="1" step="0.05"></label>
    <label>Heart disease
      <input name="heart" type="number" min="0" max="1" step="0.05"></label>
    <label>Hypertension
      <input name="hypertension" type="number" min="0" max="1" step="0.05"></label>
    <button type="submit">Apply thresholds</button>
  `;
  for (const key of ["diabetes", "heart", "hypertension"] as const) {
    (form.elements.namedItem(key) as HTMLInputElement).value =
      String(app.state.thresholds[key]);
  }

  const mount = document.createElement("div");
  mount.className = "alerts-mount";
  page.append(form, mount);

  async function load(): Promise<void> {
    mount.textContent = "Loading alerts";
    let alerts;
    try {
      ({ alerts } = await app.api.getAlerts(app.state.thresholds, ctx.signal));
    } catch (err) {
      if (isAbort(err)) return;
      renderErrorBanner(
        mount, `could not load alerts: ${err instanceof Error ? err.message : String(err)}`);
      return;
    }
    mount.replaceChildren();
    if (alerts.length === 0) {
      const none = document.createElement("p");
      none.textContent = "No patients above the thresholds.";
      mount.appendChild(none);
      return;
    }
    const table = document.createElement("table");
    table.className = "alert-list";
    table.innerHTML =
      "<thead><tr><th>Patient</th><th>Disease</th><th>Probability</th></tr></thead>";
    const body = table.createTBody();
    for (const alert of alerts) {
      const row = body.insertRow();
      row.className = "alert-row";
      const id = row.insertCell();
      const link = document.createElement("a");
      link.href = `/patients/${encodeURIComponent(alert.patient_id)}`;
      link.textContent = alert.patient_id;
      link.addEventListener("click", (event) => {
        event.preventDefault();
        app.router.navigate(`/patients/${encodeURIComponent(alert.patient_id)}`);
      });
      id.appendChild(link);
      row.insertCell().textContent =
        DISEASE_LABELS[alert.disease as Disease] ?? alert.disease;
      row.insertCell().textContent = formatPercent(alert.probability);
    }
    mount.appendChild(table);
  }

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const data = new FormData(form);
    for (const key of ["diabetes", "heart", "hypertension"] as const) {
      const value = Number(data.get(key));
      if (Number.isFinite(value) && value >= 0 && value <= 1) {
        app.state.thresholds[key] = value;
      }
    }
    void load();
  });

  await load();
}
