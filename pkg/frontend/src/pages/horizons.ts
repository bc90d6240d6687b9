/** Early diabetes horizons: the latest stored prediction's onset
 * probabilities for one patient as a four-bar chart. */

import { clearPage, isAbort, type AppContext } from "../app";
import { formatTimestamp } from "../format";
import type { RouteContext } from "../router";
import { renderErrorBanner } from "../views/banner";
import { renderHorizonChart } from "../views/horizon";

export async function renderHorizonsPage(
  app: AppContext,
  ctx: RouteContext,
): Promise<void> {
  const page = clearPage(app, "Early diabetes horizons");

  const form = document.createElement("form");
  form.className = "horizons-form";
  form.innerHTML = `
    <label>Patient id <input name="patient_id" required></label>
    <button type="submit">Load horizons</button>
  `;
  const patientInput = form.elements.namedItem("patient_id") as HTMLInputElement;
  if (app.state.selectedPatient) patientInput.value = app.state.selectedPatient;

  const meta = document.createElement("p");
  meta.className = "horizon-meta";
  const mount = document.createElement("div");
  mount.className = "horizon-mount";
  page.append(form, meta, mount);

  async function load(patientId: string): Promise<void> {
    try {
      const body = await app.api.getHorizons(patientId, ctx.signal);
      meta.textContent =
        `Latest prediction from ${formatTimestamp(body.created_at)} ` +
        `(model ${body.model_version})`;
      renderHorizonChart(mount, body.horizons);
    } catch (err) {
      if (isAbort(err)) return;
      meta.textContent = "";
      renderErrorBanner(
        mount, `could not load horizons: ${err instanceof Error ? err.message : String(err)}`);
    }
  }

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const patientId =
      String(new FormData(form).get("patient_id") ?? "").trim();
    if (!patientId) return;
    app.state.selectedPatient = patientId;
    void load(patientId);
  });

  if (app.state.selectedPatient) await load(app.state.selectedPatient);
}
