/** Chronic disease prediction: submit an async job for the selected
 * patient, poll it to a terminal state, then show the risk panel, the
 * horizon chart, and the note with attribution highlights. */

import { clearPage, isAbort, type AppContext } from "../app";
import { pollJob } from "../poll";
import type { RouteContext } from "../router";
import { renderErrorBanner } from "../views/banner";
import { renderHorizonChart } from "../views/horizon";
import { renderNoteHighlights } from "../views/highlights";
import { renderRiskPanel } from "../views/risk";

export async function renderPredictPage(
  app: AppContext,
  ctx: RouteContext,
): Promise<void> {
  const page = clearPage(app, "Risk prediction");

  const form = document.createElement("form");
  form.className = "predict-form";
  form.innerHTML = `
    <label>Patient id <input name="patient_id" required></label>
    <label class="checkbox">
      <input name="explain" type="checkbox" checked> Explain the prediction
    </label>
    <button type="submit">Submit prediction job</button>
  `;
  const patientInput = form.elements.namedItem("patient_id") as HTMLInputElement;
  if (app.state.selectedPatient) patientInput.value = app.state.selectedPatient;

  const status = document.createElement("div");
  status.className = "poll-status";
  const riskMount = document.createElement("div");
  riskMount.className = "risk-mount";
  const horizonMount = document.createElement("div");
  horizonMount.className = "horizon-mount";
  const noteMount = document.createElement("div");
  noteMount.className = "note-mount";
  page.append(form, status, riskMount, horizonMount, noteMount);

  form.addEventListener("submit", async (event) => {
    event.preventDefault();
    const data = new FormData(form);
    const patientId = String(data.get("patient_id") ?? "").trim();
    const explain = data.get("explain") !== null;
    if (!patientId) return;
    app.state.selectedPatient = patientId;
    riskMount.replaceChildren();
    horizonMount.replaceChildren();
    noteMount.replaceChildren();

    try {
      const { job_id } = await app.api.submitPrediction(
        patientId, explain, ctx.signal);
      app.state.lastJobId = job_id;
      status.textContent = `job ${job_id}: submitted`;

      const job = await pollJob(app.api, job_id, {
        signal: ctx.signal,
        onUpdate: (update) => {
          app.state.pollStatus = update.state;
          status.textContent = `job ${job_id}: ${update.state}`;
        },
      });

      if (job.state === "failed") {
        renderErrorBanner(riskMount, `prediction failed: ${job.error ?? "unknown error"}`);
        return;
      }
      const prediction = job.prediction;
      if (!prediction) {
        renderErrorBanner(riskMount, "job finished without a prediction body");
        return;
      }

      renderRiskPanel(riskMount, prediction.risks, app.state.thresholds);
      renderHorizonChart(horizonMount, prediction.horizons);

      if (prediction.explanation) {
        const detail = await app.api.getPatient(patientId, ctx.signal);
        renderNoteHighlights(noteMount, detail.record.note, prediction.explanation);
      }
    } catch (err) {
      if (isAbort(err)) return;
      renderErrorBanner(
        status, `prediction failed: ${err instanceof Error ? err.message : String(err)}`);
    }
  });
}
