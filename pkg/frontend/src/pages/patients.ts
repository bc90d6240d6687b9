/** Patient record management: the roster, one patient's record, a note
 * editor, and a lab entry form that posts new measurements. */

import { ApiError } from "../api";
import { clearPage, isAbort, type AppContext } from "../app";
import { formatPercent } from "../format";
import type { RouteContext } from "../router";
import { renderErrorBanner } from "../views/banner";

export async function renderPatientListPage(
  app: AppContext,
  ctx: RouteContext,
): Promise<void> {
  const page = clearPage(app, "Patients");
  const status = document.createElement("div");
  page.appendChild(status);

  let listing;
  try {
    listing = await app.api.listPatients({ limit: 100, signal: ctx.signal });
  } catch (err) {
    if (isAbort(err)) return;
    renderErrorBanner(status, `could not load patients: ${message(err)}`);
    return;
  }

  if (listing.patients.length === 0) {
    const empty = document.createElement("p");
    empty.textContent = "No patients on file yet. Create one below.";
    page.appendChild(empty);
  } else {
    const table = document.createElement("table");
    table.className = "patient-list";
    table.innerHTML =
      "<thead><tr><th>Patient</th><th>Version</th><th>Latest risk</th></tr></thead>";
    const body = table.createTBody();
    for (const summary of listing.patients) {
      const row = body.insertRow();
      row.className = "patient-row";
      row.dataset.patientId = summary.patient_id;
      const id = row.insertCell();
      const link = document.createElement("a");
      link.href = `/patients/${encodeURIComponent(summary.patient_id)}`;
      link.textContent = summary.patient_id;
      link.addEventListener("click", (event) => {
        event.preventDefault();
        app.router.navigate(`/patients/${encodeURIComponent(summary.patient_id)}`);
      });
      id.appendChild(link);
      row.insertCell().textContent = String(summary.version);
      row.insertCell().textContent =
        summary.latest_risk === null ? "no prediction" : formatPercent(summary.latest_risk);
    }
    page.appendChild(table);
  }

  const create = document.createElement("form");
  create.className = "create-form";
  create.innerHTML = `
    <label>New patient id <input name="patient_id" required></label>
    <button type="submit">Open</button>
  `;
  create.addEventListener("submit", (event) => {
    event.preventDefault();
    const id = String(new FormData(create).get("patient_id") ?? "").trim();
    if (id) app.router.navigate(`/patients/${encodeURIComponent(id)}`);
  });
  page.appendChild(create);
}

export async function renderPatientDetailPage(
  app: AppContext,
  ctx: RouteContext,
): Promise<void> {
  const patientId = decodeURIComponent(ctx.params.id ?? "");
  app.state.selectedPatient = patientId;
  const page = clearPage(app, `Patient ${patientId}`);
  const status = document.createElement("div");
  status.className = "form-status";

  let record = {
    patient_id: patientId,
    note: "",
    labs: {} as Record<string, number>,
    demo: { age: 50, sex: "unknown" },
  };
  let found = true;
  try {
    const detail = await app.api.getPatient(patientId, ctx.signal);
    record = { ...record, ...detail.record };
  } catch (err) {
    if (isAbort(err)) return;
    if (err instanceof ApiError && err.status === 404) {
      found = false;
    } else {
      renderErrorBanner(status, `could not load patient: ${message(err)}`);
      page.appendChild(status);
      return;
    }
  }

  if (!found) {
    const fresh = document.createElement("p");
    fresh.textContent = "New patient. Fill in the record and save.";
    page.appendChild(fresh);
  }

  const form = document.createElement("form");
  form.className = "record-form";
  form.innerHTML = `
    <label>Clinical note
      <textarea name="note" rows="5"></textarea>
    </label>
    <label>Age <input name="age" type="number" min="0" max="120" required></label>
    <label>Sex
      <select name="sex">
        <option value="female">female</option>
        <option value="male">male</option>
        <option value="unknown">unknown</option>
      </select>
    </label>
    <button type="submit">Save record</button>
  `;
  (form.elements.namedItem("note") as HTMLTextAreaElement).value = record.note;
  (form.elements.namedItem("age") as HTMLInputElement).value = String(record.demo.age);
  (form.elements.namedItem("sex") as HTMLSelectElement).value = record.demo.sex;
  form.addEventListener("submit", async (event) => {
    event.preventDefault();
    const data = new FormData(form);
    try {
      await app.api.putPatient(patientId, {
        note: String(data.get("note") ?? ""),
        labs: record.labs,
        demo: {
          age: Number(data.get("age")),
          sex: String(data.get("sex") ?? "unknown"),
        },
      }, ctx.signal);
      app.router.navigate(`/patients/${encodeURIComponent(patientId)}`);
    } catch (err) {
      if (isAbort(err)) return;
      renderErrorBanner(status, `save failed: ${message(err)}`);
    }
  });
  page.appendChild(form);

  const labsHeading = document.createElement("h3");
  labsHeading.textContent = "Lab panel";
  page.appendChild(labsHeading);

  const measured = Object.entries(record.labs);
  if (measured.length === 0) {
    const none = document.createElement("p");
    none.textContent = "No measurements recorded.";
    page.appendChild(none);
  } else {
    const table = document.createElement("table");
    table.className = "lab-panel";
    table.innerHTML = "<thead><tr><th>Analyte</th><th>Value</th></tr></thead>";
    const body = table.createTBody();
    for (const [analyte, value] of measured.sort(([a], [b]) => a.localeCompare(b))) {
      const row = body.insertRow();
      row.insertCell().textContent = analyte;
      row.insertCell().textContent = String(value);
    }
    page.appendChild(table);
  }

  const labForm = document.createElement("form");
  labForm.className = "lab-form";
  labForm.innerHTML = `
    <label>Analyte <input name="analyte" placeholder="fasting_glucose" required></label>
    <label>Value <input name="value" type="number" step="any" required></label>
    <button type="submit">Add measurement</button>
  `;
  labForm.addEventListener("submit", async (event) => {
    event.preventDefault();
    const data = new FormData(labForm);
    const analyte = String(data.get("analyte") ?? "").trim();
    const value = Number(data.get("value"));
    try {
      await app.api.postLabs(patientId, { [analyte]: value }, ctx.signal);
      app.router.navigate(`/patients/${encodeURIComponent(patientId)}`);
    } catch (err) {
      if (isAbort(err)) return;
      renderErrorBanner(status, `measurement rejected: ${message(err)}`);
    }
  });
  page.appendChild(labForm);

  const actions = document.createElement("div");
  actions.className = "actions";
  const predict = document.createElement("button");
  predict.textContent = "Predict risk";
  predict.addEventListener("click", () => app.router.navigate("/predict"));
  const horizons = document.createElement("button");
  horizons.textContent = "Diabetes horizons";
  horizons.addEventListener("click", () => app.router.navigate("/horizons"));
  actions.append(predict, horizons);
  page.append(actions, status);
}

function message(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}
