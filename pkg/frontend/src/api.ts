/** Typed fetch client for the clinic API. Every endpoint except login and
 * healthz requires the bearer token obtained from login. */

import type {
  AlertList,
  Health,
  HorizonBody,
  Job,
  LoginResponse,
  PatientDetail,
  PatientList,
  PatientRecord,
} from "./types";

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

export interface AlertThresholds {
  diabetes?: number;
  heart?: number;
  hypertension?: number;
}

export class ApiClient {
  token: string | null = null;

  /** baseUrl is empty in the browser (same origin); tests point it at a
   * concrete host:port. */
  constructor(readonly baseUrl: string = "") {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    signal?: AbortSignal,
  ): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers["Content-Type"] = "application/json";
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    const resp = await fetch(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
      signal,
    });
    const text = await resp.text();
    let parsed: unknown = null;
    if (text) {
      try {
        parsed = JSON.parse(text);
      } catch {
        parsed = null;
      }
    }
    if (!resp.ok) {
      const envelope = parsed as { error?: unknown } | null;
      const message =
        envelope && typeof envelope.error === "string"
          ? envelope.error
          : `request failed with status ${resp.status}`;
      throw new ApiError(resp.status, message);
    }
    return parsed as T;
  }

  async login(user: string, pass: string): Promise<LoginResponse> {
    const out = await this.request<LoginResponse>("POST", "/api/v1/login", {
      user,
      pass,
    });
    this.token = out.token;
    return out;
  }

  health(signal?: AbortSignal): Promise<Health> {
    return this.request("GET", "/api/v1/healthz", undefined, signal);
  }

  listPatients(
    opts: { limit?: number; offset?: number; signal?: AbortSignal } = {},
  ): Promise<PatientList> {
    const query = new URLSearchParams();
    if (opts.limit !== undefined) query.set("limit", String(opts.limit));
    if (opts.offset !== undefined) query.set("offset", String(opts.offset));
    const suffix = query.toString() ? `?${query}` : "";
    return this.request("GET", `/api/v1/patients${suffix}`, undefined, opts.signal);
  }

  getPatient(id: string, signal?: AbortSignal): Promise<PatientDetail> {
    return this.request(
      "GET", `/api/v1/patients/${encodeURIComponent(id)}`, undefined, signal);
  }

  putPatient(
    id: string,
    record: Omit<PatientRecord, "patient_id"> & { patient_id?: string },
    signal?: AbortSignal,
  ): Promise<{ patient_id: string; version: number }> {
    return this.request(
      "PUT", `/api/v1/patients/${encodeURIComponent(id)}`, record, signal);
  }

  postLabs(
    id: string,
    measurements: Record<string, number>,
    signal?: AbortSignal,
  ): Promise<{ patient_id: string; version: number }> {
    return this.request(
      "POST",
      `/api/v1/patients/${encodeURIComponent(id)}/labs`,
      { measurements },
      signal,
    );
  }

  submitPrediction(
    id: string,
    explain: boolean,
    signal?: AbortSignal,
  ): Promise<{ job_id: string }> {
    const query = explain ? "?explain=true" : "";
    return this.request(
      "POST",
      `/api/v1/patients/${encodeURIComponent(id)}/predict${query}`,
      undefined,
      signal,
    );
  }

  getJob(id: string, signal?: AbortSignal): Promise<Job> {
    return this.request(
      "GET", `/api/v1/jobs/${encodeURIComponent(id)}`, undefined, signal);
  }

  getHorizons(id: string, signal?: AbortSignal): Promise<HorizonBody> {
    return this.request(
      "GET",
      `/api/v1/patients/${encodeURIComponent(id)}/horizons`,
      undefined,
      signal,
    );
  }

  getAlerts(
    thresholds: AlertThresholds = {},
    signal?: AbortSignal,
  ): Promise<AlertList> {
    const query = new URLSearchParams();
    if (thresholds.diabetes !== undefined)
      query.set("diabetes", String(thresholds.diabetes));
    if (thresholds.heart !== undefined)
      query.set("heart", String(thresholds.heart));
    if (thresholds.hypertension !== undefined)
      query.set("hypertension", String(thresholds.hypertension));
    const suffix = query.toString() ? `?${query}` : "";
    return this.request("GET", `/api/v1/alerts${suffix}`, undefined, signal);
  }
}
