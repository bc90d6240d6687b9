/** JSON payload shapes for the /api/v1 contract. */

export interface LoginResponse {
  token: string;
  expires_at: number;
}

export interface PatientSummary {
  patient_id: string;
  version: number;
  latest_risk: number | null;
}

export interface PatientList {
  patients: PatientSummary[];
  limit: number;
  offset: number;
}

export interface Demographics {
  age: number;
  sex: string;
}

export interface PatientRecord {
  patient_id: string;
  note: string;
  /** Measured analytes only, keyed by analyte name. */
  labs: Record<string, number>;
  demo: Demographics;
  labels?: Record<string, number>;
  onset_day?: number | null;
}

export interface PatientDetail {
  record: PatientRecord;
  version: number;
}

export interface RiskScores {
  diabetes: number;
  heart_disease: number;
  hypertension: number;
}

export type AttributionKind = "token_span" | "lab_analyte" | "demographic";

export interface Attribution {
  group_name: string;
  kind: AttributionKind;
  phi: number;
  stderr?: number;
  /** Character offsets [start, end) into the clinical note. */
  spans?: [number, number][];
}

export interface Explanation {
  target: string;
  baseline: number;
  prediction: number;
  mode: string;
  attributions: Attribution[];
  n_permutations?: number;
}

export interface Prediction {
  prediction_id: string;
  patient_id: string;
  created_at: number;
  model_version: string;
  risks: RiskScores;
  /** Diabetes onset probability keyed by horizon day ("90" to "360"). */
  horizons: Record<string, number>;
  explanation?: Explanation;
}

export type JobState = "pending" | "running" | "done" | "failed";

export interface Job {
  job_id: string;
  patient_id: string;
  with_explanation: boolean;
  state: JobState;
  submitted_at: number;
  finished_at: number | null;
  result: string | null;
  error: string | null;
  /** Present once the job is done. */
  prediction?: Prediction;
}

export interface HorizonBody {
  patient_id: string;
  horizons: Record<string, number>;
  created_at: number;
  model_version: string;
}

export interface RiskAlert {
  patient_id: string;
  disease: string;
  probability: number;
}

export interface AlertList {
  alerts: RiskAlert[];
}

export interface Health {
  status: string;
  model_version: string | null;
}
