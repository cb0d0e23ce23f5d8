/** Payload shapes of the demand-service JSON API. */

export interface SongCurves {
  song_id: string;
  artist_id: string;
  release_date: string;
  horizon: number;
  strata: Record<string, number[]>;
  aggregate: number[];
  covariates: { x: number[][]; z: number[][] };
  x_names: string[];
  z_names: string[];
}

export interface ChangePointsDoc {
  tau_a: number;
  tau_s: number;
  tau_d: number;
  tau_r: number;
}

export interface EnvelopeDoc {
  change_points: ChangePointsDoc;
  node_values: { mu_a: number; mu_s: number; mu_d: number };
  phase_alpha: number[];
  phase_beta: number[];
  omega: number;
}

export interface FitDoc {
  fit_id: string;
  kind: "null" | "forced" | "classify";
  song_id?: string;
  seed?: number;
  envelope?: EnvelopeDoc;
  posterior_means?: { theta: number[][]; gamma: number[][]; omega: number[] };
  max_rhat?: number;
  warnings?: string[];
  clusters?: ClusterDoc[];
  k?: number;
}

export interface ClusterDoc {
  centroid: number[];
  members: string[];
  inertia: number;
}

export interface PredictiveBands {
  fit_id: string;
  quantiles: number[];
  weeks: number[];
  aggregate: number[][];
  segments: number[][][];
  mean_aggregate: number[];
}

export interface PlanDoc {
  plan_id: string;
  fit_id: string;
  scheme: "null" | "forced";
  spend: number[][][];
  probabilities: number[][];
  objective: number;
  unspent: number;
}

export interface WhatifResponse {
  plan: PlanDoc;
  baseline_objective: number;
  objective_delta: number;
  predictive: PredictiveBands | null;
}

export interface JobStatus {
  job_id: string;
  status: "queued" | "running" | "done" | "failed";
  result?: unknown;
  error?: string;
}

export interface BudgetSpec {
  total?: number;
  weekly?: number[];
  social_cap?: number;
}

export interface WhatifRequest {
  fit_id: string;
  budget: BudgetSpec;
  scheme: "null" | "forced";
  z_path?: number[][];
  quantiles?: number[];
}
