import type { FetchLike } from "../src/api.js";
import type {
  FitDoc,
  PredictiveBands,
  SongCurves,
  WhatifResponse,
} from "../src/types.js";

export const SONG: SongCurves = {
  song_id: "syn-001",
  artist_id: "artist-x",
  release_date: "2021-01-04",
  horizon: 8,
  strata: {
    "dsp-a": [0, 120, 260, 310, 240, 150, 80, 20],
    "dsp-b": [0, 60, 140, 180, 130, 90, 40, 10],
  },
  aggregate: [0, 180, 400, 490, 370, 240, 120, 30],
  covariates: {
    x: [[0], [0.2], [0.5], [0.6], [0.4], [0.3], [0.1], [0]],
    z: [[0.3], [0.3], [0.3], [0.3], [0.3], [0.3], [0.3], [0.3]],
  },
  x_names: ["x_0"],
  z_names: ["z_0"],
};

export const FORCED_FIT: FitDoc = {
  fit_id: "fit-forced01",
  kind: "forced",
  song_id: "syn-001",
  seed: 3,
  envelope: {
    change_points: { tau_a: 3, tau_s: 4, tau_d: 6, tau_r: 7 },
    node_values: { mu_a: 490, mu_s: 370, mu_d: 120, },
    phase_alpha: [0, 850, 995, 840],
    phase_beta: [163.3, -120, -125, -120],
    omega: 25.5,
  },
};

export const NULL_FIT: FitDoc = {
  fit_id: "fit-null01",
  kind: "null",
  song_id: "syn-001",
  seed: 5,
  posterior_means: { theta: [[1.9], [1.4]], gamma: [[0.7], [0.5]], omega: [9.5, 11.2] },
  max_rhat: 1.01,
};

export const BANDS: PredictiveBands = {
  fit_id: "fit-null01",
  quantiles: [0.05, 0.5, 0.95],
  weeks: [0, 1, 2, 3, 4, 5, 6, 7],
  aggregate: [
    [0, 110, 300, 380, 280, 170, 70, 10],
    [0, 175, 405, 485, 375, 235, 115, 25],
    [0, 260, 520, 610, 480, 320, 180, 60],
  ],
  segments: [],
  mean_aggregate: [0, 178, 402, 488, 372, 238, 118, 27],
};

export function whatifResponse(args: {
  objective: number;
  baseline: number;
  horizon?: number;
  bands?: PredictiveBands | null;
}): WhatifResponse {
  const horizon = args.horizon ?? 8;
  return {
    plan: {
      plan_id: "plan-0001",
      fit_id: "fit-null01",
      scheme: "null",
      spend: Array.from({ length: horizon }, () => [[0]]),
      probabilities: Array.from({ length: horizon }, () => [0.2]),
      objective: args.objective,
      unspent: 0,
    },
    baseline_objective: args.baseline,
    objective_delta: args.objective - args.baseline,
    predictive: args.bands === undefined ? BANDS : args.bands,
  };
}

export interface RecordedCall {
  url: string;
  method: string;
  body: unknown;
}

/** A scriptable fetch: route -> responder (object payload or function). */
export function mockFetch(
  routes: Record<string, unknown | ((body: unknown) => unknown)>,
  calls: RecordedCall[] = [],
): { fetch: FetchLike; calls: RecordedCall[] } {
  const fetchImpl: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const body = init?.body ? JSON.parse(init.body as string) : undefined;
    calls.push({ url, method, body });
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const key = `${method} ${path}`;
    const responder = routes[key];
    if (responder === undefined) {
      return new Response(JSON.stringify({ error: `no route ${key}` }), {
        status: 404,
        headers: { "content-type": "application/json" },
      });
    }
    const payload =
      typeof responder === "function" ? await responder(body) : responder;
    if (payload instanceof Response) return payload;
    return new Response(JSON.stringify(payload), {
      status: 200,
      headers: { "content-type": "application/json" },
    });
  };
  return { fetch: fetchImpl, calls };
}
