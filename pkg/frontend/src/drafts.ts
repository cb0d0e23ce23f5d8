/** Scenario drafts: the only client-side state the dashboard keeps.
 *
 * A draft is the user's proposed spend grid (week x segment x channel)
 * plus the weekly budget caps it is judged against. Weekly sums are
 * draft bookkeeping for validation display; cap violations are
 * highlighted, never clamped, and the proposal is submitted as-is.
 */

import type { BudgetSpec, EnvelopeDoc, WhatifRequest } from "./types.js";

export interface ScenarioDraft {
  songId: string;
  fitId: string;
  scheme: "null" | "forced";
  horizon: number;
  segments: string[];
  channels: string[];
  /** proposed spend sliders, weeks x segments x channels, all >= 0 */
  spend: number[][][];
  /** weekly budget caps the proposal is displayed against */
  capWeekly: number[];
  socialCap?: number;
  quantiles: number[];
  baselineScenarioId?: string;
}

export function newDraft(args: {
  songId: string;
  fitId: string;
  horizon: number;
  segments: string[];
  channels: string[];
  capWeekly: number[];
  scheme?: "null" | "forced";
  quantiles?: number[];
}): ScenarioDraft {
  const { horizon, segments, channels } = args;
  if (args.capWeekly.length !== horizon) {
    throw new Error(`capWeekly must have ${horizon} entries`);
  }
  return {
    songId: args.songId,
    fitId: args.fitId,
    scheme: args.scheme ?? "null",
    horizon,
    segments,
    channels,
    spend: Array.from({ length: horizon }, () =>
      segments.map(() => channels.map(() => 0)),
    ),
    capWeekly: [...args.capWeekly],
    quantiles: args.quantiles ?? [0.05, 0.5, 0.95],
  };
}

export function setSpend(
  draft: ScenarioDraft,
  week: number,
  segment: number,
  channel: number,
  value: number,
): ScenarioDraft {
  const spend = draft.spend.map((w) => w.map((s) => [...s]));
  spend[week]![segment]![channel] = Math.max(value, 0); // sliders cannot go negative
  return { ...draft, spend };
}

export function weeklyTotals(draft: ScenarioDraft): number[] {
  return draft.spend.map((week) =>
    week.reduce((acc, seg) => acc + seg.reduce((a, v) => a + v, 0), 0),
  );
}

/** Weeks whose proposed spend exceeds the cap; display-only, never clamped. */
export function budgetViolations(draft: ScenarioDraft): number[] {
  const totals = weeklyTotals(draft);
  return totals.flatMap((total, week) =>
    total > (draft.capWeekly[week] ?? 0) + 1e-9 ? [week] : [],
  );
}

/** The proposal becomes the weekly budget path the optimizer works under. */
export function toRequest(draft: ScenarioDraft): WhatifRequest {
  const budget: BudgetSpec = { weekly: weeklyTotals(draft) };
  if (draft.socialCap !== undefined) budget.social_cap = draft.socialCap;
  return {
    fit_id: draft.fitId,
    budget,
    scheme: draft.scheme,
    quantiles: [...draft.quantiles],
  };
}

export function serializeDraft(draft: ScenarioDraft): string {
  return JSON.stringify(draft);
}

export function loadDraft(text: string): ScenarioDraft {
  const parsed = JSON.parse(text) as ScenarioDraft;
  if (!Array.isArray(parsed.spend) || parsed.spend.length !== parsed.horizon) {
    throw new Error("draft spend grid does not match its horizon");
  }
  return parsed;
}

/** Copy each phase's first-week spend across the phase (forced-scheme prefill). */
export function prefillPhaseConstant(
  draft: ScenarioDraft,
  envelope: EnvelopeDoc,
): ScenarioDraft {
  const { tau_a, tau_s, tau_d, tau_r } = envelope.change_points;
  const bounds = [0, tau_a + 1, tau_s + 1, tau_d + 1, Math.min(tau_r + 1, draft.horizon)];
  const spend = draft.spend.map((w) => w.map((s) => [...s]));
  for (let phase = 0; phase < 4; phase += 1) {
    const lo = bounds[phase]!;
    const hi = bounds[phase + 1]!;
    if (lo >= draft.horizon) break;
    const template = spend[lo]!;
    for (let t = lo + 1; t < hi; t += 1) {
      spend[t] = template.map((seg) => [...seg]);
    }
  }
  return { ...draft, spend, scheme: "forced" };
}
