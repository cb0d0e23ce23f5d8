import { describe, expect, it } from "vitest";

import {
  budgetViolations,
  loadDraft,
  newDraft,
  prefillPhaseConstant,
  serializeDraft,
  setSpend,
  toRequest,
  weeklyTotals,
} from "../src/drafts.js";
import { FORCED_FIT } from "./fixtures.js";

function draft() {
  return newDraft({
    songId: "syn-001",
    fitId: "fit-null01",
    horizon: 4,
    segments: ["dsp-a", "dsp-b"],
    channels: ["radio"],
    capWeekly: [1, 1, 1, 1],
  });
}

describe("scenario drafts", () => {
  it("starts at zero spend with no violations", () => {
    const d = draft();
    expect(weeklyTotals(d)).toEqual([0, 0, 0, 0]);
    expect(budgetViolations(d)).toEqual([]);
  });

  it("sliders cannot go negative", () => {
    const d = setSpend(draft(), 0, 0, 0, -3);
    expect(d.spend[0]![0]![0]).toBe(0);
  });

  it("edits are immutable updates", () => {
    const d0 = draft();
    const d1 = setSpend(d0, 1, 1, 0, 0.4);
    expect(weeklyTotals(d0)[1]).toBe(0);
    expect(weeklyTotals(d1)[1]).toBeCloseTo(0.4, 12);
  });

  it("flags cap violations without clamping the proposal", () => {
    let d = draft();
    d = setSpend(d, 2, 0, 0, 0.8);
    d = setSpend(d, 2, 1, 0, 0.7);
    expect(budgetViolations(d)).toEqual([2]);
    expect(weeklyTotals(d)[2]).toBeCloseTo(1.5, 12);
    expect(toRequest(d).budget.weekly?.[2]).toBeCloseTo(1.5, 12);
  });

  it("save and reload reproduces an identical API request", () => {
    let d = draft();
    d = setSpend(d, 0, 0, 0, 0.25);
    d = setSpend(d, 3, 1, 0, 0.5);
    const restored = loadDraft(serializeDraft(d));
    expect(toRequest(restored)).toEqual(toRequest(d));
  });

  it("forced prefill copies each phase's first week across the phase", () => {
    let d = newDraft({
      songId: "syn-001",
      fitId: "fit-forced01",
      horizon: 8,
      segments: ["all"],
      channels: ["radio"],
      capWeekly: new Array(8).fill(1),
    });
    d = setSpend(d, 0, 0, 0, 0.3); // attack phase template
    d = setSpend(d, 4, 0, 0, 0.1); // sustain phase template
    const filled = prefillPhaseConstant(d, FORCED_FIT.envelope!);
    expect(filled.scheme).toBe("forced");
    // attack covers weeks 0..3, sustain week 4, decay 5..6, release 7
    expect(filled.spend.map((w) => w[0]![0])).toEqual([
      0.3, 0.3, 0.3, 0.3, 0.1, 0, 0, 0,
    ]);
  });
});
