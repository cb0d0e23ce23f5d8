/** The what-if scenario editor.
 *
 * Slider edits debounce into POST /optimize/whatif; the response renders
 * the predictive quantile fan, phase markers for forced fits, and the
 * objective delta against the zero-spend baseline. Responses are tagged
 * with request sequence numbers so a stale reply can never overwrite a
 * newer one; API failures raise a non-blocking banner and leave the
 * draft untouched.
 */

import type { ApiClient } from "./api.js";
import {
  addBand,
  addPolyline,
  addWeekMarker,
  drawingCeiling,
  svgElement,
} from "./charts.js";
import {
  budgetViolations,
  prefillPhaseConstant,
  setSpend,
  toRequest,
  weeklyTotals,
  type ScenarioDraft,
} from "./drafts.js";
import { formatNumeral } from "./format.js";
import type { FitDoc, WhatifResponse } from "./types.js";

export interface EditorOptions {
  debounceMs?: number;
  setTimeoutFn?: (fn: () => void, ms: number) => unknown;
  clearTimeoutFn?: (handle: unknown) => void;
}

export class ScenarioEditor {
  draft: ScenarioDraft;
  lastResponse: WhatifResponse | null = null;
  private seq = 0;
  private rendered = 0;
  private timer: unknown = null;
  private readonly debounceMs: number;
  private readonly setTimeoutFn: (fn: () => void, ms: number) => unknown;
  private readonly clearTimeoutFn: (handle: unknown) => void;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ApiClient,
    draft: ScenarioDraft,
    private readonly fit: FitDoc | null = null,
    options: EditorOptions = {},
  ) {
    this.draft = draft;
    this.debounceMs = options.debounceMs ?? 250;
    this.setTimeoutFn = options.setTimeoutFn ?? ((fn, ms) => setTimeout(fn, ms));
    this.clearTimeoutFn = options.clearTimeoutFn ?? ((h) => clearTimeout(h as number));
    this.renderSkeleton();
    this.renderDraft();
  }

  private section(role: string): HTMLElement {
    return this.root.querySelector(`[data-role="${role}"]`) as HTMLElement;
  }

  private renderSkeleton(): void {
    const doc = this.root.ownerDocument;
    this.root.textContent = "";
    for (const role of ["banner", "draft", "results"]) {
      const div = doc.createElement("div");
      div.setAttribute("data-role", role);
      this.root.appendChild(div);
    }
  }

  /** Apply one slider edit, refresh the grid, and schedule a submit. */
  edit(week: number, segment: number, channel: number, value: number): void {
    this.draft = setSpend(this.draft, week, segment, channel, value);
    this.renderDraft();
    this.scheduleSubmit();
  }

  /** Toggle the planning scheme; a forced fit prefills phase-constant spend. */
  setScheme(scheme: "null" | "forced"): void {
    if (scheme === "forced" && this.fit?.envelope) {
      this.draft = prefillPhaseConstant(this.draft, this.fit.envelope);
    } else {
      this.draft = { ...this.draft, scheme };
    }
    this.renderDraft();
    this.scheduleSubmit();
  }

  private scheduleSubmit(): void {
    if (this.timer !== null) this.clearTimeoutFn(this.timer);
    this.timer = this.setTimeoutFn(() => {
      this.timer = null;
      void this.submit();
    }, this.debounceMs);
  }

  /** Send the current draft; stale responses are discarded by sequence. */
  async submit(): Promise<void> {
    const seq = ++this.seq;
    try {
      const response = await this.client.whatif(toRequest(this.draft));
      if (seq < this.rendered || seq < this.seq) return; // a newer request won
      this.rendered = seq;
      this.lastResponse = response;
      this.clearBanner();
      this.renderResults(response);
    } catch (err) {
      if (seq < this.seq) return;
      this.showBanner(err instanceof Error ? err.message : String(err));
    }
  }

  private showBanner(message: string): void {
    const banner = this.section("banner");
    banner.textContent = `request failed: ${message}`;
    banner.setAttribute("data-state", "error");
  }

  private clearBanner(): void {
    const banner = this.section("banner");
    banner.textContent = "";
    banner.setAttribute("data-state", "ok");
  }

  /** Draft panel: slider grid plus weekly sums against the caps. */
  private renderDraft(): void {
    const doc = this.root.ownerDocument;
    const panel = this.section("draft");
    panel.textContent = "";

    const toggle = doc.createElement("div");
    toggle.setAttribute("data-role", "scheme");
    toggle.textContent = `scheme: ${this.draft.scheme}`;
    panel.appendChild(toggle);

    const violations = new Set(budgetViolations(this.draft));
    const totals = weeklyTotals(this.draft);
    const grid = doc.createElement("table");
    grid.setAttribute("data-role", "spend-grid");
    for (let t = 0; t < this.draft.horizon; t += 1) {
      const row = doc.createElement("tr");
      row.setAttribute("data-week", String(t));
      if (violations.has(t)) row.setAttribute("class", "over-budget");
      for (let j = 0; j < this.draft.segments.length; j += 1) {
        for (let c = 0; c < this.draft.channels.length; c += 1) {
          const cell = doc.createElement("td");
          const slider = doc.createElement("input");
          slider.setAttribute("type", "range");
          slider.setAttribute("min", "0");
          slider.setAttribute("step", "0.01");
          slider.setAttribute("data-week", String(t));
          slider.setAttribute("data-segment", String(j));
          slider.setAttribute("data-channel", String(c));
          slider.value = String(this.draft.spend[t]![j]![c]);
          slider.addEventListener("input", () => {
            this.edit(t, j, c, Number(slider.value));
          });
          cell.appendChild(slider);
          row.appendChild(cell);
        }
      }
      const sum = doc.createElement("td");
      sum.setAttribute("data-role", "weekly-sum");
      sum.textContent = `${formatNumeral(totals[t]!)} of ${formatNumeral(
        this.draft.capWeekly[t]!,
      )}`;
      row.appendChild(sum);
      grid.appendChild(row);
    }
    panel.appendChild(grid);
  }

  /** Results panel: objective delta, predictive fan, phase markers. */
  private renderResults(response: WhatifResponse): void {
    const doc = this.root.ownerDocument;
    const panel = this.section("results");
    panel.textContent = "";

    const objective = doc.createElement("div");
    objective.setAttribute("data-role", "objective");
    objective.textContent = `objective ${formatNumeral(response.plan.objective)}`;
    panel.appendChild(objective);

    const baseline = doc.createElement("div");
    baseline.setAttribute("data-role", "baseline");
    baseline.textContent = `baseline ${formatNumeral(response.baseline_objective)}`;
    panel.appendChild(baseline);

    const delta = doc.createElement("div");
    delta.setAttribute("data-role", "objective-delta");
    delta.textContent = formatNumeral(response.objective_delta);
    panel.appendChild(delta);

    const bands = response.predictive;
    if (bands) {
      const svg = svgElement(doc);
      svg.setAttribute("data-role", "fan-chart");
      const ceiling = drawingCeiling(bands.aggregate);
      if (bands.aggregate.length >= 2) {
        addBand(svg, bands.aggregate[0]!, bands.aggregate[bands.aggregate.length - 1]!,
                ceiling, { cls: "fan-band" });
      }
      const medianIdx = Math.floor(bands.aggregate.length / 2);
      addPolyline(svg, bands.aggregate[medianIdx]!, ceiling,
                  { stroke: "#1b4f9c", cls: "fan-median" });
      if (this.fit?.envelope) {
        const cp = this.fit.envelope.change_points;
        for (const tau of [cp.tau_a, cp.tau_s, cp.tau_d, cp.tau_r]) {
          addWeekMarker(svg, tau, bands.weeks.length, { cls: "phase-marker" });
        }
      }
      panel.appendChild(svg);

      const legend = doc.createElement("div");
      legend.setAttribute("data-role", "quantile-legend");
      legend.textContent = bands.quantiles
        .map((q) => formatNumeral(q))
        .join(" / ");
      panel.appendChild(legend);
    }

    if (this.fit?.envelope) {
      const cp = this.fit.envelope.change_points;
      const markers = doc.createElement("div");
      markers.setAttribute("data-role", "phase-markers");
      markers.textContent =
        `attack @ ${formatNumeral(cp.tau_a)} | sustain @ ${formatNumeral(cp.tau_s)}` +
        ` | decay @ ${formatNumeral(cp.tau_d)} | release @ ${formatNumeral(cp.tau_r)}`;
      panel.appendChild(markers);
    }
  }
}
