/** Read-only views over stored demand: cluster gallery and per-song page.
 *
 * Every textual number comes from a payload field; the charts scale the
 * same payload series into SVG geometry. Songs without a fitted envelope
 * get a prompt to run the fit instead of an empty overlay.
 */

import {
  addBand,
  addPolyline,
  addWeekMarker,
  drawingCeiling,
  svgElement,
} from "./charts.js";
import { formatNumeral } from "./format.js";
import type { FitDoc, PredictiveBands, SongCurves } from "./types.js";

export function renderClusterGallery(root: HTMLElement, classifyDoc: FitDoc): void {
  const doc = root.ownerDocument;
  root.textContent = "";
  const clusters = classifyDoc.clusters ?? [];
  if (!clusters.length) {
    const empty = doc.createElement("div");
    empty.setAttribute("data-role", "empty-state");
    empty.textContent = "no listening modes yet: classify the corpus first";
    root.appendChild(empty);
    return;
  }
  for (const [index, cluster] of clusters.entries()) {
    const card = doc.createElement("div");
    card.setAttribute("data-role", "cluster-card");
    card.setAttribute("data-cluster", String(index));

    const svg = svgElement(doc, { width: 180, height: 70, pad: 4 });
    svg.setAttribute("data-role", "centroid-sparkline");
    addPolyline(svg, cluster.centroid, drawingCeiling([cluster.centroid]),
                { stroke: "#1b4f9c" }, { width: 180, height: 70, pad: 4 });
    card.appendChild(svg);

    const inertia = doc.createElement("div");
    inertia.setAttribute("data-role", "inertia");
    inertia.textContent = `inertia ${formatNumeral(cluster.inertia)}`;
    card.appendChild(inertia);

    const members = doc.createElement("ul");
    members.setAttribute("data-role", "members");
    for (const songId of cluster.members) {
      const item = doc.createElement("li");
      item.textContent = songId;
      members.appendChild(item);
    }
    card.appendChild(members);
    root.appendChild(card);
  }
}

export interface SongViewInputs {
  song: SongCurves;
  forcedFit: FitDoc | null;
  bands: PredictiveBands | null;
  onRunFit?: () => void;
}

export function renderSongView(root: HTMLElement, inputs: SongViewInputs): void {
  const doc = root.ownerDocument;
  const { song, forcedFit, bands } = inputs;
  root.textContent = "";

  const header = doc.createElement("h2");
  header.textContent = song.song_id;
  root.appendChild(header);

  const seriesForScale: number[][] = [song.aggregate];
  if (bands) seriesForScale.push(...bands.aggregate);
  const ceiling = drawingCeiling(seriesForScale);

  const svg = svgElement(doc);
  svg.setAttribute("data-role", "song-chart");
  if (bands && bands.aggregate.length >= 2) {
    addBand(svg, bands.aggregate[0]!, bands.aggregate[bands.aggregate.length - 1]!,
            ceiling, { cls: "demand-band" });
  }
  addPolyline(svg, song.aggregate, ceiling, { stroke: "#111", cls: "observed" });

  if (forcedFit?.envelope) {
    const env = forcedFit.envelope;
    const cp = env.change_points;
    // the envelope polyline through its five nodes, on the weekly grid
    const overlay: number[] = new Array<number>(song.horizon).fill(0);
    const knotWeeks = [0, cp.tau_a, cp.tau_s, cp.tau_d, cp.tau_r];
    const knotValues = [0, env.node_values.mu_a, env.node_values.mu_s,
                        env.node_values.mu_d, 0];
    for (let t = 0; t < song.horizon; t += 1) {
      for (let k = 0; k + 1 < knotWeeks.length; k += 1) {
        const lo = knotWeeks[k]!;
        const hi = knotWeeks[k + 1]!;
        if (t >= lo && t <= hi && hi > lo) {
          const lam = (t - lo) / (hi - lo);
          overlay[t] = knotValues[k]! * (1 - lam) + knotValues[k + 1]! * lam;
          break;
        }
      }
    }
    addPolyline(svg, overlay, ceiling, { stroke: "#c02020", dash: "4,3",
                                         cls: "envelope-overlay" });
    for (const tau of [cp.tau_a, cp.tau_s, cp.tau_d, cp.tau_r]) {
      addWeekMarker(svg, tau, song.horizon, { cls: "phase-marker" });
    }
  }
  root.appendChild(svg);

  if (forcedFit?.envelope) {
    const cp = forcedFit.envelope.change_points;
    const nodes = forcedFit.envelope.node_values;
    const caption = doc.createElement("div");
    caption.setAttribute("data-role", "envelope-caption");
    caption.textContent =
      `phases at ${formatNumeral(cp.tau_a)}, ${formatNumeral(cp.tau_s)}, ` +
      `${formatNumeral(cp.tau_d)}, ${formatNumeral(cp.tau_r)}; ` +
      `peak ${formatNumeral(nodes.mu_a)}`;
    root.appendChild(caption);
  } else {
    const prompt = doc.createElement("div");
    prompt.setAttribute("data-role", "fit-prompt");
    prompt.textContent = "no envelope fit for this song yet";
    const button = doc.createElement("button");
    button.textContent = "run envelope fit";
    button.addEventListener("click", () => inputs.onRunFit?.());
    prompt.appendChild(button);
    root.appendChild(prompt);
  }

  if (bands) {
    const legend = doc.createElement("div");
    legend.setAttribute("data-role", "quantile-legend");
    legend.textContent = bands.quantiles.map((q) => formatNumeral(q)).join(" / ");
    root.appendChild(legend);
  }
}
