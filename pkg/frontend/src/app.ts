/** Dashboard bootstrap: wires the editor and explorer to a live service.
 *
 * All model state lives server-side; the only client state is the
 * per-song scenario draft (persisted to localStorage by song id).
 */

import { ApiClient } from "./api.js";
import { renderSongView } from "./curve-explorer.js";
import { loadDraft, newDraft, serializeDraft, type ScenarioDraft } from "./drafts.js";
import { ScenarioEditor } from "./scenario-editor.js";
import type { FitDoc, PredictiveBands, SongCurves } from "./types.js";

export interface AppConfig {
  apiBase: string;
  defaultBudgetPerWeek?: number;
}

function draftKey(songId: string): string {
  return `streamdemand-draft:${songId}`;
}

export function restoreDraft(songId: string, storage: Storage): ScenarioDraft | null {
  const raw = storage.getItem(draftKey(songId));
  if (!raw) return null;
  try {
    return loadDraft(raw);
  } catch {
    return null;
  }
}

export async function mountDashboard(
  root: HTMLElement,
  config: AppConfig,
  fitIds: { nullFit: string; forcedFit?: string },
  songId: string,
): Promise<ScenarioEditor> {
  const doc = root.ownerDocument;
  const client = new ApiClient(config.apiBase);
  const song: SongCurves = await client.songCurves(songId);

  let forced: FitDoc | null = null;
  if (fitIds.forcedFit) {
    forced = await client.getFit(fitIds.forcedFit);
  }
  let bands: PredictiveBands | null = null;
  try {
    bands = await client.predictive(fitIds.nullFit);
  } catch {
    bands = null; // explorer renders without a band
  }

  root.textContent = "";
  const explorerRoot = doc.createElement("section");
  explorerRoot.setAttribute("data-role", "explorer");
  renderSongView(explorerRoot, {
    song,
    forcedFit: forced,
    bands,
    onRunFit: () => {
      void client
        .submitFit("forced", { song_id: songId })
        .then((job) => client.waitForJob(job.job_id));
    },
  });
  root.appendChild(explorerRoot);

  const editorRoot = doc.createElement("section");
  editorRoot.setAttribute("data-role", "editor");
  root.appendChild(editorRoot);

  const storage = root.ownerDocument.defaultView?.localStorage;
  const saved = storage ? restoreDraft(songId, storage) : null;
  const draft =
    saved ??
    newDraft({
      songId,
      fitId: fitIds.nullFit,
      horizon: song.horizon,
      segments: Object.keys(song.strata),
      channels: song.x_names.length ? song.x_names : ["channel-0"],
      capWeekly: new Array(song.horizon).fill(config.defaultBudgetPerWeek ?? 0.25),
    });
  const editor = new ScenarioEditor(editorRoot, client, draft, forced);

  if (storage) {
    editorRoot.addEventListener("input", () => {
      storage.setItem(draftKey(songId), serializeDraft(editor.draft));
    });
  }
  return editor;
}
