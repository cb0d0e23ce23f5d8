export { ApiClient, ApiError, type FetchLike } from "./api.js";
export {
  budgetViolations,
  loadDraft,
  newDraft,
  prefillPhaseConstant,
  serializeDraft,
  setSpend,
  toRequest,
  weeklyTotals,
  type ScenarioDraft,
} from "./drafts.js";
export { formatNumeral, payloadNumerals, renderedNumerals } from "./format.js";
export { ScenarioEditor, type EditorOptions } from "./scenario-editor.js";
export { renderClusterGallery, renderSongView } from "./curve-explorer.js";
export * from "./types.js";
