/** Numeral rendering.
 *
 * The dashboard is a thin client: every model numeral on screen is a
 * payload value passed through this one function, so tests can verify
 * that each rendered number exists verbatim in the mocked response.
 */

export function formatNumeral(value: number): string {
  return String(value);
}

/** All numbers reachable inside a JSON payload, formatted for display. */
export function payloadNumerals(payload: unknown, out = new Set<string>()): Set<string> {
  if (typeof payload === "number" && Number.isFinite(payload)) {
    out.add(formatNumeral(payload));
  } else if (Array.isArray(payload)) {
    for (const item of payload) payloadNumerals(item, out);
  } else if (payload !== null && typeof payload === "object") {
    for (const value of Object.values(payload)) payloadNumerals(value, out);
  }
  return out;
}

/** Numerals appearing in rendered text (integers and decimals).
 *
 * Text nodes are joined with spaces so numerals in adjacent elements
 * never merge across element boundaries.
 */
export function renderedNumerals(
  root: { textContent: string | null; childNodes?: ArrayLike<unknown> },
): string[] {
  const text = collectText(root);
  return text.match(/-?\d+(?:\.\d+)?(?:e[+-]?\d+)?/gi) ?? [];
}

function collectText(node: {
  textContent: string | null;
  childNodes?: ArrayLike<unknown>;
}): string {
  const children = node.childNodes;
  if (!children || children.length === 0) {
    return node.textContent ?? "";
  }
  const parts: string[] = [];
  for (let i = 0; i < children.length; i += 1) {
    parts.push(collectText(children[i] as { textContent: string | null }));
  }
  return parts.join(" ");
}
