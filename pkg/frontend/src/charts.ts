/** SVG chart construction.
 *
 * Geometry only: series are scaled into the viewport to draw paths, but
 * no derived quantity is ever rendered as text. Textual numerals shown
 * next to a chart are payload values passed through formatNumeral by
 * the calling component.
 */

const SVG_NS = "http://www.w3.org/2000/svg";

export interface ChartBox {
  width: number;
  height: number;
  pad: number;
}

export const DEFAULT_BOX: ChartBox = { width: 420, height: 180, pad: 8 };

export function svgElement(doc: Document, box: ChartBox = DEFAULT_BOX): SVGSVGElement {
  const svg = doc.createElementNS(SVG_NS, "svg") as SVGSVGElement;
  svg.setAttribute("viewBox", `0 0 ${box.width} ${box.height}`);
  svg.setAttribute("width", String(box.width));
  svg.setAttribute("height", String(box.height));
  return svg;
}

function scale(values: number[], box: ChartBox, maxValue: number): Array<[number, number]> {
  const innerW = box.width - 2 * box.pad;
  const innerH = box.height - 2 * box.pad;
  const n = Math.max(values.length - 1, 1);
  const top = maxValue > 0 ? maxValue : 1;
  return values.map((v, i) => [
    box.pad + (i / n) * innerW,
    box.pad + innerH - (Math.min(Math.max(v, 0), top) / top) * innerH,
  ]);
}

function pointsAttr(points: Array<[number, number]>): string {
  return points.map(([x, y]) => `${x.toFixed(2)},${y.toFixed(2)}`).join(" ");
}

export function addPolyline(
  svg: SVGSVGElement,
  values: number[],
  maxValue: number,
  options: { stroke?: string; dash?: string; cls?: string } = {},
  box: ChartBox = DEFAULT_BOX,
): void {
  const line = svg.ownerDocument.createElementNS(SVG_NS, "polyline");
  line.setAttribute("points", pointsAttr(scale(values, box, maxValue)));
  line.setAttribute("fill", "none");
  line.setAttribute("stroke", options.stroke ?? "#222");
  if (options.dash) line.setAttribute("stroke-dasharray", options.dash);
  if (options.cls) line.setAttribute("class", options.cls);
  svg.appendChild(line);
}

export function addBand(
  svg: SVGSVGElement,
  lower: number[],
  upper: number[],
  maxValue: number,
  options: { fill?: string; cls?: string } = {},
  box: ChartBox = DEFAULT_BOX,
): void {
  const lo = scale(lower, box, maxValue);
  const hi = scale(upper, box, maxValue);
  const poly = svg.ownerDocument.createElementNS(SVG_NS, "polygon");
  poly.setAttribute("points", pointsAttr([...hi, ...lo.reverse()]));
  poly.setAttribute("fill", options.fill ?? "rgba(60,120,216,0.25)");
  poly.setAttribute("stroke", "none");
  if (options.cls) poly.setAttribute("class", options.cls);
  svg.appendChild(poly);
}

export function addWeekMarker(
  svg: SVGSVGElement,
  week: number,
  horizon: number,
  options: { cls?: string } = {},
  box: ChartBox = DEFAULT_BOX,
): void {
  const innerW = box.width - 2 * box.pad;
  const x = box.pad + (week / Math.max(horizon - 1, 1)) * innerW;
  const line = svg.ownerDocument.createElementNS(SVG_NS, "line");
  line.setAttribute("x1", x.toFixed(2));
  line.setAttribute("x2", x.toFixed(2));
  line.setAttribute("y1", String(box.pad));
  line.setAttribute("y2", String(box.height - box.pad));
  line.setAttribute("stroke", "#c02020");
  line.setAttribute("stroke-dasharray", "3,3");
  if (options.cls) line.setAttribute("class", options.cls);
  svg.appendChild(line);
}

/** Viewport ceiling for a set of series (drawing scale, never displayed). */
export function drawingCeiling(seriesList: number[][]): number {
  let top = 0;
  for (const series of seriesList) {
    for (const v of series) top = Math.max(top, v);
  }
  return top;
}
