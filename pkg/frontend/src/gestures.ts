// Gesture geometry → wire-schema manipulations.
//
// Every function here is self-contained (no imports, no closures) because
// the sandbox harness injects their source into the chart frame, where the
// live scale pair and the hit elements exist.

import type { WireManipulation } from "./wire";

export interface PixelRect {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

export interface ScaleView {
  // pixel extent covered by the scale's range, in canvas coordinates
  rangePx: [number, number];
  // pixel → data value (linear/time scales); band scales have no inverse
  invert?: (px: number) => number | string;
}

export interface ElementHit {
  tag: string;
  datum: Record<string, unknown>;
}

export function extentFraction(pxLow: number, pxHigh: number, rangePx: [number, number]): number {
  const span = Math.abs(rangePx[1] - rangePx[0]);
  if (span === 0) {
    return 0;
  }
  const fraction = Math.abs(pxHigh - pxLow) / span;
  return Math.max(0, Math.min(1, fraction));
}

export function pointInPolygon(x: number, y: number, polygon: [number, number][]): boolean {
  let inside = false;
  for (let i = 0, j = polygon.length - 1; i < polygon.length; j = i++) {
    const xi = polygon[i][0];
    const yi = polygon[i][1];
    const xj = polygon[j][0];
    const yj = polygon[j][1];
    const crosses = yi > y !== yj > y && x < ((xj - xi) * (y - yi)) / (yj - yi) + xi;
    if (crosses) {
      inside = !inside;
    }
  }
  return inside;
}

export function buildClickManipulation(id: number, hit: ElementHit): WireManipulation {
  return {
    id,
    kind: "ClickSelect",
    elements: [{ tag: hit.tag, datum: hit.datum }],
  };
}

export function buildLassoManipulation(id: number, hits: ElementHit[]): WireManipulation {
  return {
    id,
    kind: "LassoSelect",
    elements: hits.map((hit) => ({ tag: hit.tag, datum: hit.datum })),
  };
}

export function buildBoxManipulation(
  id: number,
  rect: PixelRect,
  xScale: ScaleView,
  yScale: ScaleView,
): WireManipulation {
  const pxLeft = Math.min(rect.x1, rect.x2);
  const pxRight = Math.max(rect.x1, rect.x2);
  const pxTop = Math.min(rect.y1, rect.y2);
  const pxBottom = Math.max(rect.y1, rect.y2);
  const xLow = xScale.invert ? xScale.invert(pxLeft) : pxLeft;
  const xHigh = xScale.invert ? xScale.invert(pxRight) : pxRight;
  // screen y grows downward; the data range flips
  const yLow = yScale.invert ? yScale.invert(pxBottom) : pxBottom;
  const yHigh = yScale.invert ? yScale.invert(pxTop) : pxTop;
  return {
    id,
    kind: "BoxSelect",
    box: {
      x1: xLow,
      x2: xHigh,
      y1: yLow,
      y2: yHigh,
      fx: extentFraction(pxLeft, pxRight, xScale.rangePx),
      fy: extentFraction(pxTop, pxBottom, yScale.rangePx),
    },
  };
}

export function buildFreeDrawManipulation(
  id: number,
  strokes: [number, number][][],
  screenshotPngBase64: string,
): WireManipulation {
  return {
    id,
    kind: "FreeDraw",
    drawing: { strokes, screenshotPngBase64 },
  };
}

/** Read a data-bound element's record back from its "data" attribute. */
export function datumFromAttribute(raw: string | null): Record<string, unknown> {
  if (!raw) {
    return {};
  }
  try {
    const parsed = JSON.parse(raw);
    if (parsed && typeof parsed === "object" && !Array.isArray(parsed)) {
      return parsed as Record<string, unknown>;
    }
    return { value: parsed };
  } catch {
    return { value: raw };
  }
}
