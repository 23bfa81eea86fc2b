// Sandboxed execution of generated chart code.
//
// The chart runs in an iframe with sandbox="allow-scripts" only (null
// origin: no parent DOM, no cookies, no storage) and a CSP that denies
// every network fetch. The parent talks to the frame exclusively through
// postMessage; the frame owns the live scale pair and the data-bound
// elements, so gesture capture happens inside and completed wire payloads
// travel out.

import {
  buildBoxManipulation,
  buildClickManipulation,
  buildFreeDrawManipulation,
  buildLassoManipulation,
  datumFromAttribute,
  extentFraction,
  pointInPolygon,
} from "./gestures";
import type { WireManipulation } from "./wire";

export const SANDBOX_ATTRIBUTE = "allow-scripts";
export const FRAME_CSP = "default-src 'none'; script-src 'unsafe-inline'";

export type Tool = "Pointer" | "ClickSelect" | "BoxSelect" | "LassoSelect" | "FreeDraw";

export type ParentToFrame =
  | { kind: "render"; code: string; rowsJson: string; vw: number; vh: number }
  | { kind: "set-tool"; tool: Tool }
  | { kind: "resize"; vw: number; vh: number };

export type FrameToParent =
  | { kind: "ready" }
  | {
      kind: "rendered";
      scalesReturned: boolean;
      boundElements: { tag: string; datum: Record<string, unknown> }[];
    }
  | { kind: "render-error"; message: string }
  | { kind: "manipulation"; payload: WireManipulation };

/** Accept only messages coming from the window we created. */
export function isTrustedFrameMessage(source: unknown, frameWindow: unknown): boolean {
  return source !== null && source !== undefined && source === frameWindow;
}

// 1x1 transparent PNG used when SVG rasterization is unavailable.
export const FALLBACK_SCREENSHOT_B64 =
  "iVBORw0KGgoAAAANSUhEUgAAAAEAAAABCAYAAAAfFcSJAAAADUlEQVR42mNkYPhfDwAChwGA60e6kgAAAABJRU5ErkJggg==";

const HELPER_SOURCES = [
  extentFraction,
  pointInPolygon,
  buildClickManipulation,
  buildLassoManipulation,
  buildBoxManipulation,
  buildFreeDrawManipulation,
  datumFromAttribute,
]
  .map((fn) => fn.toString())
  .join("\n");

/**
 * Full srcdoc for the chart frame. The charting library source is inlined
 * because the CSP forbids loading anything over the network.
 */
export function buildHarnessHtml(libSource: string): string {
  return `<!DOCTYPE html>
<html>
<head>
<meta http-equiv="Content-Security-Policy" content="${FRAME_CSP}">
<style>
  html, body { margin: 0; overflow: hidden; }
  #overlay { position: absolute; inset: 0; }
  #overlay.passive { pointer-events: none; }
</style>
</head>
<body>
<div id="chart"></div>
<canvas id="overlay" class="passive"></canvas>
<script>
${libSource}
</script>
<script>
"use strict";
${HELPER_SOURCES}

const FALLBACK_PNG = "${FALLBACK_SCREENSHOT_B64}";
let tool = "Pointer";
let lastRender = null;
let xScale = null;
let yScale = null;
let plotOffset = [0, 0];

const chartHost = document.getElementById("chart");
const overlay = document.getElementById("overlay");

function post(message) {
  window.parent.postMessage(message, "*");
}

function scaleView(scale) {
  const range = typeof scale.range === "function" ? scale.range() : [0, 1];
  const lo = Number(range[0]);
  const hi = Number(range[range.length - 1]);
  return {
    rangePx: [lo, hi],
    invert: typeof scale.invert === "function"
      ? (px) => {
          const value = scale.invert(px);
          return value instanceof Date ? value.toISOString().slice(0, 10) : value;
        }
      : undefined,
  };
}

function render(code, rowsJson, vw, vh) {
  chartHost.innerHTML = "";
  overlay.width = vw;
  overlay.height = vh;
  const svgEl = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svgEl.setAttribute("width", vw);
  svgEl.setAttribute("height", vh);
  chartHost.appendChild(svgEl);
  const rows = JSON.parse(rowsJson);
  try {
    const run = new Function("svg", "vw", "vh", "data", code);
    const returned = run(d3.select(svgEl), vw, vh, rows);
    xScale = returned && returned[0] ? returned[0] : null;
    yScale = returned && returned[1] ? returned[1] : null;
    // generated code usually translates one root group by the margins;
    // account for it when mapping pointer pixels onto scale ranges
    plotOffset = [0, 0];
    const rootGroup = svgEl.querySelector("g[transform]");
    if (rootGroup) {
      const match = /translate\\(([-0-9.]+)[ ,]+([-0-9.]+)\\)/.exec(
        rootGroup.getAttribute("transform") || ""
      );
      if (match) {
        plotOffset = [parseFloat(match[1]), parseFloat(match[2])];
      }
    }
    lastRender = { code, rowsJson };
    const bound = [];
    for (const el of chartHost.querySelectorAll("[data]")) {
      bound.push(hitFromElement(el));
    }
    post({
      kind: "rendered",
      scalesReturned: Boolean(xScale && yScale),
      boundElements: bound,
    });
  } catch (error) {
    post({ kind: "render-error", message: String(error && error.message || error) });
  }
}

function hitFromElement(el) {
  return { tag: el.tagName.toLowerCase(), datum: datumFromAttribute(el.getAttribute("data")) };
}

function elementCenters() {
  const centers = [];
  for (const el of chartHost.querySelectorAll("[data]")) {
    const box = el.getBBox ? el.getBBox() : { x: 0, y: 0, width: 0, height: 0 };
    centers.push({
      el,
      x: box.x + box.width / 2 + plotOffset[0],
      y: box.y + box.height / 2 + plotOffset[1],
    });
  }
  return centers;
}

chartHost.addEventListener("click", (event) => {
  if (tool !== "ClickSelect") return;
  const el = event.target.closest ? event.target.closest("[data]") : null;
  if (!el) return;
  post({ kind: "manipulation", payload: buildClickManipulation(0, hitFromElement(el)) });
});

let dragStart = null;
let lassoPath = [];
let strokes = [];
let currentStroke = null;
const ctx = overlay.getContext ? overlay.getContext("2d") : null;

overlay.addEventListener("pointerdown", (event) => {
  if (tool === "BoxSelect" || tool === "LassoSelect" || tool === "FreeDraw") {
    dragStart = [event.offsetX, event.offsetY];
    lassoPath = [[event.offsetX, event.offsetY]];
    if (tool === "FreeDraw") {
      currentStroke = [[event.offsetX, event.offsetY]];
    }
  }
});

overlay.addEventListener("pointermove", (event) => {
  if (!dragStart) return;
  lassoPath.push([event.offsetX, event.offsetY]);
  if (tool === "FreeDraw" && currentStroke && ctx) {
    currentStroke.push([event.offsetX, event.offsetY]);
    ctx.strokeStyle = "#e15759";
    ctx.lineWidth = 2;
    ctx.beginPath();
    const a = currentStroke[currentStroke.length - 2];
    const b = currentStroke[currentStroke.length - 1];
    ctx.moveTo(a[0], a[1]);
    ctx.lineTo(b[0], b[1]);
    ctx.stroke();
  }
});

overlay.addEventListener("pointerup", (event) => {
  if (!dragStart) return;
  const start = dragStart;
  dragStart = null;
  if (tool === "BoxSelect" && xScale && yScale) {
    const rect = { x1: start[0] - plotOffset[0], y1: start[1] - plotOffset[1],
                   x2: event.offsetX - plotOffset[0], y2: event.offsetY - plotOffset[1] };
    post({
      kind: "manipulation",
      payload: buildBoxManipulation(0, rect, scaleView(xScale), scaleView(yScale)),
    });
  } else if (tool === "LassoSelect") {
    const hits = [];
    for (const center of elementCenters()) {
      if (pointInPolygon(center.x, center.y, lassoPath)) {
        hits.push(hitFromElement(center.el));
      }
    }
    if (hits.length) {
      post({ kind: "manipulation", payload: buildLassoManipulation(0, hits) });
    }
  } else if (tool === "FreeDraw" && currentStroke) {
    strokes.push(currentStroke);
    currentStroke = null;
  }
});

function finishFreeDraw() {
  if (!strokes.length) return;
  const recorded = strokes;
  strokes = [];
  rasterize((screenshot) => {
    post({
      kind: "manipulation",
      payload: buildFreeDrawManipulation(0, recorded, screenshot),
    });
    if (ctx) ctx.clearRect(0, 0, overlay.width, overlay.height);
  });
}

function rasterize(done) {
  try {
    const svgEl = chartHost.querySelector("svg");
    const xml = new XMLSerializer().serializeToString(svgEl);
    const img = new Image();
    const canvas = document.createElement("canvas");
    canvas.width = overlay.width;
    canvas.height = overlay.height;
    const canvasCtx = canvas.getContext("2d");
    img.onload = () => {
      try {
        canvasCtx.fillStyle = "white";
        canvasCtx.fillRect(0, 0, canvas.width, canvas.height);
        canvasCtx.drawImage(img, 0, 0);
        canvasCtx.drawImage(overlay, 0, 0);
        done(canvas.toDataURL("image/png").split(",")[1]);
      } catch (error) {
        done(FALLBACK_PNG);
      }
    };
    img.onerror = () => done(FALLBACK_PNG);
    img.src = "data:image/svg+xml;charset=utf-8," + encodeURIComponent(xml);
  } catch (error) {
    done(FALLBACK_PNG);
  }
}

window.addEventListener("message", (event) => {
  if (event.source !== window.parent) return;
  const message = event.data || {};
  if (message.kind === "render") {
    render(message.code, message.rowsJson, message.vw, message.vh);
  } else if (message.kind === "set-tool") {
    if (tool === "FreeDraw" && message.tool !== "FreeDraw") {
      finishFreeDraw();
    }
    tool = message.tool;
    overlay.classList.toggle("passive", tool === "Pointer" || tool === "ClickSelect");
  } else if (message.kind === "resize") {
    if (lastRender) {
      render(lastRender.code, lastRender.rowsJson, message.vw, message.vh);
    }
  } else if (message.kind === "finish-drawing") {
    finishFreeDraw();
  }
});

post({ kind: "ready" });
</script>
</body>
</html>`;
}

export interface SandboxHandle {
  iframe: HTMLIFrameElement;
  send(message: ParentToFrame | { kind: "finish-drawing" }): void;
  dispose(): void;
}

export interface SandboxOptions {
  container: HTMLElement;
  libSource: string;
  onMessage: (message: FrameToParent) => void;
}

export function createSandbox(options: SandboxOptions): SandboxHandle {
  const iframe = document.createElement("iframe");
  iframe.setAttribute("sandbox", SANDBOX_ATTRIBUTE);
  iframe.style.border = "none";
  iframe.style.width = "100%";
  iframe.style.height = "100%";
  iframe.srcdoc = buildHarnessHtml(options.libSource);

  let ready = false;
  const queue: object[] = [];

  const listener = (event: MessageEvent) => {
    if (!isTrustedFrameMessage(event.source, iframe.contentWindow)) {
      return;
    }
    const message = event.data as FrameToParent;
    if (message && message.kind === "ready") {
      ready = true;
      for (const queued of queue.splice(0)) {
        iframe.contentWindow?.postMessage(queued, "*");
      }
    }
    options.onMessage(message);
  };
  window.addEventListener("message", listener);
  options.container.appendChild(iframe);

  return {
    iframe,
    send(message) {
      if (ready && iframe.contentWindow) {
        iframe.contentWindow.postMessage(message, "*");
      } else {
        queue.push(message);
      }
    },
    dispose() {
      window.removeEventListener("message", listener);
      iframe.remove();
    },
  };
}
