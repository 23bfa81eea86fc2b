// Application bootstrap: wires the control bar, canvas sandbox, views,
// and the engine client together.

import { EngineClient } from "./api";
import { createSandbox, type FrameToParent, type SandboxHandle, type Tool } from "./sandbox";
import { CanvasState, droppedManipulationIds } from "./state";
import {
  createCodeInspector,
  highlightedMessageHtml,
  renderConversationView,
  renderDatasetInspector,
  renderInteractionView,
  triggerHighlightRanges,
} from "./views";
import { validateManipulation, type SessionDoc, type SessionEntryDoc } from "./wire";

const TOOLS: Tool[] = ["Pointer", "ClickSelect", "BoxSelect", "LassoSelect", "FreeDraw"];

interface App {
  client: EngineClient;
  state: CanvasState;
  sandbox: SandboxHandle | null;
  sessionId: string | null;
  datasetId: string | null;
  session: SessionDoc | null;
  submitting: boolean;
}

function byId(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing #${id}`);
  }
  return node;
}

function banner(text: string, isError = false): void {
  const host = byId("banner");
  host.textContent = text;
  host.className = isError ? "banner error" : "banner";
  if (text) {
    setTimeout(() => {
      if (host.textContent === text) {
        host.textContent = "";
      }
    }, 6000);
  }
}

async function loadD3Source(): Promise<string> {
  const response = await fetch("vendor/d3.min.js");
  if (!response.ok) {
    throw new Error("vendor/d3.min.js missing; run `npm run setup`");
  }
  return response.text();
}

function activeEntry(app: App): SessionEntryDoc | null {
  if (!app.session || app.session.entries.length === 0) {
    return null;
  }
  const index = app.state.renderedEntryIndex ?? app.session.entries.length - 1;
  return app.session.entries.find((e) => e.index === index) ?? null;
}

async function refreshSession(app: App, renderIndex?: number): Promise<void> {
  if (!app.sessionId) {
    return;
  }
  app.session = await app.client.getSession(app.sessionId);
  if (renderIndex !== undefined) {
    app.state.renderedEntryIndex = renderIndex;
  }
  const entry = activeEntry(app);
  renderConversationView(
    byId("conversation"),
    app.session.entries,
    entry?.index ?? null,
    (index) => {
      void refreshSession(app, index);
    },
  );
  renderInteractionView(byId("interactions"), entry, (descriptorId) => {
    const input = byId("nl-input") as HTMLTextAreaElement;
    const preview = byId("input-highlight");
    if (descriptorId === null || !entry) {
      preview.innerHTML = "";
      return;
    }
    const ranges = triggerHighlightRanges(entry, descriptorId);
    preview.innerHTML = highlightedMessageHtml(entry.nlInput, ranges);
    void input;
  });
  if (entry && app.sandbox) {
    const rows = await app.client.datasetPage(app.datasetId!, 0, 100000);
    const canvas = byId("canvas");
    app.sandbox.send({
      kind: "render",
      code: entry.artifact.processedCode,
      rowsJson: JSON.stringify(rows.rows),
      vw: canvas.clientWidth || 800,
      vh: canvas.clientHeight || 480,
    });
    codeInspector.setCode(entry.artifact.extractedCode);
  }
}

const app: App = {
  client: new EngineClient(
    new URLSearchParams(window.location.search).get("api") ?? "http://127.0.0.1:8000",
  ),
  state: new CanvasState(),
  sandbox: null,
  sessionId: null,
  datasetId: null,
  session: null,
  submitting: false,
};

const codeInspector = createCodeInspector((code) => {
  const entry = activeEntry(app);
  if (!app.sessionId || !entry) {
    return;
  }
  void app.client
    .putCode(app.sessionId, entry.index, code)
    .then((artifact) => {
      if (artifact.failure) {
        banner(`${artifact.failure.kind}: ${artifact.failure.detail}`, true);
      }
      return refreshSession(app, entry.index);
    })
    .catch((error) => banner(String(error), true));
});

function onFrameMessage(message: FrameToParent): void {
  if (message.kind === "rendered") {
    const dropped = droppedManipulationIds(
      app.state.pendingManipulations,
      message.boundElements,
    );
    if (dropped.length) {
      for (const id of dropped) {
        app.state.discard(id);
      }
      banner(`dropped interactions whose elements no longer exist: #${dropped.join(", #")}`, true);
      byId("pending-count").textContent = String(app.state.pendingManipulations.length);
    }
  } else if (message.kind === "manipulation") {
    try {
      const stamped = app.state.addManipulation(validateManipulation(message.payload));
      banner(`captured ${stamped.kind} (#${stamped.id})`);
      byId("pending-count").textContent = String(app.state.pendingManipulations.length);
    } catch (error) {
      banner(`invalid manipulation payload: ${error}`, true);
    }
  } else if (message.kind === "render-error") {
    banner(`chart error: ${message.message}`, true);
  }
}

async function submitTurn(): Promise<void> {
  const input = byId("nl-input") as HTMLTextAreaElement;
  if (!app.sessionId || app.submitting || !input.value.trim()) {
    return;
  }
  app.submitting = true;
  (byId("send") as HTMLButtonElement).disabled = true;
  try {
    if (app.state.activeTool === "FreeDraw" && app.sandbox) {
      app.sandbox.send({ kind: "finish-drawing" });
      await new Promise((resolve) => setTimeout(resolve, 150));
    }
    const interactions = app.state.takePending();
    byId("pending-count").textContent = "0";
    const entry = await app.client.postTurn(app.sessionId, input.value.trim(), interactions);
    input.value = "";
    await refreshSession(app, entry.index);
    if (entry.artifact.failure) {
      banner(`${entry.artifact.failure.kind}: ${entry.artifact.failure.detail}`, true);
    }
  } catch (error) {
    banner(String(error), true);
  } finally {
    app.submitting = false;
    (byId("send") as HTMLButtonElement).disabled = false;
  }
}

async function bootstrap(): Promise<void> {
  const libSource = await loadD3Source();
  app.sandbox = createSandbox({
    container: byId("canvas"),
    libSource,
    onMessage: onFrameMessage,
  });

  const toolbar = byId("tools");
  for (const tool of TOOLS) {
    const button = document.createElement("button");
    button.textContent = tool;
    button.addEventListener("click", () => {
      app.state.activeTool = tool;
      app.sandbox?.send({ kind: "set-tool", tool });
      for (const other of Array.from(toolbar.children)) {
        other.classList.toggle("selected", other === button);
      }
    });
    toolbar.appendChild(button);
  }

  byId("send").addEventListener("click", () => void submitTurn());

  (byId("upload") as HTMLInputElement).addEventListener("change", async (event) => {
    const file = (event.target as HTMLInputElement).files?.[0];
    if (!file) {
      return;
    }
    try {
      const uploaded = await app.client.uploadDataset(file);
      app.datasetId = uploaded.id;
      const session = await app.client.createSession(uploaded.id);
      app.sessionId = session.id;
      banner(`dataset ${uploaded.name}: ${uploaded.rowCount} rows`);
      const page = await app.client.datasetPage(uploaded.id);
      renderDatasetInspector(byId("dataset"), page, async (pageNumber) => {
        renderDatasetInspector(
          byId("dataset"),
          await app.client.datasetPage(uploaded.id, pageNumber),
          () => undefined,
        );
      });
      const models = await app.client.models();
      const select = byId("model-select") as HTMLSelectElement;
      select.innerHTML = "";
      for (const model of models.models) {
        const option = document.createElement("option");
        option.value = model;
        option.textContent = model;
        select.appendChild(option);
      }
      select.addEventListener("change", () => {
        if (app.sessionId) {
          void app.client.switchModel(app.sessionId, select.value);
        }
      });
    } catch (error) {
      banner(String(error), true);
    }
  });

  byId("save").addEventListener("click", async () => {
    if (!app.sessionId) {
      return;
    }
    const blob = await app.client.exportSession(app.sessionId);
    const link = document.createElement("a");
    link.href = URL.createObjectURL(blob);
    link.download = `session-${app.sessionId}.json`;
    link.click();
  });

  (byId("load") as HTMLInputElement).addEventListener("change", async (event) => {
    const file = (event.target as HTMLInputElement).files?.[0];
    if (!file) {
      return;
    }
    try {
      const imported = await app.client.importSession(file);
      app.sessionId = imported.id;
      const session = await app.client.getSession(imported.id);
      app.datasetId = session.datasetId;
      await refreshSession(app);
    } catch (error) {
      banner(String(error), true);
    }
  });

  codeInspector.element.id = "code-inspector";
  byId("inspector-slot").appendChild(codeInspector.element);
}

void bootstrap().catch((error) => banner(String(error), true));
