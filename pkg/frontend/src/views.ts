// The five views: conversation history, interaction table, code inspector,
// dataset inspector, and the control bar. DOM-light: each renderer fills a
// host element from server documents.

import { CODE_EDIT_THROTTLE_MS, trailingThrottle, type Throttled } from "./throttle";
import type { DatasetPageDoc, SessionEntryDoc } from "./wire";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

/**
 * Character ranges of the trigger phrases linked to one descriptor; used
 * to highlight the input box while hovering the descriptor's table row.
 */
export function triggerHighlightRanges(
  entry: Pick<SessionEntryDoc, "linkResult">,
  descriptorId: number,
): [number, number][] {
  const ranges: [number, number][] = [];
  for (const link of entry.linkResult.links) {
    if (link.descriptorIds.includes(descriptorId)) {
      ranges.push([link.trigger.span[0], link.trigger.span[1]]);
    }
  }
  return ranges;
}

/** The message text with <mark> around the given character ranges. */
export function highlightedMessageHtml(nl: string, ranges: [number, number][]): string {
  const escape = (s: string) =>
    s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
  const sorted = [...ranges].sort((a, b) => a[0] - b[0]);
  let cursor = 0;
  let html = "";
  for (const [start, end] of sorted) {
    if (start < cursor) {
      continue;
    }
    html += escape(nl.slice(cursor, start));
    html += `<mark>${escape(nl.slice(start, end))}</mark>`;
    cursor = end;
  }
  html += escape(nl.slice(cursor));
  return html;
}

export function renderConversationView(
  host: HTMLElement,
  entries: SessionEntryDoc[],
  activeIndex: number | null,
  onSelect: (index: number) => void,
): void {
  host.innerHTML = "";
  for (const entry of entries) {
    const item = el("div", "history-entry");
    if (entry.index === activeIndex) {
      item.classList.add("active");
    }
    if (entry.thumbnailPngBase64) {
      const thumb = el("img", "thumb") as HTMLImageElement;
      thumb.src = `data:image/png;base64,${entry.thumbnailPngBase64}`;
      item.appendChild(thumb);
    }
    item.appendChild(el("div", "nl", entry.nlInput));
    item.appendChild(el("div", "explanation", entry.artifact.explanation));
    if (entry.artifact.failure) {
      item.appendChild(
        el("div", "failure", `${entry.artifact.failure.kind}: ${entry.artifact.failure.detail}`),
      );
    }
    item.addEventListener("click", () => onSelect(entry.index));
    host.appendChild(item);
  }
}

export function renderInteractionView(
  host: HTMLElement,
  entry: SessionEntryDoc | null,
  onHoverDescriptor: (descriptorId: number | null) => void,
): void {
  host.innerHTML = "";
  if (!entry || entry.descriptors.length === 0) {
    host.appendChild(el("div", "empty", "no interactions for this turn"));
    return;
  }
  const table = el("table", "interaction-table");
  const head = el("tr");
  for (const title of ["#", "type", "elements", "data items", "inferred intent"]) {
    head.appendChild(el("th", undefined, title));
  }
  table.appendChild(head);
  for (const descriptor of entry.descriptors) {
    const manipulation = entry.manipulations.find((m) => m.id === descriptor.manipulationId);
    const row = el("tr", "descriptor-row");
    row.appendChild(el("td", undefined, `D${descriptor.manipulationId}`));
    row.appendChild(el("td", undefined, descriptor.kind));
    row.appendChild(
      el("td", undefined, manipulation?.elements?.map((e) => e.tag).join(", ") ?? "—"),
    );
    row.appendChild(
      el(
        "td",
        undefined,
        descriptor.referencedData.length
          ? descriptor.referencedData.map((d) => JSON.stringify(d)).join("; ")
          : descriptor.text,
      ),
    );
    row.appendChild(el("td", undefined, descriptor.inferredIntent ?? "—"));
    row.addEventListener("mouseenter", () => onHoverDescriptor(descriptor.manipulationId));
    row.addEventListener("mouseleave", () => onHoverDescriptor(null));
    table.appendChild(row);
  }
  host.appendChild(table);
}

export interface CodeInspector {
  setCode(code: string): void;
  element: HTMLElement;
  throttled: Throttled<string>;
}

/**
 * Hidden-by-default editor; edits re-render (and persist) through a
 * 2-second trailing throttle.
 */
export function createCodeInspector(
  onEditSettled: (code: string) => void,
  waitMs: number = CODE_EDIT_THROTTLE_MS,
): CodeInspector {
  const wrapper = el("div", "code-inspector hidden");
  const toggle = el("button", "toggle", "Code Inspector");
  const area = el("textarea", "code-editor") as HTMLTextAreaElement;
  const throttled = trailingThrottle<string>(onEditSettled, waitMs);
  toggle.addEventListener("click", () => wrapper.classList.toggle("hidden"));
  area.addEventListener("input", () => throttled(area.value));
  wrapper.appendChild(toggle);
  wrapper.appendChild(area);
  return {
    element: wrapper,
    throttled,
    setCode(code: string) {
      throttled.cancel();
      area.value = code;
    },
  };
}

export function renderDatasetInspector(
  host: HTMLElement,
  page: DatasetPageDoc,
  onPage: (page: number) => void,
): void {
  host.innerHTML = "";
  const table = el("table", "dataset-table");
  const head = el("tr");
  for (const attribute of page.attributes) {
    head.appendChild(el("th", undefined, `${attribute.name} (${attribute.kind})`));
  }
  table.appendChild(head);
  for (const row of page.rows) {
    const tr = el("tr");
    for (const attribute of page.attributes) {
      tr.appendChild(el("td", undefined, String(row[attribute.name] ?? "")));
    }
    table.appendChild(tr);
  }
  host.appendChild(table);
  const pager = el("div", "pager");
  const prev = el("button", undefined, "prev");
  const next = el("button", undefined, "next");
  prev.disabled = page.page === 0;
  next.disabled = (page.page + 1) * page.pageSize >= page.rowCount;
  prev.addEventListener("click", () => onPage(page.page - 1));
  next.addEventListener("click", () => onPage(page.page + 1));
  pager.appendChild(prev);
  pager.appendChild(
    el("span", undefined, ` page ${page.page + 1} / ${Math.max(1, Math.ceil(page.rowCount / page.pageSize))} `),
  );
  pager.appendChild(next);
  host.appendChild(pager);
}
