/** Node renderer: the three prompt-node forms plus the subspace grid.
 *
 * Curation encodings are inline so they are machine-checkable: liked
 * images get a heart badge, disliked ones opacity 0.35, pinned nodes a
 * red border, minimized nodes collapse to a chip while keeping their
 * payload server-side.
 */

import type { NodeView } from "./../types.js";
import { dimensionColor } from "./../types.js";
import { diffPieces } from "./../spans.js";
import { renderGrid, type GridCallbacks } from "./grid.js";

export const NODE_WIDTH = 280;
export const NODE_HEIGHT = 200;
export const PINNED_BORDER = "2px solid #d9363e";

export interface NodeCallbacks extends GridCallbacks {
  onCommit?: (text: string, imageCount: number) => void;
  onFork?: () => void;
  onExpand?: () => void;
  onTogglePin?: (value: boolean) => void;
  onToggleMinimize?: (value: boolean) => void;
  onImageMark?: (index: number, mark: string) => void;
  onImageDragStart?: (index: number, ev: MouseEvent) => void;
  onTextMouseUp?: (textEl: HTMLElement, ev: MouseEvent) => void;
  onAddValue?: (dimensionId: string, value: string) => void;
}

export function renderNode(view: NodeView, callbacks: NodeCallbacks): HTMLElement {
  const el = document.createElement("div");
  el.className = `node node-${view.kind}${view.form ? ` form-${view.form}` : ""}`;
  el.dataset.nodeId = view.node_id;
  el.style.left = `${view.x}px`;
  el.style.top = `${view.y}px`;
  el.style.width = view.kind === "subspace" && !view.minimized ? "auto" : `${NODE_WIDTH}px`;
  if (view.pinned) el.style.border = PINNED_BORDER;

  el.appendChild(renderHeader(view, callbacks));
  if (view.minimized) {
    el.classList.add("minimized");
    const chip = document.createElement("div");
    chip.className = "minimized-chip";
    chip.textContent = summaryText(view);
    el.appendChild(chip);
    return el;
  }

  if (view.kind === "subspace") {
    el.appendChild(renderSubspaceBody(view, callbacks));
  } else if (view.form === "input") {
    el.appendChild(renderInputBody(view, callbacks));
  } else if (view.form === "image") {
    el.appendChild(renderImageBody(view, callbacks));
  } else {
    el.appendChild(renderPromptBody(view, callbacks));
  }
  return el;
}

function summaryText(view: NodeView): string {
  const text =
    view.kind === "subspace" ? view.base_text_with_fixed ?? "" : view.record?.text ?? "";
  return text.length > 40 ? `${text.slice(0, 40)}…` : text || "(empty)";
}

function renderHeader(view: NodeView, callbacks: NodeCallbacks): HTMLElement {
  const header = document.createElement("div");
  header.className = "node-header";

  const title = document.createElement("span");
  title.className = "node-title";
  title.textContent = view.kind === "subspace" ? "subspace" : view.form ?? "prompt";
  header.appendChild(title);

  const pin = document.createElement("button");
  pin.className = "btn-pin";
  pin.textContent = view.pinned ? "unpin" : "pin";
  pin.addEventListener("click", () => callbacks.onTogglePin?.(!view.pinned));
  header.appendChild(pin);

  const minimize = document.createElement("button");
  minimize.className = "btn-minimize";
  minimize.textContent = view.minimized ? "expand" : "minimize";
  minimize.addEventListener("click", () => callbacks.onToggleMinimize?.(!view.minimized));
  header.appendChild(minimize);

  if (view.kind === "prompt" && view.form !== "input") {
    const fork = document.createElement("button");
    fork.className = "btn-fork";
    fork.textContent = "fork";
    fork.addEventListener("click", () => callbacks.onFork?.());
    header.appendChild(fork);
  }
  if (view.kind === "subspace") {
    const expand = document.createElement("button");
    expand.className = "btn-expand";
    expand.textContent = "expand";
    expand.addEventListener("click", () => callbacks.onExpand?.());
    header.appendChild(expand);
  }
  return header;
}

function renderInputBody(view: NodeView, callbacks: NodeCallbacks): HTMLElement {
  const body = document.createElement("div");
  body.className = "node-body";
  const textarea = document.createElement("textarea");
  textarea.className = "input-text";
  textarea.value = view.record?.text ?? "";
  textarea.placeholder = "describe the image…";
  body.appendChild(textarea);

  const row = document.createElement("div");
  row.className = "input-params";
  const count = document.createElement("input");
  count.type = "number";
  count.className = "input-count";
  count.min = "1";
  count.value = String(view.record?.params.image_count ?? 4);
  row.appendChild(count);
  const generate = document.createElement("button");
  generate.className = "btn-generate";
  generate.textContent = "generate";
  generate.addEventListener("click", () =>
    callbacks.onCommit?.(textarea.value, Number(count.value)),
  );
  row.appendChild(generate);
  body.appendChild(row);
  return body;
}

function renderPromptText(view: NodeView, callbacks: NodeCallbacks): HTMLElement {
  const textEl = document.createElement("div");
  textEl.className = "prompt-text";
  for (const piece of diffPieces(view.record?.text ?? "", view.diff)) {
    if (piece.deletion) {
      const marker = document.createElement("span");
      marker.className = "diff-delete-marker";
      textEl.appendChild(marker);
      continue;
    }
    const span = document.createElement("span");
    span.textContent = piece.text;
    if (piece.highlight) span.className = `diff-${piece.highlight}`;
    span.dataset.displayStart = String(piece.displayStart);
    textEl.appendChild(span);
  }
  textEl.addEventListener("mouseup", (ev) => callbacks.onTextMouseUp?.(textEl, ev));
  // double-click forks the node into an editable child
  textEl.addEventListener("dblclick", () => callbacks.onFork?.());
  return textEl;
}

function renderImageStrip(view: NodeView, callbacks: NodeCallbacks): HTMLElement {
  const strip = document.createElement("div");
  strip.className = "image-strip";
  const images = view.record?.images ?? [];
  images.forEach((img, index) => {
    const frame = document.createElement("span");
    frame.className = "image-frame";
    const image = document.createElement("img");
    image.className = "prompt-image";
    image.src = callbacks.imageUrl(img.content_hash);
    image.draggable = false;
    if (img.mark === "dislike") image.style.opacity = "0.35";
    image.addEventListener("mousedown", (ev) => callbacks.onImageDragStart?.(index, ev));
    frame.appendChild(image);
    if (img.mark === "like") {
      const heart = document.createElement("span");
      heart.className = "heart";
      heart.textContent = "♥";
      frame.appendChild(heart);
    }
    const likeBtn = document.createElement("button");
    likeBtn.className = "btn-like";
    likeBtn.textContent = "+";
    likeBtn.addEventListener("click", () =>
      callbacks.onImageMark?.(index, img.mark === "like" ? "neutral" : "like"),
    );
    const dislikeBtn = document.createElement("button");
    dislikeBtn.className = "btn-dislike";
    dislikeBtn.textContent = "-";
    dislikeBtn.addEventListener("click", () =>
      callbacks.onImageMark?.(index, img.mark === "dislike" ? "neutral" : "dislike"),
    );
    frame.appendChild(likeBtn);
    frame.appendChild(dislikeBtn);
    strip.appendChild(frame);
  });
  return strip;
}

function renderPromptBody(view: NodeView, callbacks: NodeCallbacks): HTMLElement {
  const body = document.createElement("div");
  body.className = "node-body";
  body.appendChild(renderPromptText(view, callbacks));
  const status = view.record?.status;
  if (status === "pending") {
    const note = document.createElement("div");
    note.className = "status-pending";
    note.textContent = "generating…";
    body.appendChild(note);
  } else if (status === "failed") {
    const note = document.createElement("div");
    note.className = "status-failed";
    note.textContent = "generation failed";
    body.appendChild(note);
  } else {
    body.appendChild(renderImageStrip(view, callbacks));
  }
  return body;
}

function renderImageBody(view: NodeView, callbacks: NodeCallbacks): HTMLElement {
  const body = document.createElement("div");
  body.className = "node-body image-card";
  body.appendChild(renderImageStrip(view, callbacks));
  body.appendChild(renderPromptText(view, callbacks));
  return body;
}

function renderSubspaceBody(view: NodeView, callbacks: NodeCallbacks): HTMLElement {
  const body = document.createElement("div");
  body.className = "node-body";
  body.appendChild(renderTemplateLine(view, callbacks));
  body.appendChild(renderGrid(view, callbacks));
  return body;
}

/** The template with fixed values underlined and dimension spans rendered
 * as colored chips carrying a value drop-down. */
function renderTemplateLine(view: NodeView, callbacks: NodeCallbacks): HTMLElement {
  const sub = view.subspace!;
  const line = document.createElement("div");
  line.className = "template-line";
  const base = sub.template.base_text;

  type Slot =
    | { start: number; end: number; kind: "fixed"; index: number }
    | { start: number; end: number; kind: "dimension"; index: number };
  const slots: Slot[] = [
    ...sub.fixed.map((f, index) => ({
      start: f.start, end: f.end, kind: "fixed" as const, index,
    })),
    ...sub.template.placeholders.map((p) => ({
      start: p.start,
      end: p.end,
      kind: "dimension" as const,
      index: sub.dimensions.findIndex((d) => d.dimension_id === p.dimension_id),
    })),
  ].sort((a, b) => a.start - b.start);

  let pos = 0;
  let displayPos = 0; // offset in the fixed-substituted display text
  const plain = (until: number) => {
    if (until > pos) {
      const span = document.createElement("span");
      span.className = "template-plain";
      span.textContent = base.slice(pos, until);
      span.dataset.displayStart = String(displayPos);
      line.appendChild(span);
      displayPos += until - pos;
      pos = until;
    }
  };
  for (const slot of slots) {
    plain(slot.start);
    if (slot.kind === "fixed") {
      const f = sub.fixed[slot.index];
      const span = document.createElement("span");
      span.className = "fixed-assignment";
      span.textContent = f.value;
      span.title = f.name;
      span.style.textDecoration = "underline";
      span.style.color = dimensionColor(f.color_index);
      span.dataset.displayStart = String(displayPos);
      line.appendChild(span);
      displayPos += f.value.length;
    } else {
      const dim = sub.dimensions[slot.index];
      const chip = document.createElement("span");
      chip.className = "dimension-chip";
      chip.style.background = dimensionColor(dim.color_index);
      chip.title = dim.name;
      const select = document.createElement("select");
      select.className = "dimension-values";
      for (const v of dim.values) {
        const option = document.createElement("option");
        option.value = v;
        option.textContent = v;
        select.appendChild(option);
      }
      chip.appendChild(select);
      const add = document.createElement("button");
      add.className = "btn-add-value";
      add.textContent = "+";
      add.addEventListener("click", () => {
        const value = window.prompt(`new value for ${dim.name}`);
        if (value) callbacks.onAddValue?.(dim.dimension_id, value);
      });
      chip.appendChild(add);
      line.appendChild(chip);
      // display text keeps the placeholder's original base span
      displayPos += slot.end - slot.start;
    }
    pos = slot.end;
  }
  plain(base.length);
  line.addEventListener("mouseup", (ev) => callbacks.onTextMouseUp?.(line, ev));
  return line;
}
