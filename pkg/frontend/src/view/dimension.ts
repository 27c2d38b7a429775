/** Select-text-to-dimension flow.
 *
 * A selection in the prompt (or template) text opens a small context menu
 * asking for the dimension name and extra values. Confirming issues the
 * single defineDimension call; Escape or cancel issues nothing. Overlap
 * with an existing dimension or fixed value is rejected inline without an
 * API call.
 */

import type { ApiClient } from "./../api.js";
import type { NodeView } from "./../types.js";
import { displayToBase, overlapsExisting } from "./../spans.js";

export interface SelectionRange {
  start: number;
  end: number;
}

/**
 * Offsets of the current window selection in display-text space.
 *
 * Rendered text pieces carry ``data-display-start`` (their char offset in
 * the displayed prompt/template text); interactive chips do not, so a
 * selection touching one resolves to null and the gesture is dropped.
 */
export function selectionOffsets(textEl: HTMLElement): SelectionRange | null {
  const sel = window.getSelection();
  if (!sel || sel.rangeCount === 0 || sel.isCollapsed) return null;
  const range = sel.getRangeAt(0);
  if (!textEl.contains(range.startContainer) || !textEl.contains(range.endContainer)) {
    return null;
  }
  const resolve = (container: Node, offset: number): number | null => {
    let node: Node | null = container;
    while (node && node !== textEl) {
      if (node instanceof HTMLElement && node.dataset.displayStart !== undefined) {
        return Number(node.dataset.displayStart) + offset;
      }
      node = node.parentNode;
    }
    return null;
  };
  const start = resolve(range.startContainer, range.startOffset);
  const end = resolve(range.endContainer, range.endOffset);
  if (start === null || end === null) return null;
  return start < end ? { start, end } : null;
}

/** Resolve a display-text selection to a span in the template base text.
 * Returns an error string when the selection cannot become a dimension. */
export function resolveSelection(
  view: NodeView,
  selection: SelectionRange,
): { start: number; end: number } | string {
  if (view.kind === "prompt") {
    if (view.form === "input") return "commit the prompt before adding dimensions";
    return { start: selection.start, end: selection.end };
  }
  const sub = view.subspace!;
  const mapped = displayToBase(
    sub.template.base_text,
    sub.fixed,
    selection.start,
    selection.end,
  );
  if (mapped === null) return "selection overlaps a fixed value";
  if (overlapsExisting(mapped.start, mapped.end, sub.template.placeholders, sub.fixed)) {
    return "selection overlaps an existing dimension";
  }
  return mapped;
}

export interface DimensionFlowOptions {
  host: HTMLElement; // overlay parent for the menu / error message
  view: NodeView;
  selection: SelectionRange;
  api: ApiClient;
  sessionId: string;
  defaultName?: string;
}

export type FlowResult = "submitted" | "cancelled" | "rejected";

/** Run the full gesture. Resolves after the API call (or without one). */
export function startDimensionFlow(opts: DimensionFlowOptions): Promise<FlowResult> {
  const resolved = resolveSelection(opts.view, opts.selection);
  if (typeof resolved === "string") {
    showInlineError(opts.host, resolved);
    return Promise.resolve("rejected");
  }

  return new Promise<FlowResult>((resolve) => {
    const menu = document.createElement("div");
    menu.className = "dimension-menu";

    const nameInput = document.createElement("input");
    nameInput.className = "dimension-name";
    nameInput.placeholder = "dimension name";
    nameInput.value = opts.defaultName ?? "";
    menu.appendChild(nameInput);

    const valuesInput = document.createElement("input");
    valuesInput.className = "dimension-extra-values";
    valuesInput.placeholder = "other values, comma separated";
    menu.appendChild(valuesInput);

    const confirm = document.createElement("button");
    confirm.className = "dimension-confirm";
    confirm.textContent = "add dimension";
    menu.appendChild(confirm);

    const cancel = document.createElement("button");
    cancel.className = "dimension-cancel";
    cancel.textContent = "cancel";
    menu.appendChild(cancel);

    const close = (result: FlowResult) => {
      menu.remove();
      document.removeEventListener("keydown", onKey);
      resolve(result);
    };
    const onKey = (ev: KeyboardEvent) => {
      if (ev.key === "Escape") close("cancelled");
    };
    document.addEventListener("keydown", onKey);
    cancel.addEventListener("click", () => close("cancelled"));

    confirm.addEventListener("click", async () => {
      const values = valuesInput.value
        .split(",")
        .map((v) => v.trim())
        .filter((v) => v.length > 0);
      try {
        await opts.api.defineDimension(opts.sessionId, opts.view.node_id, {
          start: resolved.start,
          end: resolved.end,
          name: nameInput.value.trim() || "dimension",
          values,
        });
        close("submitted");
      } catch (err) {
        showInlineError(opts.host, err instanceof Error ? err.message : String(err));
        close("rejected");
      }
    });

    opts.host.appendChild(menu);
    nameInput.focus();
  });
}

function showInlineError(host: HTMLElement, message: string): void {
  host.querySelector(".dimension-error")?.remove();
  const el = document.createElement("div");
  el.className = "dimension-error";
  el.textContent = message;
  host.appendChild(el);
  setTimeout(() => el.remove(), 4000);
}
