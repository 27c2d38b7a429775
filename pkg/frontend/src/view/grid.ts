/** Nested-grid renderer for subspace nodes (dimensional stacking).
 *
 * The DOM mirrors the server's layout bijection: every leaf carries its
 * cell coords in ``data-coords``, so clicking (or dragging) a cell reports
 * coordinates that round-trip through the API unchanged.
 */

import type { CellDoc, GridNode, NodeView, SubspaceDoc } from "./../types.js";
import { coordsKey, dimensionColor, DISLIKE_COLOR, LIKE_COLOR } from "./../types.js";

export interface GridCallbacks {
  onCellGenerate?: (coords: number[]) => void;
  onCellDragStart?: (coords: number[], ev: MouseEvent) => void;
  onCellImageMark?: (coords: number[], index: number, mark: string) => void;
  onCellImageDragStart?: (coords: number[], index: number, ev: MouseEvent) => void;
  imageUrl: (hash: string) => string;
}

function cellByCoords(sub: SubspaceDoc, coords: number[]): CellDoc | undefined {
  const key = coordsKey(coords);
  return sub.cells.find((c) => coordsKey(c.coords) === key);
}

export function renderGrid(view: NodeView, callbacks: GridCallbacks): HTMLElement {
  const sub = view.subspace!;
  const root = document.createElement("div");
  root.className = "subspace-grid";
  if (view.grid) root.appendChild(renderLevel(view.grid, view, sub, callbacks));
  return root;
}

function renderLevel(
  grid: GridNode,
  view: NodeView,
  sub: SubspaceDoc,
  callbacks: GridCallbacks,
): HTMLElement {
  if ("cell" in grid) return renderCell(grid.cell, view, sub, callbacks);

  const level = document.createElement("div");
  level.className = "grid-level";
  level.dataset.level = String(grid.level);

  const xDim = sub.dimensions[grid.x_dim];
  const yDim = grid.y_dim !== null ? sub.dimensions[grid.y_dim] : null;
  const table = document.createElement("div");
  table.className = "grid-table";
  table.style.display = "grid";
  table.style.gridTemplateColumns = `${yDim ? "auto " : ""}repeat(${grid.cols}, 1fr)`;

  // column headers: the x dimension's values
  if (yDim) table.appendChild(corner());
  for (let c = 0; c < grid.cols; c++) {
    table.appendChild(header(xDim.values[c], xDim.color_index, "col"));
  }
  for (let r = 0; r < grid.rows; r++) {
    if (yDim) table.appendChild(header(yDim.values[r], yDim.color_index, "row"));
    for (let c = 0; c < grid.cols; c++) {
      const slot = document.createElement("div");
      slot.className = "grid-slot";
      slot.appendChild(renderLevel(grid.entries[r][c], view, sub, callbacks));
      table.appendChild(slot);
    }
  }
  level.appendChild(table);
  return level;
}

function corner(): HTMLElement {
  const el = document.createElement("div");
  el.className = "grid-corner";
  return el;
}

function header(label: string, colorIndex: number, axis: "row" | "col"): HTMLElement {
  const el = document.createElement("div");
  el.className = `grid-header grid-header-${axis}`;
  el.textContent = label;
  el.style.background = dimensionColor(colorIndex);
  return el;
}

function renderCell(
  coords: number[],
  view: NodeView,
  sub: SubspaceDoc,
  callbacks: GridCallbacks,
): HTMLElement {
  const el = document.createElement("div");
  el.className = "grid-cell";
  el.dataset.coords = coordsKey(coords);
  el.draggable = false;

  const cell = cellByCoords(sub, coords);
  const score = view.cell_scores?.[coordsKey(coords)] ?? 0;
  if (score > 0) el.style.background = tint(LIKE_COLOR, score);
  else if (score < 0) el.style.background = tint(DISLIKE_COLOR, -score);

  if (!cell) return el;
  if (cell.record.status === "complete") {
    const strip = document.createElement("div");
    strip.className = "cell-images";
    cell.record.images.forEach((img, index) => {
      const image = document.createElement("img");
      image.className = "cell-image";
      image.src = callbacks.imageUrl(img.content_hash);
      if (img.mark === "dislike") image.style.opacity = "0.35";
      image.addEventListener("mousedown", (ev) => {
        callbacks.onCellImageDragStart?.(coords, index, ev);
      });
      const frame = document.createElement("span");
      frame.className = "cell-image-frame";
      frame.appendChild(image);
      if (img.mark === "like") {
        const heart = document.createElement("span");
        heart.className = "heart";
        heart.textContent = "♥";
        frame.appendChild(heart);
      }
      const like = document.createElement("button");
      like.className = "btn-like";
      like.textContent = "+";
      like.addEventListener("click", () =>
        callbacks.onCellImageMark?.(coords, index, img.mark === "like" ? "neutral" : "like"),
      );
      frame.appendChild(like);
      const dislike = document.createElement("button");
      dislike.className = "btn-dislike";
      dislike.textContent = "-";
      dislike.addEventListener("click", () =>
        callbacks.onCellImageMark?.(
          coords, index, img.mark === "dislike" ? "neutral" : "dislike",
        ),
      );
      frame.appendChild(dislike);
      strip.appendChild(frame);
    });
    el.appendChild(strip);
  } else {
    const button = document.createElement("button");
    button.className = "cell-generate";
    button.textContent = cell.record.status === "pending" ? "…" : "generate";
    button.disabled = cell.record.status === "pending";
    button.addEventListener("click", () => callbacks.onCellGenerate?.(coords));
    el.appendChild(button);
  }

  const caption = document.createElement("div");
  caption.className = "cell-caption";
  caption.textContent = cell.prompt_text;
  el.appendChild(caption);

  el.addEventListener("mousedown", (ev) => {
    if (ev.target === el || (ev.target as HTMLElement).className === "cell-caption") {
      callbacks.onCellDragStart?.(coords, ev);
    }
  });
  return el;
}

function tint(hex: string, intensity: number): string {
  const alpha = Math.min(1, Math.abs(intensity)) * 0.45;
  const r = parseInt(hex.slice(1, 3), 16);
  const g = parseInt(hex.slice(3, 5), 16);
  const b = parseInt(hex.slice(5, 7), 16);
  return `rgba(${r}, ${g}, ${b}, ${alpha.toFixed(3)})`;
}
