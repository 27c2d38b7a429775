/** Mini-map overlay: one dot per node, colored by preference class with
 * the score magnitude as intensity, plus a location glyph on pinned
 * nodes. Clicking a dot pans the main canvas to that node. */

import type { MinimapEntry } from "./../types.js";
import { DISLIKE_COLOR, LIKE_COLOR } from "./../types.js";

const NEUTRAL_COLOR = "#9aa3ab";

export interface MinimapOptions {
  width?: number;
  height?: number;
  padding?: number;
}

export class Minimap {
  readonly element: HTMLElement;
  private width: number;
  private height: number;
  private padding: number;

  constructor(
    container: HTMLElement,
    private onSelect: (nodeId: string) => void,
    options: MinimapOptions = {},
  ) {
    this.width = options.width ?? 180;
    this.height = options.height ?? 120;
    this.padding = options.padding ?? 8;
    this.element = document.createElement("div");
    this.element.className = "minimap";
    this.element.style.width = `${this.width}px`;
    this.element.style.height = `${this.height}px`;
    container.appendChild(this.element);
  }

  render(entries: MinimapEntry[]): void {
    this.element.textContent = "";
    if (entries.length === 0) return;
    const xs = entries.map((e) => e.x);
    const ys = entries.map((e) => e.y);
    const minX = Math.min(...xs);
    const minY = Math.min(...ys);
    const spanX = Math.max(1, Math.max(...xs) - minX);
    const spanY = Math.max(1, Math.max(...ys) - minY);
    const sx = (this.width - 2 * this.padding) / spanX;
    const sy = (this.height - 2 * this.padding) / spanY;

    for (const entry of entries) {
      const dot = document.createElement("span");
      dot.className = `minimap-dot minimap-${entry.color_class}`;
      dot.dataset.nodeId = entry.node_id;
      dot.dataset.intensity = String(entry.intensity);
      dot.style.left = `${this.padding + (entry.x - minX) * sx}px`;
      dot.style.top = `${this.padding + (entry.y - minY) * sy}px`;
      const color =
        entry.color_class === "like"
          ? LIKE_COLOR
          : entry.color_class === "dislike"
            ? DISLIKE_COLOR
            : NEUTRAL_COLOR;
      dot.style.background = color;
      // class intensity drives the visual weight; floor keeps dots visible
      dot.style.opacity = String(Math.max(0.2, entry.intensity));
      if (entry.pinned) {
        const pin = document.createElement("span");
        pin.className = "minimap-pin";
        pin.textContent = "⚑"; // location flag
        dot.appendChild(pin);
      }
      dot.addEventListener("click", () => this.onSelect(entry.node_id));
      this.element.appendChild(dot);
    }
  }
}
