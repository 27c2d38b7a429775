/** Infinite pan/zoom canvas for the exploration map.
 *
 * Owns no authoritative state: it renders whatever the SessionStore
 * mirrors and maps every gesture to exactly one API call. Node drags
 * PATCH the position on release; image and cell drags extract children at
 * the drop point (snapped away from occupied slots); a drag cancelled
 * mid-gesture issues nothing.
 */

import type { ApiClient } from "./../api.js";
import type { SessionStore } from "./../state.js";
import type { NodeView } from "./../types.js";
import { NODE_HEIGHT, NODE_WIDTH, renderNode, type NodeCallbacks } from "./node.js";
import { selectionOffsets, startDimensionFlow } from "./dimension.js";

export interface CanvasOptions {
  width?: number;
  height?: number;
  onError?: (err: unknown) => void;
}

interface DragOut {
  kind: "image" | "cell" | "cell-image";
  nodeId: string;
  index?: number;
  coords?: number[];
}

interface NodeDrag {
  nodeId: string;
  offsetX: number;
  offsetY: number;
  moved: boolean;
}

/** Shift a drop position down-right until it overlaps no existing node. */
export function snapToFreeSlot(
  nodes: NodeView[],
  x: number,
  y: number,
  width = NODE_WIDTH,
  height = NODE_HEIGHT,
): { x: number; y: number } {
  const overlaps = (px: number, py: number) =>
    nodes.some(
      (n) => px < n.x + width && n.x < px + width && py < n.y + height && n.y < py + height,
    );
  let out = { x, y };
  let guard = 0;
  while (overlaps(out.x, out.y) && guard < 100) {
    out = { x: out.x + 24, y: out.y + 24 };
    guard += 1;
  }
  return out;
}

export class CanvasView {
  readonly element: HTMLElement;
  panX = 0;
  panY = 0;
  zoom = 1;

  private world: HTMLElement;
  private linkLayer: SVGSVGElement;
  private nodeLayer: HTMLElement;
  private width: number;
  private height: number;
  private dragOut: DragOut | null = null;
  private nodeDrag: NodeDrag | null = null;
  private panning: { x: number; y: number } | null = null;
  private onError: (err: unknown) => void;

  constructor(
    container: HTMLElement,
    private api: ApiClient,
    private store: SessionStore,
    options: CanvasOptions = {},
  ) {
    this.width = options.width ?? container.clientWidth ?? 1200;
    this.height = options.height ?? container.clientHeight ?? 800;
    this.onError = options.onError ?? ((err) => console.error(err));

    this.element = document.createElement("div");
    this.element.className = "canvas-viewport";
    this.world = document.createElement("div");
    this.world.className = "canvas-world";
    this.linkLayer = document.createElementNS("http://www.w3.org/2000/svg", "svg");
    this.linkLayer.setAttribute("class", "link-layer");
    this.nodeLayer = document.createElement("div");
    this.nodeLayer.className = "node-layer";
    this.world.appendChild(this.linkLayer);
    this.world.appendChild(this.nodeLayer);
    this.element.appendChild(this.world);
    container.appendChild(this.element);

    this.bindGestures();
    store.onChange(() => this.renderAll());
    this.renderAll();
  }

  get sessionId(): string {
    return this.store.sessionId;
  }

  screenToWorld(clientX: number, clientY: number): { x: number; y: number } {
    return {
      x: (clientX - this.panX) / this.zoom,
      y: (clientY - this.panY) / this.zoom,
    };
  }

  /** Pan so the node's center lands on the viewport center. */
  centerOn(nodeId: string): void {
    const node = this.store.node(nodeId);
    if (!node) return;
    const cx = node.x + NODE_WIDTH / 2;
    const cy = node.y + NODE_HEIGHT / 2;
    this.panX = this.width / 2 - cx * this.zoom;
    this.panY = this.height / 2 - cy * this.zoom;
    this.applyTransform();
  }

  /** World coordinates currently at the viewport center. */
  viewportCenterWorld(): { x: number; y: number } {
    return this.screenToWorld(this.width / 2, this.height / 2);
  }

  private applyTransform(): void {
    this.world.style.transform =
      `translate(${this.panX}px, ${this.panY}px) scale(${this.zoom})`;
  }

  renderAll(): void {
    this.nodeLayer.textContent = "";
    this.linkLayer.textContent = "";
    for (const view of this.store.allNodes()) {
      this.nodeLayer.appendChild(renderNode(view, this.callbacksFor(view)));
      if (view.parent_id) {
        const parent = this.store.node(view.parent_id);
        if (parent) this.linkLayer.appendChild(elbow(parent, view));
      }
    }
    this.applyTransform();
  }

  private callbacksFor(view: NodeView): NodeCallbacks {
    const sid = this.sessionId;
    const nid = view.node_id;
    const call = (p: Promise<unknown>) => void p.catch(this.onError);
    return {
      imageUrl: (hash) => this.api.imageUrl(hash),
      onCommit: (text, imageCount) =>
        call(this.api.commit(sid, nid, text, { image_count: imageCount })),
      onFork: () => call(this.api.fork(sid, nid)),
      onExpand: () => call(this.api.expand(sid, nid)),
      onTogglePin: (value) => call(this.api.patchNode(sid, nid, { pinned: value })),
      onToggleMinimize: (value) => call(this.api.patchNode(sid, nid, { minimized: value })),
      onImageMark: (index, mark) => call(this.api.markImage(sid, nid, index, mark)),
      onCellGenerate: (coords) => call(this.api.commitCell(sid, nid, coords)),
      onCellImageMark: (coords, index, mark) =>
        call(this.api.markCellImage(sid, nid, coords, index, mark)),
      onAddValue: (dimensionId, value) =>
        call(this.api.editDimension(sid, nid, dimensionId, { edit: "add_value", value })),
      onImageDragStart: (index, ev) => {
        ev.preventDefault();
        this.dragOut = { kind: "image", nodeId: nid, index };
      },
      onCellDragStart: (coords, ev) => {
        ev.preventDefault();
        this.dragOut = { kind: "cell", nodeId: nid, coords };
      },
      onCellImageDragStart: (coords, index, ev) => {
        ev.preventDefault();
        this.dragOut = { kind: "cell-image", nodeId: nid, coords, index };
      },
      onTextMouseUp: (textEl) => {
        const selection = selectionOffsets(textEl);
        if (!selection) return;
        void startDimensionFlow({
          host: this.element,
          view,
          selection,
          api: this.api,
          sessionId: sid,
        });
      },
    };
  }

  /** Finish an image/cell drag at a world position: one extract call. */
  async completeDragOut(drag: DragOut, x: number, y: number): Promise<void> {
    const pos = snapToFreeSlot(this.store.allNodes(), x, y);
    const sid = this.sessionId;
    if (drag.kind === "image") {
      await this.api.extractImage(sid, drag.nodeId, drag.index!, pos);
    } else if (drag.kind === "cell") {
      await this.api.extractCell(sid, drag.nodeId, drag.coords!, pos);
    } else {
      await this.api.extractCellImage(sid, drag.nodeId, drag.coords!, drag.index!, pos);
    }
  }

  cancelDragOut(): void {
    this.dragOut = null;
  }

  private bindGestures(): void {
    this.element.addEventListener("mousedown", (ev) => {
      const target = ev.target as HTMLElement;
      const nodeEl = target.closest?.(".node") as HTMLElement | null;
      if (nodeEl && target.closest(".node-header")) {
        const view = this.store.node(nodeEl.dataset.nodeId!);
        if (view && !(target instanceof HTMLButtonElement)) {
          const world = this.screenToWorld(ev.clientX, ev.clientY);
          this.nodeDrag = {
            nodeId: view.node_id,
            offsetX: world.x - view.x,
            offsetY: world.y - view.y,
            moved: false,
          };
        }
        return;
      }
      if (!nodeEl) this.panning = { x: ev.clientX - this.panX, y: ev.clientY - this.panY };
    });

    this.element.addEventListener("mousemove", (ev) => {
      if (this.panning) {
        this.panX = ev.clientX - this.panning.x;
        this.panY = ev.clientY - this.panning.y;
        this.applyTransform();
      } else if (this.nodeDrag) {
        this.nodeDrag.moved = true;
        const world = this.screenToWorld(ev.clientX, ev.clientY);
        const el = this.nodeLayer.querySelector(
          `[data-node-id="${this.nodeDrag.nodeId}"]`,
        ) as HTMLElement | null;
        if (el) {
          el.style.left = `${world.x - this.nodeDrag.offsetX}px`;
          el.style.top = `${world.y - this.nodeDrag.offsetY}px`;
        }
      }
    });

    this.element.addEventListener("mouseup", (ev) => {
      if (this.panning) this.panning = null;
      if (this.nodeDrag) {
        const drag = this.nodeDrag;
        this.nodeDrag = null;
        if (drag.moved) {
          const world = this.screenToWorld(ev.clientX, ev.clientY);
          void this.api
            .patchNode(this.sessionId, drag.nodeId, {
              x: world.x - drag.offsetX,
              y: world.y - drag.offsetY,
            })
            .catch(this.onError);
        }
      }
      if (this.dragOut) {
        const drag = this.dragOut;
        this.dragOut = null;
        const world = this.screenToWorld(ev.clientX, ev.clientY);
        void this.completeDragOut(drag, world.x, world.y).catch(this.onError);
      }
    });

    document.addEventListener("keydown", (ev) => {
      if (ev.key === "Escape") this.cancelDragOut();
    });

    this.element.addEventListener("wheel", (ev) => {
      ev.preventDefault();
      const factor = ev.deltaY < 0 ? 1.1 : 1 / 1.1;
      const next = Math.min(4, Math.max(0.1, this.zoom * factor));
      // zoom around the cursor
      const wx = (ev.clientX - this.panX) / this.zoom;
      const wy = (ev.clientY - this.panY) / this.zoom;
      this.zoom = next;
      this.panX = ev.clientX - wx * this.zoom;
      this.panY = ev.clientY - wy * this.zoom;
      this.applyTransform();
    });
  }
}

/** Orthogonal elbow connector from the parent's bottom to the child's top. */
function elbow(parent: NodeView, child: NodeView): SVGPathElement {
  const path = document.createElementNS("http://www.w3.org/2000/svg", "path");
  const x1 = parent.x + NODE_WIDTH / 2;
  const y1 = parent.y + NODE_HEIGHT;
  const x2 = child.x + NODE_WIDTH / 2;
  const y2 = child.y;
  const my = (y1 + y2) / 2;
  path.setAttribute("d", `M ${x1} ${y1} L ${x1} ${my} L ${x2} ${my} L ${x2} ${y2}`);
  path.setAttribute("class", "node-link");
  path.setAttribute("fill", "none");
  return path;
}
