/** Mini-map: color class and intensity from the server model, pinned
 * glyphs, and click-to-center geometry within 5px. */

import { afterEach, describe, expect, it } from "vitest";

import { Minimap } from "../src/view/minimap.js";
import { NODE_HEIGHT, NODE_WIDTH } from "../src/view/node.js";
import { committedNode, makeClient, mountSession, newSession } from "./helpers.js";

const cleanups: Array<() => void> = [];

afterEach(() => {
  while (cleanups.length) cleanups.pop()!();
  document.body.textContent = "";
});

describe("minimap", () => {
  it("renders dots with class colors, exact intensity, and pin glyphs", async () => {
    const api = makeClient();
    const sid = await newSession(api);
    const a = await committedNode(api, sid, "a pig in Disney style",
                                  { image_count: 4, width: 16, height: 16 });
    const b = await committedNode(api, sid, "a sheep in Disney style",
                                  { image_count: 4, width: 16, height: 16 });
    await api.markImage(sid, a.node_id, 0, "like");           // score 0.25
    await api.patchNode(sid, b.node_id, { pinned: true, x: 400, y: 300 });

    const host = document.createElement("div");
    document.body.appendChild(host);
    const minimap = new Minimap(host, () => undefined);
    const { entries } = await api.minimap(sid);
    minimap.render(entries);

    const dots = Array.from(host.querySelectorAll(".minimap-dot")) as HTMLElement[];
    expect(dots).toHaveLength(2);
    const liked = dots.find((d) => d.dataset.nodeId === a.node_id)!;
    expect(liked.className).toContain("minimap-like");
    expect(liked.dataset.intensity).toBe("0.25");
    expect(liked.style.background).toBe("#4a90d9"); // blue for like
    expect(liked.querySelector(".minimap-pin")).toBeNull();

    const pinned = dots.find((d) => d.dataset.nodeId === b.node_id)!;
    expect(pinned.className).toContain("minimap-neutral");
    expect(pinned.querySelector(".minimap-pin")).not.toBeNull();
  });

  it("clicking a dot centers the canvas on the node within 5px", async () => {
    const api = makeClient();
    const sid = await newSession(api);
    const view = await committedNode(api, sid, "a pig in Disney style");
    await api.patchNode(sid, view.node_id, { x: 1234, y: -567 });

    const h = await mountSession(api, sid);
    cleanups.push(h.stop);
    await h.sync((s) => s.node(view.node_id)?.x === 1234, "position applied");

    const host = document.createElement("div");
    document.body.appendChild(host);
    const minimap = new Minimap(host, (nodeId) => h.canvas.centerOn(nodeId));
    minimap.render((await api.minimap(sid)).entries);
    (host.querySelector(".minimap-dot") as HTMLElement).click();

    // the node's center should now sit at the viewport center (1000x700)
    const screenX = (1234 + NODE_WIDTH / 2) * h.canvas.zoom + h.canvas.panX;
    const screenY = (-567 + NODE_HEIGHT / 2) * h.canvas.zoom + h.canvas.panY;
    expect(Math.abs(screenX - 500)).toBeLessThanOrEqual(5);
    expect(Math.abs(screenY - 350)).toBeLessThanOrEqual(5);
  });
});
