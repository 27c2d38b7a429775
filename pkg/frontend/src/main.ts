/** Entry point: session bootstrap, store wiring, SSE apply loop. */

import { ApiClient } from "./api.js";
import { SessionStore } from "./state.js";
import { CanvasView } from "./view/canvas.js";
import { Minimap } from "./view/minimap.js";

async function pickSession(api: ApiClient): Promise<string> {
  const fromHash = window.location.hash.replace(/^#/, "");
  if (fromHash) return fromHash;
  const { sessions } = await api.listSessions();
  if (sessions.length > 0) return sessions[sessions.length - 1];
  const created = await api.createSession();
  return created.session_id;
}

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app root");
  const api = new ApiClient("");
  const sessionId = await pickSession(api);
  window.location.hash = sessionId;

  const snapshot = await api.getSession(sessionId);
  const store = SessionStore.fromSnapshot(snapshot);
  const canvas = new CanvasView(root, api, store, {
    width: window.innerWidth,
    height: window.innerHeight,
  });

  const minimap = new Minimap(root, (nodeId) => canvas.centerOn(nodeId));
  const refreshMinimap = () =>
    void api.minimap(sessionId).then(({ entries }) => minimap.render(entries));
  store.onChange(refreshMinimap);
  refreshMinimap();

  const toolbar = document.createElement("div");
  toolbar.className = "toolbar";
  const newNode = document.createElement("button");
  newNode.textContent = "new prompt";
  newNode.addEventListener("click", () => {
    const center = canvas.viewportCenterWorld();
    void api.addNode(sessionId, center.x, center.y);
  });
  toolbar.appendChild(newNode);
  const label = document.createElement("span");
  label.className = "session-label";
  label.textContent = sessionId.slice(0, 8);
  toolbar.appendChild(label);
  root.appendChild(toolbar);

  const connect = () => {
    const stop = api.subscribe(
      sessionId,
      store.sequence,
      (ev) => store.apply(ev),
      () => {
        stop();
        setTimeout(connect, 1000); // reconnect-and-replay from the last sequence
      },
    );
  };
  connect();
}

void boot();
