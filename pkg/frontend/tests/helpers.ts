/** Shared harness pieces for the UI tests (live server, DOM mounting). */

import { inject } from "vitest";

import { ApiClient } from "../src/api.js";
import { SessionStore } from "../src/state.js";
import { CanvasView } from "../src/view/canvas.js";
import type { NodeView, UiEvent } from "../src/types.js";

declare module "vitest" {
  interface ProvidedContext {
    baseUrl: string;
  }
}

export const SMALL_PARAMS = { image_count: 2, width: 32, height: 24 };

export function makeClient(): ApiClient {
  return new ApiClient(inject("baseUrl"));
}

export async function waitFor<T>(
  probe: () => Promise<T | undefined> | T | undefined,
  what = "condition",
  timeoutMs = 10_000,
): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    const result = await probe();
    if (result !== undefined) return result;
    if (Date.now() > deadline) throw new Error(`timed out waiting for ${what}`);
    await new Promise((r) => setTimeout(r, 30));
  }
}

export async function newSession(api: ApiClient): Promise<string> {
  return (await api.createSession()).session_id;
}

export async function nodeView(api: ApiClient, sid: string, nid: string): Promise<NodeView> {
  const snapshot = await api.getSession(sid);
  const view = snapshot.nodes.find((n) => n.node_id === nid);
  if (!view) throw new Error(`node ${nid} not in snapshot`);
  return view;
}

/** Create, commit, and wait out generation for one root prompt node. */
export async function committedNode(
  api: ApiClient,
  sid: string,
  text: string,
  params = SMALL_PARAMS,
): Promise<NodeView> {
  const created = await api.addNode(sid, 0, 0);
  await api.commit(sid, created.node_id!, text, params);
  return waitFor(async () => {
    const view = await nodeView(api, sid, created.node_id!);
    return view.record?.status === "complete" ? view : undefined;
  }, "generation to complete");
}

export interface Harness {
  api: ApiClient;
  sid: string;
  store: SessionStore;
  canvas: CanvasView;
  root: HTMLElement;
  stop: () => void;
  /** wait until the mirror has applied events up to the given predicate */
  sync: (predicate: (store: SessionStore) => boolean, what?: string) => Promise<void>;
}

/** Mount a live canvas mirroring the session via SSE, like main.ts does. */
export async function mountSession(api: ApiClient, sid: string): Promise<Harness> {
  const snapshot = await api.getSession(sid);
  const store = SessionStore.fromSnapshot(snapshot);
  const root = document.createElement("div");
  document.body.appendChild(root);
  const canvas = new CanvasView(root, api, store, { width: 1000, height: 700 });
  const stop = api.subscribe(sid, store.sequence, (ev: UiEvent) => store.apply(ev));
  return {
    api,
    sid,
    store,
    canvas,
    root,
    stop,
    sync: (predicate, what = "store state") =>
      waitFor(() => (predicate(store) ? true : undefined), what).then(() => undefined),
  };
}

export function nodeEl(root: HTMLElement, nid: string): HTMLElement {
  const el = root.querySelector(`[data-node-id="${nid}"]`);
  if (!el) throw new Error(`node element ${nid} not rendered`);
  return el as HTMLElement;
}
