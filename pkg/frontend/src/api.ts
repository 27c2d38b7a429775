/** HTTP client for the session engine. One method per endpoint; every UI
 * gesture funnels into exactly one mutating call. */

import type {
  GenParams,
  MinimapEntry,
  NodeView,
  SessionSnapshot,
  UiEvent,
} from "./types.js";

const API = "/api/v1";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    detail: string,
  ) {
    super(`${code}: ${detail}`);
  }
}

export interface NodeResponse {
  node_id?: string;
  node: NodeView;
  sequence: number;
  job_id?: string;
}

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await fetch(this.baseUrl + path, {
      method,
      headers: body !== undefined ? { "content-type": "application/json" } : {},
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    if (!resp.ok) {
      let code = "http_error";
      let detail = resp.statusText;
      try {
        const data = (await resp.json()) as { error?: string; detail?: string };
        code = data.error ?? code;
        detail = data.detail ?? detail;
      } catch {
        // non-JSON error body
      }
      throw new ApiError(resp.status, code, detail);
    }
    return (await resp.json()) as T;
  }

  createSession() {
    return this.request<{ session_id: string; sequence: number }>("POST", `${API}/sessions`);
  }

  listSessions() {
    return this.request<{ sessions: string[] }>("GET", `${API}/sessions`);
  }

  getSession(sid: string) {
    return this.request<SessionSnapshot>("GET", `${API}/sessions/${sid}`);
  }

  addNode(sid: string, x: number, y: number) {
    return this.request<NodeResponse>("POST", `${API}/sessions/${sid}/nodes`, { x, y });
  }

  fork(sid: string, nid: string, pos?: { x: number; y: number }) {
    return this.request<NodeResponse>("POST", `${API}/sessions/${sid}/nodes/${nid}/fork`, pos ?? {});
  }

  commit(sid: string, nid: string, text: string, params?: Partial<GenParams>) {
    return this.request<NodeResponse>("POST", `${API}/sessions/${sid}/nodes/${nid}/commit`, {
      text,
      params,
    });
  }

  patchNode(
    sid: string,
    nid: string,
    patch: { x?: number; y?: number; pinned?: boolean; minimized?: boolean },
  ) {
    return this.request<NodeResponse>("PATCH", `${API}/sessions/${sid}/nodes/${nid}`, patch);
  }

  markImage(sid: string, nid: string, index: number, mark: string) {
    return this.request<NodeResponse & { score: number }>(
      "POST",
      `${API}/sessions/${sid}/nodes/${nid}/images/${index}/mark`,
      { mark },
    );
  }

  extractImage(sid: string, nid: string, index: number, pos: { x: number; y: number }) {
    return this.request<NodeResponse>(
      "POST",
      `${API}/sessions/${sid}/nodes/${nid}/images/${index}/extract`,
      pos,
    );
  }

  defineDimension(
    sid: string,
    nid: string,
    body: { start: number; end: number; name: string; values: string[] },
  ) {
    return this.request<NodeResponse>("POST", `${API}/sessions/${sid}/nodes/${nid}/dimensions`, body);
  }

  editDimension(
    sid: string,
    nid: string,
    did: string,
    body: { edit: string; value?: string; name?: string; order?: number[] },
  ) {
    return this.request<NodeResponse>(
      "PATCH",
      `${API}/sessions/${sid}/nodes/${nid}/dimensions/${did}`,
      body,
    );
  }

  commitCell(sid: string, nid: string, coords: number[]) {
    return this.request<{ job_id: string; sequence: number }>(
      "POST",
      `${API}/sessions/${sid}/nodes/${nid}/cells/${coords.join(",")}/commit`,
    );
  }

  extractCell(sid: string, nid: string, coords: number[], pos: { x: number; y: number }) {
    return this.request<NodeResponse>(
      "POST",
      `${API}/sessions/${sid}/nodes/${nid}/cells/${coords.join(",")}/extract`,
      pos,
    );
  }

  markCellImage(sid: string, nid: string, coords: number[], index: number, mark: string) {
    return this.request<NodeResponse & { score: number }>(
      "POST",
      `${API}/sessions/${sid}/nodes/${nid}/cells/${coords.join(",")}/images/${index}/mark`,
      { mark },
    );
  }

  extractCellImage(
    sid: string,
    nid: string,
    coords: number[],
    index: number,
    pos: { x: number; y: number },
  ) {
    return this.request<NodeResponse>(
      "POST",
      `${API}/sessions/${sid}/nodes/${nid}/cells/${coords.join(",")}/images/${index}/extract`,
      pos,
    );
  }

  expand(sid: string, nid: string) {
    return this.request<{ node_ids: string[]; job_ids: string[] }>(
      "POST",
      `${API}/sessions/${sid}/nodes/${nid}/expand`,
    );
  }

  minimap(sid: string) {
    return this.request<{ entries: MinimapEntry[] }>("GET", `${API}/sessions/${sid}/minimap`);
  }

  metrics(sid: string, binSeconds = 60) {
    return this.request<Record<string, unknown>>(
      "GET",
      `${API}/sessions/${sid}/metrics?bin_seconds=${binSeconds}`,
    );
  }

  imageUrl(hash: string): string {
    return `${this.baseUrl}/images/${hash}`;
  }

  /**
   * Subscribe to the session's server-sent events via a streaming fetch
   * (works in browsers and node). Returns an unsubscribe function.
   * Reconnection is the caller's job: pass the last seen sequence.
   */
  subscribe(
    sid: string,
    lastEventId: number,
    onEvent: (ev: UiEvent) => void,
    onError?: (err: unknown) => void,
  ): () => void {
    const controller = new AbortController();
    const run = async () => {
      const resp = await fetch(`${this.baseUrl}${API}/sessions/${sid}/events`, {
        headers: { "Last-Event-ID": String(lastEventId) },
        signal: controller.signal,
      });
      if (!resp.ok || !resp.body) throw new Error(`event stream failed: ${resp.status}`);
      const reader = resp.body.getReader();
      const decoder = new TextDecoder();
      let buffer = "";
      let id = 0;
      let kind = "";
      let data = "";
      for (;;) {
        const { done, value } = await reader.read();
        if (done) break;
        buffer += decoder.decode(value, { stream: true });
        let nl: number;
        while ((nl = buffer.indexOf("\n")) >= 0) {
          const line = buffer.slice(0, nl).replace(/\r$/, "");
          buffer = buffer.slice(nl + 1);
          if (line.startsWith(":")) continue; // heartbeat
          if (line.startsWith("id: ")) id = Number(line.slice(4));
          else if (line.startsWith("event: ")) kind = line.slice(7);
          else if (line.startsWith("data: ")) data = line.slice(6);
          else if (line === "" && kind) {
            onEvent({ sequence: id, kind: kind as UiEvent["kind"], body: JSON.parse(data) });
            kind = "";
            data = "";
          }
        }
      }
    };
    run().catch((err) => {
      if (!controller.signal.aborted) onError?.(err);
    });
    return () => controller.abort();
  }
}
