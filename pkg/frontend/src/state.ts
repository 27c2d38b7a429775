/** Event-sourced mirror of one session.
 *
 * The store never owns state: it starts from a server snapshot and applies
 * UiEvents in sequence order, deduplicating by sequence so at-least-once
 * delivery is safe. After a reconnect-and-replay it is byte-identical to a
 * fresh snapshot load, which the harness verifies.
 */

import type { NodeView, SessionSnapshot, UiEvent } from "./types.js";

export type StoreListener = (changed: string[]) => void;

export class SessionStore {
  readonly sessionId: string;
  sequence = 0;
  private nodes = new Map<string, NodeView>();
  private order: string[] = [];
  private listeners = new Set<StoreListener>();

  constructor(sessionId: string) {
    this.sessionId = sessionId;
  }

  static fromSnapshot(snapshot: SessionSnapshot): SessionStore {
    const store = new SessionStore(snapshot.document.session.session_id);
    store.sequence = snapshot.sequence;
    for (const node of snapshot.nodes) store.upsert(node);
    return store;
  }

  allNodes(): NodeView[] {
    return this.order.map((id) => this.nodes.get(id)!);
  }

  node(nodeId: string): NodeView | undefined {
    return this.nodes.get(nodeId);
  }

  onChange(listener: StoreListener): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private upsert(node: NodeView): string {
    if (!this.nodes.has(node.node_id)) this.order.push(node.node_id);
    this.nodes.set(node.node_id, node);
    return node.node_id;
  }

  /** Apply one server event; stale sequences are ignored (client dedup). */
  apply(ev: UiEvent): void {
    if (ev.sequence <= this.sequence) return;
    this.sequence = ev.sequence;
    const changed: string[] = [];
    if (ev.body.node) changed.push(this.upsert(ev.body.node));
    if (ev.body.nodes) for (const n of ev.body.nodes) changed.push(this.upsert(n));
    if (changed.length > 0) for (const fn of this.listeners) fn(changed);
  }
}
