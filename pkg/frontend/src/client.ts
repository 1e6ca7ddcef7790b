/**
 * WebSocket session client.
 *
 * Owns the single connection, the command sequence numbers, and the local
 * store.  All state enters through `ingest`, so the same code path serves
 * live sockets and replayed event streams.  A revision gap triggers a
 * snapshot refresh instead of merge guessing; a dropped connection
 * reconnects with backoff and re-syncs from a fresh snapshot.
 */

import { CommandEnvelope, ErrorEvent, ServerEvent } from "./protocol.js";
import { SessionStore } from "./store.js";

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface ClientHooks {
  /** Store contents changed (delta applied or snapshot loaded). */
  onChange?: () => void;
  /** Every server event, after the store has processed it. */
  onEvent?: (event: ServerEvent) => void;
  onStatus?: (status: ConnectionStatus) => void;
}

interface Pending {
  resolve: (event: ServerEvent) => void;
  reject: (error: Error) => void;
  /** Commands whose only acknowledgement is their delta. */
  deltaResolves: boolean;
  terminal?: string;
}

export class ProtocolError extends Error {
  constructor(public readonly name: string, message: string) {
    super(`${name}: ${message}`);
  }
}

const RECONNECT_BASE_MS = 500;
const RECONNECT_MAX_MS = 10_000;

/** Commands acknowledged purely by the delta they produce. */
const DELTA_ACKED = new Set([
  "add_stroke", "set_underlay", "attach_decoration", "mark_ground",
  "add_joint_gesture", "select_input", "set_driver", "move_joint",
  "clear_trace", "load", "undo", "redo",
]);

export class SessionClient {
  readonly store = new SessionStore();
  session: string | null = null;
  status: ConnectionStatus = "closed";

  private seq = 0;
  private pending = new Map<number, Pending>();
  private transport: ((text: string) => void) | null;
  private ws: WebSocket | null = null;
  private url: string | null = null;
  private reconnectMs = RECONNECT_BASE_MS;
  private closedByUs = false;

  constructor(private hooks: ClientHooks = {},
              transport: ((text: string) => void) | null = null) {
    this.transport = transport;
  }

  // -- connection ----------------------------------------------------------

  connect(url: string): void {
    this.url = url;
    this.closedByUs = false;
    this.open();
  }

  close(): void {
    this.closedByUs = true;
    this.ws?.close();
    this.ws = null;
    this.setStatus("closed");
  }

  private open(): void {
    if (!this.url) return;
    this.setStatus("connecting");
    const ws = new WebSocket(this.url);
    this.ws = ws;
    this.transport = (text) => ws.send(text);
    ws.onopen = () => {
      this.reconnectMs = RECONNECT_BASE_MS;
      this.setStatus("open");
      if (this.session === null) {
        void this.request("create_session");
      } else {
        // re-attach and re-sync: the snapshot command re-subscribes this
        // connection to the session's broadcasts
        this.refresh();
      }
    };
    ws.onmessage = (msg) => {
      this.ingest(JSON.parse(String(msg.data)) as ServerEvent);
    };
    ws.onclose = () => {
      if (this.ws !== ws) return;
      this.ws = null;
      this.setStatus("closed");
      this.failAllPending(new Error("connection closed"));
      if (!this.closedByUs) {
        const delay = this.reconnectMs;
        this.reconnectMs = Math.min(this.reconnectMs * 2, RECONNECT_MAX_MS);
        setTimeout(() => this.open(), delay);
      }
    };
  }

  private setStatus(status: ConnectionStatus): void {
    this.status = status;
    this.hooks.onStatus?.(status);
  }

  private failAllPending(error: Error): void {
    for (const p of this.pending.values()) {
      p.reject(error);
    }
    this.pending.clear();
  }

  // -- commands ------------------------------------------------------------

  /**
   * Send a command; the promise settles on its terminal event (the reply
   * event, the delta for delta-acknowledged commands, or `terminal` when
   * given, e.g. "run_finished").
   */
  request(cmd: string, fields: Record<string, unknown> = {},
          terminal?: string): Promise<ServerEvent> {
    if (!this.transport) {
      return Promise.reject(new Error("not connected"));
    }
    this.seq += 1;
    const envelope: CommandEnvelope = { seq: this.seq, cmd, ...fields };
    if (cmd !== "create_session" && this.session !== null &&
        envelope.session === undefined) {
      envelope.session = this.session;
    }
    const promise = new Promise<ServerEvent>((resolve, reject) => {
      this.pending.set(envelope.seq, {
        resolve,
        reject,
        deltaResolves: DELTA_ACKED.has(cmd),
        terminal,
      });
    });
    this.transport(JSON.stringify(envelope));
    return promise;
  }

  refresh(): void {
    void this.request("snapshot").catch(() => undefined);
  }

  // -- event intake --------------------------------------------------------

  /** Process one server event (from the socket or a replayed stream). */
  ingest(event: ServerEvent): void {
    switch (event.event) {
      case "session_created":
        this.session = event.session;
        this.store.reset();
        this.hooks.onChange?.();
        break;
      case "snapshot":
        this.store.applySnapshot(event);
        this.hooks.onChange?.();
        break;
      case "delta":
        if (this.store.applyDelta(event) === "stale") {
          this.refresh();
        } else {
          this.hooks.onChange?.();
        }
        break;
      default:
        break;
    }
    this.settle(event);
    this.hooks.onEvent?.(event);
  }

  private settle(event: ServerEvent): void {
    const seq = (event as { seq?: number | null }).seq;
    if (typeof seq !== "number") return;
    const waiting = this.pending.get(seq);
    if (!waiting) return;
    if (event.event === "error") {
      this.pending.delete(seq);
      const err = event as ErrorEvent;
      waiting.reject(new ProtocolError(err.error, err.message));
      return;
    }
    if (waiting.terminal !== undefined) {
      if (event.event !== waiting.terminal) return;
    } else if (event.event === "delta" && !waiting.deltaResolves) {
      return; // a broadcast caused by the command; the reply is still coming
    }
    this.pending.delete(seq);
    waiting.resolve(event);
  }
}
