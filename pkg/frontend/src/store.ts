/**
 * Client-side session state: the delta stream is the state.
 *
 * `applyDelta` implements exactly the server's published reducer semantics,
 * so replaying deltas 1..R reproduces what a snapshot at revision R reports.
 * Out-of-order receipt is never merged by guesswork: the caller gets "stale"
 * back and is expected to refresh via the snapshot command.
 */

import {
  DeltaEvent,
  DeltaOp,
  DocumentPayload,
  InstanceSim,
  SessionState,
  SnapshotEvent,
  TracePayload,
  emptySessionState,
} from "./protocol.js";

export type ApplyResult = "applied" | "stale";

// The store grows these containers in place on later ops, so it must own
// them: adopting event payloads by reference would mutate the incoming
// events, which breaks replaying a recorded stream twice.
function ownDocument(doc: DocumentPayload): DocumentPayload {
  return {
    ...doc,
    strokes: [...doc.strokes],
    underlays: [...doc.underlays],
    decorations: [...doc.decorations],
  };
}

function ownTraces(traces: TracePayload[]): TracePayload[] {
  return traces.map((t) => ({ ...t, samples: [...t.samples] }));
}

function ownSim(sim: Record<string, InstanceSim>): Record<string, InstanceSim> {
  const out: Record<string, InstanceSim> = {};
  for (const [key, entry] of Object.entries(sim)) {
    out[key] = { state: entry.state, traces: ownTraces(entry.traces) };
  }
  return out;
}

export class SessionStore {
  state: SessionState = emptySessionState();
  revision = 0;

  reset(): void {
    this.state = emptySessionState();
    this.revision = 0;
  }

  /** Replace everything with a server snapshot (any revision). */
  applySnapshot(snapshot: SnapshotEvent): void {
    this.state = { document: ownDocument(snapshot.document), sim: ownSim(snapshot.sim) };
    this.revision = snapshot.revision;
  }

  /**
   * Fold one delta event into the state.  Deltas must arrive in revision
   * order; a gap or repeat returns "stale" without touching the state.
   */
  applyDelta(event: DeltaEvent): ApplyResult {
    if (event.revision !== this.revision + 1) {
      return "stale";
    }
    for (const op of event.ops) {
      this.applyOp(op);
    }
    this.revision = event.revision;
    return "applied";
  }

  private applyOp(op: DeltaOp): void {
    switch (op.op) {
      case "stroke_added":
        this.state.document.strokes.push(op.stroke);
        break;
      case "underlay_set":
        this.state.document.underlays.push(op.underlay);
        break;
      case "decoration_added":
        this.state.document.decorations.push(op.decoration);
        break;
      case "mechanism_set":
        this.state.document.mechanism = op.mechanism;
        break;
      case "doc_replaced":
        this.state.document = ownDocument(op.document);
        break;
      case "sim_reset":
        this.state.sim[String(op.instance)] = {
          state: op.state,
          traces: ownTraces(op.traces),
        };
        break;
      case "sim_update": {
        const entry = this.state.sim[String(op.instance)];
        if (!entry) {
          throw new Error(`sim_update for unknown instance ${op.instance}`);
        }
        entry.state = op.state;
        for (const trace of entry.traces) {
          const fresh = op.samples[String(trace.id)];
          if (fresh && fresh.length) {
            trace.samples.push(...fresh);
          }
          const closed = op.closed?.[String(trace.id)];
          if (closed !== undefined) {
            trace.closed = closed;
          }
        }
        break;
      }
      case "sim_cleared":
        if (op.instance === null) {
          this.state.sim = {};
        } else {
          delete this.state.sim[String(op.instance)];
        }
        break;
      default: {
        const exhaustive: never = op;
        throw new Error(`unknown delta op ${(exhaustive as DeltaOp).op}`);
      }
    }
  }
}
