/**
 * Wire types for the session protocol (see ../../PROTOCOL.md).
 *
 * One JSON object per WebSocket text frame in both directions.  These types
 * mirror the server's payloads exactly; the UI never extends them with
 * client-side fields.
 */

export type StrokeMode = "ink" | "gesture";

export interface StrokePayload {
  id: number;
  mode: StrokeMode;
  points: number[][];
  t: number[];
}

export interface UnderlayPayload {
  id: number;
  image: string;
  position: number[];
  scale: number;
  rotation: number;
}

export interface DecorationPayload {
  id: number;
  host_link: number;
  strokes: number[][][];
}

export type JointKind = "revolute" | "prismatic";

export interface LinkPayload {
  id: number;
  strokes: number[];
  color: number;
  ground: boolean;
}

export interface JointPayload {
  id: number;
  kind: JointKind;
  a: number;
  b: number;
  anchor_a: number[];
  anchor_b: number[];
  axis: number[] | null;
  input: boolean;
  rate: number | null;
}

export interface TrackedPayload {
  id: number;
  link: number;
  point: number[];
}

export interface MechanismPayload {
  links: LinkPayload[];
  joints: JointPayload[];
  tracked: TrackedPayload[];
}

export interface DocumentPayload {
  version: number;
  strokes: StrokePayload[];
  underlays: UnderlayPayload[];
  decorations: DecorationPayload[];
  mechanism: MechanismPayload | null;
}

export type SolveStatus = "ok" | "locked" | "singular" | "diverged";

export interface SimStatePayload {
  t: number;
  q: number[];
  status: SolveStatus;
  iterations: number;
  residual_norm: number;
  targets: number[];
}

/** One trace sample is [t, x, y]. */
export type TraceSample = number[];

export interface TracePayload {
  id: number;
  link: number;
  local: number[];
  samples: TraceSample[];
  closed: boolean;
}

export interface InstanceSim {
  state: SimStatePayload;
  traces: TracePayload[];
}

export interface SessionState {
  document: DocumentPayload;
  sim: Record<string, InstanceSim>;
}

// -- delta stream ----------------------------------------------------------

export interface StrokeAddedOp { op: "stroke_added"; stroke: StrokePayload; }
export interface UnderlaySetOp { op: "underlay_set"; underlay: UnderlayPayload; }
export interface DecorationAddedOp { op: "decoration_added"; decoration: DecorationPayload; }
export interface MechanismSetOp { op: "mechanism_set"; mechanism: MechanismPayload | null; }
export interface DocReplacedOp { op: "doc_replaced"; document: DocumentPayload; }
export interface SimResetOp {
  op: "sim_reset";
  instance: number;
  state: SimStatePayload;
  traces: TracePayload[];
}
export interface SimUpdateOp {
  op: "sim_update";
  instance: number;
  state: SimStatePayload;
  samples: Record<string, TraceSample[]>;
  closed?: Record<string, boolean>;
}
export interface SimClearedOp { op: "sim_cleared"; instance: number | null; }

export type DeltaOp =
  | StrokeAddedOp
  | UnderlaySetOp
  | DecorationAddedOp
  | MechanismSetOp
  | DocReplacedOp
  | SimResetOp
  | SimUpdateOp
  | SimClearedOp;

// -- events ----------------------------------------------------------------

export interface DeltaEvent {
  event: "delta";
  seq: number;
  session: string;
  revision: number;
  ops: DeltaOp[];
}

export interface SnapshotEvent {
  event: "snapshot";
  seq: number;
  session: string;
  revision: number;
  document: DocumentPayload;
  sim: Record<string, InstanceSim>;
}

export interface SessionCreatedEvent {
  event: "session_created";
  seq: number;
  session: string;
  revision: number;
}

export interface HypothesesEvent {
  event: "hypotheses";
  seq: number;
  session: string;
  revision: number;
  links: { id: number; strokes: number[]; color: number }[];
  joints: {
    id: number; kind: JointKind; a: number; b: number;
    anchor: number[]; axis: number[] | null;
  }[];
  issues: string[];
}

export interface BuiltEvent {
  event: "built";
  seq: number;
  session: string;
  warnings: string[];
  instances: { id: number; links: number[]; mobility: number }[];
}

export type RunStatus = SolveStatus | "preempted";

export interface RunStartedEvent {
  event: "run_started";
  seq: number;
  session: string;
  instance: number;
  revision: number;
}

export interface RunFinishedEvent {
  event: "run_finished";
  seq: number;
  session: string;
  instance: number;
  status: RunStatus;
  blocking?: Record<string, number>;
}

export interface ScrubbedEvent {
  event: "scrubbed";
  seq: number;
  session: string;
  instance: number;
  status: SolveStatus;
  blocking?: Record<string, number>;
}

export interface PausedEvent {
  event: "paused";
  seq: number;
  session: string;
  revision: number;
  state: SimStatePayload | null;
}

export interface TrackedEvent {
  event: "tracked";
  seq: number;
  session: string;
  tracked: number;
}

export interface SavedEvent {
  event: "saved";
  seq: number;
  session: string;
  revision: number;
  data: string;
}

export interface ExportEvent {
  event: "export";
  seq: number;
  session: string;
  format: "csv" | "svg";
  data: string;
}

export interface NoopEvent {
  event: "noop";
  seq: number;
  session: string;
  command: string;
  revision: number;
}

export interface ErrorEvent {
  event: "error";
  seq: number | null;
  error: string;
  message: string;
  session?: string;
  revision?: number;
}

export type ServerEvent =
  | DeltaEvent
  | SnapshotEvent
  | SessionCreatedEvent
  | HypothesesEvent
  | BuiltEvent
  | RunStartedEvent
  | RunFinishedEvent
  | ScrubbedEvent
  | PausedEvent
  | TrackedEvent
  | SavedEvent
  | ExportEvent
  | NoopEvent
  | ErrorEvent;

export interface CommandEnvelope {
  seq: number;
  cmd: string;
  session?: string;
  revision?: number;
  [field: string]: unknown;
}

export function emptySessionState(): SessionState {
  return {
    document: {
      version: 1,
      strokes: [],
      underlays: [],
      decorations: [],
      mechanism: null,
    },
    sim: {},
  };
}
