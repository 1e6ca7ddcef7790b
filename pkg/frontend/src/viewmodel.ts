/**
 * Pure view-model: protocol state in, drawable geometry out.
 *
 * Nothing here touches the DOM or the socket, and nothing here solves
 * kinematics: joint positions, link skeletons, and traces are direct
 * transforms of the last server-reported state.  At event boundaries the
 * displayed pose equals the server pose exactly; interpolation between two
 * received states is a visual nicety only and never invents new states.
 */

import {
  InstanceSim,
  JointPayload,
  MechanismPayload,
  SimStatePayload,
} from "./protocol.js";

/** Hex color per server palette index (recognition assigns 0..11). */
export const PALETTE = [
  "#e63946", "#2a9d8f", "#4361ee", "#f4a261",
  "#7b2cbf", "#0d9488", "#d81159", "#8f5d2c",
  "#5f0f40", "#6b705c", "#118ab2", "#23036a",
] as const;

export const TAB_ACCENTS = {
  sketch: "#2e9e5b",
  build: "#d98e04",
  simulate: "#2561c4",
} as const;

export type TabName = keyof typeof TAB_ACCENTS;

export const JOINT_BLUE = "#1d4ed8";
export const INPUT_RED = "#d62828";

/** Planar pose [x, y, theta]. */
export type Pose = [number, number, number];

export function linkColor(colorIndex: number): string {
  return PALETTE[((colorIndex % PALETTE.length) + PALETTE.length) % PALETTE.length];
}

export function transformPoint(pose: Pose, local: number[]): [number, number] {
  const [x, y, th] = pose;
  const c = Math.cos(th);
  const s = Math.sin(th);
  return [x + c * local[0] - s * local[1], y + s * local[0] + c * local[1]];
}

export function untransformPoint(pose: Pose, world: number[]): [number, number] {
  const [x, y, th] = pose;
  const c = Math.cos(th);
  const s = Math.sin(th);
  const dx = world[0] - x;
  const dy = world[1] - y;
  return [c * dx + s * dy, -s * dx + c * dy];
}

/**
 * Per-link poses from a solver state vector.
 *
 * `q` is [x, y, theta] per non-ground link, link ids ascending; the ground
 * link is pinned at the identity.  The numbers are taken from the event
 * verbatim — no rounding, no re-solving.
 */
export function posesFromState(
  mech: MechanismPayload,
  state: SimStatePayload | null,
): Map<number, Pose> {
  const poses = new Map<number, Pose>();
  const movable = mech.links
    .filter((l) => !l.ground)
    .map((l) => l.id)
    .sort((a, b) => a - b);
  for (const link of mech.links) {
    if (link.ground) {
      poses.set(link.id, [0, 0, 0]);
    }
  }
  if (state === null) {
    for (const id of movable) {
      poses.set(id, [0, 0, 0]); // build frames coincide with world
    }
    return poses;
  }
  movable.forEach((id, i) => {
    poses.set(id, [state.q[3 * i], state.q[3 * i + 1], state.q[3 * i + 2]]);
  });
  return poses;
}

/** World anchor of a joint, taken from its `a`-side link (the server's convention). */
export function jointWorldAnchor(
  joint: JointPayload,
  poses: Map<number, Pose>,
): [number, number] {
  const pose = poses.get(joint.a);
  if (!pose) {
    throw new Error(`joint ${joint.id}: link ${joint.a} has no pose`);
  }
  return transformPoint(pose, joint.anchor_a);
}

export interface JointMarker {
  id: number;
  kind: "revolute" | "prismatic";
  x: number;
  y: number;
  input: boolean;
  color: string;
}

/** Joint markers: solid blue circles, the selected input joint red. */
export function jointMarkers(
  mech: MechanismPayload,
  poses: Map<number, Pose>,
): JointMarker[] {
  return mech.joints.map((j) => {
    const [x, y] = jointWorldAnchor(j, poses);
    return {
      id: j.id,
      kind: j.kind,
      x,
      y,
      input: j.input,
      color: j.input ? INPUT_RED : JOINT_BLUE,
    };
  });
}

export interface LinkShape {
  link: number;
  color: string;
  ground: boolean;
  /** World positions of the link's joint anchors, in joint order. */
  anchors: [number, number][];
}

/** Skeleton geometry per link: its joint anchors in world space. */
export function linkShapes(
  mech: MechanismPayload,
  poses: Map<number, Pose>,
): LinkShape[] {
  return mech.links.map((link) => {
    const anchors: [number, number][] = [];
    for (const j of mech.joints) {
      const pose = poses.get(link.id)!;
      if (j.a === link.id) {
        anchors.push(transformPoint(pose, j.anchor_a));
      } else if (j.b === link.id) {
        anchors.push(transformPoint(pose, j.anchor_b));
      }
    }
    return {
      link: link.id,
      color: linkColor(link.color),
      ground: link.ground,
      anchors,
    };
  });
}

export interface TracePolyline {
  id: number;
  closed: boolean;
  /** World [x, y] per server sample — node for node, no smoothing. */
  points: [number, number][];
}

/** Trace polylines built from the server's samples only. */
export function tracePolylines(sim: InstanceSim): TracePolyline[] {
  return sim.traces.map((trace) => ({
    id: trace.id,
    closed: trace.closed,
    points: trace.samples.map((s) => [s[1], s[2]] as [number, number]),
  }));
}

/**
 * Interpolate between two received states for display.  Exact at the
 * endpoints: alpha <= 0 returns `a`'s poses, alpha >= 1 returns `b`'s.
 */
export function interpolatePoses(
  a: Map<number, Pose>,
  b: Map<number, Pose>,
  alpha: number,
): Map<number, Pose> {
  if (alpha <= 0) return a;
  if (alpha >= 1) return b;
  const out = new Map<number, Pose>();
  for (const [id, pa] of a) {
    const pb = b.get(id);
    if (!pb) continue;
    let dth = pb[2] - pa[2];
    while (dth > Math.PI) dth -= 2 * Math.PI;
    while (dth < -Math.PI) dth += 2 * Math.PI;
    out.set(id, [
      pa[0] + alpha * (pb[0] - pa[0]),
      pa[1] + alpha * (pb[1] - pa[1]),
      pa[2] + alpha * dth,
    ]);
  }
  return out;
}

/**
 * Map a pointer position to a driver-coordinate target while dragging the
 * input joint.  The coordinate follows the pointer's angle about the joint,
 * offset so the drag starts from the current coordinate, and unwrapped
 * against the previous target so crossing the ±π ray never jumps a turn.
 * (This pointer mapping is the UI's own interaction design.)
 */
export function scrubTarget(
  startCoordinate: number,
  startAngle: number,
  pointerAngle: number,
  previousTarget: number,
): number {
  let target = startCoordinate + (pointerAngle - startAngle);
  while (target - previousTarget > Math.PI) target -= 2 * Math.PI;
  while (target - previousTarget < -Math.PI) target += 2 * Math.PI;
  return target;
}

export function pointerAngleAbout(
  center: [number, number],
  pointer: [number, number],
): number {
  return Math.atan2(pointer[1] - center[1], pointer[0] - center[0]);
}

export interface StrokeCommandFields {
  points: number[][];
  t: number[];
  mode: "ink" | "gesture";
}

/**
 * Batch a captured pointer stroke into an add_stroke command, or null when
 * the gesture is too short to mean anything (sub-2-point taps send nothing).
 */
export function strokeCommand(
  points: number[][],
  timestamps: number[],
  mode: "ink" | "gesture",
): StrokeCommandFields | null {
  if (points.length < 2) {
    return null;
  }
  return { points, t: timestamps, mode };
}

/** Current driver coordinate of a joint, read off the state's target vector. */
export function driverCoordinate(
  mech: MechanismPayload,
  state: SimStatePayload,
  jointId: number,
): number {
  const driverIds = mech.joints
    .filter((j) => j.rate !== null && j.rate !== undefined)
    .map((j) => j.id)
    .sort((a, b) => a - b);
  const index = driverIds.indexOf(jointId);
  if (index < 0) {
    throw new Error(`joint ${jointId} has no driver`);
  }
  return state.targets[index];
}
