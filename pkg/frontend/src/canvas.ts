/**
 * Canvas renderer: a prepared frame in, pixels out.
 *
 * Rendering is decoupled from message handling by a frame-latest buffer:
 * `submit` stores the newest frame and schedules one animation-frame paint;
 * frames submitted faster than the display are dropped, never reordered.
 * World coordinates are y-up; the camera flips to screen space.
 */

import { StrokePayload, UnderlayPayload, DecorationPayload } from "./protocol.js";
import { JointMarker, LinkShape, Pose, TracePolyline, transformPoint } from "./viewmodel.js";

export interface Camera {
  /** World position at the canvas center. */
  panX: number;
  panY: number;
  /** Pixels per world unit; always > 0. */
  zoom: number;
}

export interface PendingStroke {
  points: number[][];
  mode: "ink" | "gesture";
}

export interface Frame {
  accent: string;
  camera: Camera;
  underlays: UnderlayPayload[];
  strokes: StrokePayload[];
  /** Ink stroke id -> live hypothesis/link color (others draw neutral). */
  inkColors: Map<number, string>;
  decorations: DecorationPayload[];
  decorationPoses: Map<number, Pose>;
  links: LinkShape[];
  joints: JointMarker[];
  traces: TracePolyline[];
  pending: PendingStroke | null;
  /** World position of a lock indicator, when the mechanism halted. */
  lockedAt: [number, number] | null;
  banner: string | null;
}

const JOINT_RADIUS_PX = 6;
const LOCK_RADIUS_PX = 14;
const INK_COLOR = "#30323a";
const GESTURE_COLOR = "#7a7d89";
const TRACE_WIDTH = 2;

export class CanvasRenderer {
  private ctx: CanvasRenderingContext2D;
  private latest: Frame | null = null;
  private scheduled = false;
  private images = new Map<string, HTMLImageElement>();

  constructor(private canvas: HTMLCanvasElement) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("2D canvas context unavailable");
    this.ctx = ctx;
  }

  /** Buffer the newest frame; stale intermediate frames are dropped. */
  submit(frame: Frame): void {
    this.latest = frame;
    if (this.scheduled) return;
    this.scheduled = true;
    requestAnimationFrame(() => {
      this.scheduled = false;
      if (this.latest) this.draw(this.latest);
    });
  }

  resize(): void {
    const rect = this.canvas.getBoundingClientRect();
    const ratio = window.devicePixelRatio || 1;
    this.canvas.width = Math.max(1, Math.floor(rect.width * ratio));
    this.canvas.height = Math.max(1, Math.floor(rect.height * ratio));
    if (this.latest) this.draw(this.latest);
  }

  worldToScreen(camera: Camera, p: number[]): [number, number] {
    return [
      this.canvas.width / 2 + (p[0] - camera.panX) * camera.zoom,
      this.canvas.height / 2 - (p[1] - camera.panY) * camera.zoom,
    ];
  }

  screenToWorld(camera: Camera, x: number, y: number): [number, number] {
    return [
      camera.panX + (x - this.canvas.width / 2) / camera.zoom,
      camera.panY - (y - this.canvas.height / 2) / camera.zoom,
    ];
  }

  // -- painting ------------------------------------------------------------

  private draw(frame: Frame): void {
    const { ctx, canvas } = this;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    ctx.fillStyle = "#fcfcf9";
    ctx.fillRect(0, 0, canvas.width, canvas.height);

    for (const u of frame.underlays) this.drawUnderlay(frame, u);
    for (const s of frame.strokes) {
      const color = s.mode === "ink"
        ? frame.inkColors.get(s.id) ?? INK_COLOR
        : GESTURE_COLOR;
      this.drawPolyline(frame, s.points, color, 1.5, s.mode === "gesture");
    }
    for (const d of frame.decorations) {
      const pose = frame.decorationPoses.get(d.host_link) ?? [0, 0, 0] as Pose;
      for (const strokePts of d.strokes) {
        this.drawPolyline(frame, strokePts.map((p) => transformPoint(pose, p)),
                          INK_COLOR, 1, false);
      }
    }
    for (const link of frame.links) {
      if (link.anchors.length >= 2) {
        this.drawPolyline(frame, link.anchors, link.color,
                          link.ground ? 5 : 3, false);
      }
    }
    for (const trace of frame.traces) {
      if (trace.points.length >= 2) {
        this.drawPolyline(frame, trace.points, "#e07a1f", TRACE_WIDTH, false);
      }
    }
    for (const j of frame.joints) {
      const [x, y] = this.worldToScreen(frame.camera, [j.x, j.y]);
      ctx.beginPath();
      ctx.arc(x, y, JOINT_RADIUS_PX, 0, 2 * Math.PI);
      ctx.fillStyle = j.color;
      ctx.fill();
      ctx.strokeStyle = "#fcfcf9";
      ctx.lineWidth = 1.5;
      ctx.stroke();
    }
    if (frame.pending && frame.pending.points.length >= 2) {
      this.drawPolyline(frame, frame.pending.points,
                        frame.pending.mode === "ink" ? INK_COLOR : GESTURE_COLOR,
                        1.5, frame.pending.mode === "gesture");
    }
    if (frame.lockedAt) {
      const [x, y] = this.worldToScreen(frame.camera, frame.lockedAt);
      ctx.beginPath();
      ctx.arc(x, y, LOCK_RADIUS_PX, 0, 2 * Math.PI);
      ctx.strokeStyle = "#c1121f";
      ctx.lineWidth = 3;
      ctx.stroke();
    }
    if (frame.banner) {
      ctx.fillStyle = "#c1121f";
      ctx.font = "14px system-ui, sans-serif";
      ctx.fillText(frame.banner, 12, 22);
    }
    ctx.strokeStyle = frame.accent;
    ctx.lineWidth = 4;
    ctx.strokeRect(0, 0, canvas.width, canvas.height);
  }

  private drawPolyline(frame: Frame, points: ArrayLike<number>[],
                       color: string, width: number, dashed: boolean): void {
    if (points.length < 2) return;
    const { ctx } = this;
    ctx.beginPath();
    const first = this.worldToScreen(frame.camera, points[0] as number[]);
    ctx.moveTo(first[0], first[1]);
    for (let i = 1; i < points.length; i++) {
      const p = this.worldToScreen(frame.camera, points[i] as number[]);
      ctx.lineTo(p[0], p[1]);
    }
    ctx.strokeStyle = color;
    ctx.lineWidth = width;
    ctx.setLineDash(dashed ? [6, 5] : []);
    ctx.stroke();
    ctx.setLineDash([]);
  }

  private drawUnderlay(frame: Frame, underlay: UnderlayPayload): void {
    const { ctx } = this;
    const [x, y] = this.worldToScreen(frame.camera, underlay.position);
    let image = this.images.get(underlay.image);
    if (!image) {
      image = new Image();
      image.src = underlay.image;
      this.images.set(underlay.image, image);
    }
    ctx.save();
    ctx.translate(x, y);
    ctx.rotate(-underlay.rotation);
    ctx.globalAlpha = 0.45;
    const scale = underlay.scale * frame.camera.zoom;
    if (image.complete && image.naturalWidth > 0) {
      ctx.drawImage(image, 0, -image.naturalHeight * (scale / 100),
                    image.naturalWidth * (scale / 100),
                    image.naturalHeight * (scale / 100));
    } else {
      ctx.fillStyle = "#d8d8d0";
      ctx.fillRect(0, -60, 100, 60);
      ctx.fillStyle = "#6b6b66";
      ctx.font = "11px system-ui, sans-serif";
      ctx.fillText(underlay.image, 6, -24);
    }
    ctx.restore();
  }
}
