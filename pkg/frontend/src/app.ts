/**
 * Application controller: tabs, pointer interaction, and command wiring.
 *
 * The canvas is a projection of the client store plus a thin layer of
 * transient UI state (pending stroke echo, drag bookkeeping, toasts).
 * Every kinematic quantity shown comes from server events; the only numbers
 * invented here are camera parameters and the visual-only interpolation
 * between two received run states.
 */

import { CanvasRenderer, Camera, Frame, PendingStroke } from "./canvas.js";
import { ProtocolError, SessionClient } from "./client.js";
import {
  HypothesesEvent,
  JointPayload,
  MechanismPayload,
  ServerEvent,
  SimStatePayload,
  StrokeMode,
} from "./protocol.js";
import {
  INPUT_RED,
  JOINT_BLUE,
  JointMarker,
  LinkShape,
  Pose,
  TAB_ACCENTS,
  TabName,
  driverCoordinate,
  interpolatePoses,
  jointMarkers,
  linkColor,
  linkShapes,
  pointerAngleAbout,
  posesFromState,
  scrubTarget,
  strokeCommand,
  tracePolylines,
  untransformPoint,
} from "./viewmodel.js";

const HIT_TOLERANCE_PX = 12;
const CLICK_SLOP_PX = 4;
const TOAST_MS = 3500;

type DragKind =
  | { kind: "stroke"; mode: StrokeMode; points: number[][]; t: number[]; started: number }
  | { kind: "scrub"; joint: JointPayload; pivot: [number, number];
      startCoordinate: number; startAngle: number; previousTarget: number }
  | { kind: "joint"; joint: JointPayload; world: [number, number]; moved: boolean }
  | { kind: "pan"; startX: number; startY: number; panX: number; panY: number }
  | { kind: "click"; world: [number, number]; screenX: number; screenY: number;
      shift: boolean };

interface Elements {
  canvas: HTMLCanvasElement;
  tabs: Record<TabName, HTMLButtonElement>;
  controls: Record<TabName, HTMLElement>;
  undo: HTMLButtonElement;
  redo: HTMLButtonElement;
  fit: HTMLButtonElement;
  recognize: HTMLButtonElement;
  build: HTMLButtonElement;
  rate: HTMLInputElement;
  setDriver: HTMLButtonElement;
  run: HTMLButtonElement;
  pause: HTMLButtonElement;
  direction: HTMLButtonElement;
  clearTraces: HTMLButtonElement;
  hint: HTMLElement;
  statusConn: HTMLElement;
  statusSession: HTMLElement;
  statusRevision: HTMLElement;
  statusSim: HTMLElement;
  toasts: HTMLElement;
  banner: HTMLElement;
}

export class App {
  readonly client: SessionClient;
  private renderer: CanvasRenderer;
  private tab: TabName = "sketch";
  private camera: Camera = { panX: 4, panY: 2, zoom: 60 };
  private fitted = false;

  private drag: DragKind | null = null;
  private pendingStroke: PendingStroke | null = null;
  private hypotheses: HypothesesEvent | null = null;

  private running = false;
  private runInstance: number | null = null;
  private direction: 1 | -1 = 1;
  private lockedAt: [number, number] | null = null;

  // visual-only interpolation between the two most recent received states
  private prevState: SimStatePayload | null = null;
  private currState: SimStatePayload | null = null;
  private stateArrivedAt = 0;
  private stateInterval = 100;
  private ticking = false;

  private scrubBusy = false;
  private scrubQueued: number | null = null;

  constructor(private el: Elements, wsUrl: string) {
    this.renderer = new CanvasRenderer(el.canvas);
    this.client = new SessionClient({
      onChange: () => this.onStoreChange(),
      onEvent: (event) => this.onServerEvent(event),
      onStatus: () => this.updateChrome(),
    });
    this.bindUi();
    this.renderer.resize();
    this.client.connect(wsUrl);
    this.updateChrome();
    this.render();
  }

  // -- wiring ----------------------------------------------------------------

  private bindUi(): void {
    const { el } = this;
    (Object.keys(el.tabs) as TabName[]).forEach((name) => {
      el.tabs[name].addEventListener("click", () => this.setTab(name));
    });
    el.undo.addEventListener("click", () => this.send("undo"));
    el.redo.addEventListener("click", () => this.send("redo"));
    el.fit.addEventListener("click", () => { this.fitCamera(); this.render(); });
    el.recognize.addEventListener("click", () => this.doRecognize());
    el.build.addEventListener("click", () => this.doBuild());
    el.setDriver.addEventListener("click", () => this.doSetDriver());
    el.run.addEventListener("click", () => this.doRun());
    el.pause.addEventListener("click", () => this.doPause());
    el.direction.addEventListener("click", () => this.toggleDirection());
    el.clearTraces.addEventListener("click", () => this.send("clear_trace"));

    el.canvas.addEventListener("pointerdown", (e) => this.onPointerDown(e));
    el.canvas.addEventListener("pointermove", (e) => this.onPointerMove(e));
    el.canvas.addEventListener("pointerup", (e) => this.onPointerUp(e));
    el.canvas.addEventListener("pointercancel", () => this.cancelDrag());
    el.canvas.addEventListener("wheel", (e) => this.onWheel(e), { passive: false });
    window.addEventListener("resize", () => this.renderer.resize());
    this.setTab("sketch");
  }

  private setTab(tab: TabName): void {
    this.tab = tab;
    (Object.keys(this.el.tabs) as TabName[]).forEach((name) => {
      const active = name === tab;
      this.el.tabs[name].classList.toggle("active", active);
      this.el.tabs[name].style.borderBottomColor =
        active ? TAB_ACCENTS[name] : "transparent";
      this.el.controls[name].style.display = active ? "flex" : "none";
    });
    const hints: Record<TabName, string> = {
      sketch: "sketching enabled — draw link strokes with pen or mouse",
      build: "draw joint gestures (circle = pin, line = slider); " +
        "recognize, then build; click a joint to pick the input, " +
        "shift-click a link to ground it",
      simulate: "drag the red input joint to scrub; click a link to trace " +
        "a point; drag another joint while paused to edit geometry",
    };
    this.el.hint.textContent = hints[tab];
    this.render();
  }

  // -- commands ---------------------------------------------------------------

  private send(cmd: string, fields: Record<string, unknown> = {},
               terminal?: string): Promise<ServerEvent | null> {
    return this.client.request(cmd, fields, terminal).catch((err: unknown) => {
      this.toast(err instanceof Error ? err.message : String(err));
      return null;
    });
  }

  private async doRecognize(): Promise<void> {
    const reply = await this.send("recognize", {}, "hypotheses");
    if (reply && reply.event === "hypotheses") {
      this.hypotheses = reply;
      for (const issue of reply.issues) this.toast(issue);
      this.toast(`recognized ${reply.links.length} link(s), ` +
                 `${reply.joints.length} joint(s)`);
      this.render();
    }
  }

  private async doBuild(): Promise<void> {
    const reply = await this.send("build", {}, "built");
    if (reply && reply.event === "built") {
      this.hypotheses = null;
      for (const warning of reply.warnings) this.toast(warning);
      const parts = reply.instances.map(
        (i) => `instance ${i.id}: mobility ${i.mobility}`);
      this.toast(parts.length ? parts.join("; ") : "no instances");
    }
  }

  private doSetDriver(): void {
    const joint = this.inputJoint();
    if (!joint) {
      this.toast("select an input joint first");
      return;
    }
    const rate = Math.abs(Number(this.el.rate.value) || 1.0);
    void this.send("set_driver", { joint: joint.id, rate: this.direction * rate });
  }

  private async doRun(): Promise<void> {
    const joint = this.inputJoint();
    if (!joint || joint.rate === null) {
      this.toast("select an input joint and set a driver rate first");
      return;
    }
    if (Math.sign(joint.rate) !== this.direction) {
      const ack = await this.send(
        "set_driver", { joint: joint.id, rate: this.direction * Math.abs(joint.rate) });
      if (!ack) return;
    }
    this.lockedAt = null;
    const duration = 2 * Math.PI / Math.abs(joint.rate);
    void this.send("run", { duration }, "run_finished");
  }

  private doPause(): void {
    const fields: Record<string, unknown> = {};
    if (this.runInstance !== null) fields.instance = this.runInstance;
    void this.send("pause", fields, "paused");
  }

  private toggleDirection(): void {
    this.direction = this.direction === 1 ? -1 : 1;
    this.el.direction.textContent =
      this.direction === 1 ? "dir: ccw" : "dir: cw";
    const joint = this.inputJoint();
    if (joint && joint.rate !== null &&
        Math.sign(joint.rate) !== this.direction) {
      void this.send("set_driver",
                     { joint: joint.id, rate: this.direction * Math.abs(joint.rate) });
    }
  }

  // -- pointer interaction ------------------------------------------------------

  private canvasPoint(e: PointerEvent): [number, number] {
    const rect = this.el.canvas.getBoundingClientRect();
    const ratio = this.el.canvas.width / Math.max(1, rect.width);
    return [(e.clientX - rect.left) * ratio, (e.clientY - rect.top) * ratio];
  }

  private onPointerDown(e: PointerEvent): void {
    e.preventDefault();
    this.el.canvas.setPointerCapture(e.pointerId);
    const [sx, sy] = this.canvasPoint(e);
    const world = this.renderer.screenToWorld(this.camera, sx, sy);

    if (e.button === 1 || e.altKey) {
      this.drag = { kind: "pan", startX: sx, startY: sy,
                    panX: this.camera.panX, panY: this.camera.panY };
      return;
    }

    if (this.tab === "sketch") {
      this.beginStroke(world, "ink");
      return;
    }

    if (this.tab === "build") {
      const marker = this.hitJoint(world);
      if (marker) {
        this.drag = { kind: "click", world, screenX: sx, screenY: sy,
                      shift: e.shiftKey };
        return;
      }
      if (e.shiftKey && this.hitLink(world)) {
        this.drag = { kind: "click", world, screenX: sx, screenY: sy, shift: true };
        return;
      }
      this.beginStroke(world, "gesture");
      return;
    }

    // simulate tab
    const marker = this.hitJoint(world);
    if (marker) {
      const joint = this.mechanism()?.joints.find((j) => j.id === marker.id);
      if (!joint) return;
      if (joint.input && joint.rate !== null) {
        this.beginScrub(joint, marker, world);
      } else if (!this.running) {
        this.drag = { kind: "joint", joint, world, moved: false };
      } else {
        this.toast("pause the run before dragging a joint");
      }
      return;
    }
    if (this.hitLink(world)) {
      this.drag = { kind: "click", world, screenX: sx, screenY: sy,
                    shift: e.shiftKey };
    }
  }

  private onPointerMove(e: PointerEvent): void {
    const drag = this.drag;
    if (!drag) return;
    const [sx, sy] = this.canvasPoint(e);
    const world = this.renderer.screenToWorld(this.camera, sx, sy);
    switch (drag.kind) {
      case "pan":
        this.camera.panX = drag.panX - (sx - drag.startX) / this.camera.zoom;
        this.camera.panY = drag.panY + (sy - drag.startY) / this.camera.zoom;
        this.render();
        break;
      case "stroke":
        drag.points.push([world[0], world[1]]);
        drag.t.push((performance.now() - drag.started) / 1000);
        this.render();
        break;
      case "scrub": {
        const angle = pointerAngleAbout(drag.pivot, world);
        const target = scrubTarget(drag.startCoordinate, drag.startAngle,
                                   angle, drag.previousTarget);
        drag.previousTarget = target;
        this.queueScrub(drag.joint.id, target);
        break;
      }
      case "joint":
        drag.world = world;
        drag.moved = true;
        break;
      case "click":
        break;
    }
  }

  private onPointerUp(e: PointerEvent): void {
    const drag = this.drag;
    this.drag = null;
    if (!drag) return;
    const [sx, sy] = this.canvasPoint(e);
    const world = this.renderer.screenToWorld(this.camera, sx, sy);
    switch (drag.kind) {
      case "pan":
        break;
      case "stroke":
        this.finishStroke(drag);
        break;
      case "scrub":
        break;
      case "joint":
        if (drag.moved) {
          const side = this.movableSide(drag.joint);
          void this.send("move_joint",
                         { joint: drag.joint.id, to: [world[0], world[1]], side });
        }
        break;
      case "click": {
        const slop = Math.hypot(sx - drag.screenX, sy - drag.screenY);
        if (slop > CLICK_SLOP_PX * (window.devicePixelRatio || 1)) break;
        this.handleClick(drag.world, drag.shift);
        break;
      }
    }
  }

  private cancelDrag(): void {
    this.drag = null;
    this.pendingStroke = null;
    this.render();
  }

  private handleClick(world: [number, number], shift: boolean): void {
    if (this.tab === "build") {
      const marker = this.hitJoint(world);
      if (marker) {
        void this.send("select_input", { joint: marker.id });
        return;
      }
      if (shift) {
        const link = this.hitLink(world);
        if (link) void this.send("mark_ground", { link: link.link });
      }
      return;
    }
    if (this.tab === "simulate") {
      const shape = this.hitLink(world);
      if (!shape) return;
      const poses = this.currentPoses();
      const pose = poses.get(shape.link);
      if (!pose) return;
      const local = untransformPoint(pose, world);
      void this.send("trace_point",
                     { link: shape.link, local: [local[0], local[1]] },
                     "tracked").then((reply) => {
        if (reply) this.toast(`tracing point on link ${shape.link}`);
      });
    }
  }

  // -- strokes -------------------------------------------------------------------

  private beginStroke(world: [number, number], mode: StrokeMode): void {
    const drag: Extract<DragKind, { kind: "stroke" }> = {
      kind: "stroke", mode, points: [[world[0], world[1]]],
      t: [0], started: performance.now(),
    };
    this.drag = drag;
    this.pendingStroke = { points: drag.points, mode }; // shared array: echo grows live
    this.render();
  }

  private finishStroke(drag: Extract<DragKind, { kind: "stroke" }>): void {
    const fields = strokeCommand(drag.points, drag.t, drag.mode);
    if (fields === null) {
      // sub-2-point tap: nothing to send
      this.pendingStroke = null;
      this.render();
      return;
    }
    this.client.request("add_stroke", { ...fields })
      .then(() => {
        this.pendingStroke = null; // ack arrived; the store now has the stroke
        this.render();
      })
      .catch((err: unknown) => {
        this.pendingStroke = null; // rejected: remove the echo and explain
        this.render();
        this.toast(err instanceof ProtocolError ? err.message : String(err));
      });
  }

  // -- scrubbing -------------------------------------------------------------------

  private beginScrub(joint: JointPayload, marker: JointMarker,
                     pointerWorld: [number, number]): void {
    const mech = this.mechanism();
    const state = this.latestSimState();
    if (!mech) return;
    const coordinate = state !== null
      ? driverCoordinate(mech, state, joint.id)
      : 0;
    const pivot: [number, number] = [marker.x, marker.y];
    // the grab point defines the reference angle, so the pose never jumps
    this.drag = {
      kind: "scrub",
      joint,
      pivot,
      startCoordinate: coordinate,
      startAngle: pointerAngleAbout(pivot, pointerWorld),
      previousTarget: coordinate,
    };
  }

  /** One scrub in flight at a time; the newest target always wins. */
  private queueScrub(joint: number, target: number): void {
    if (this.scrubBusy) {
      this.scrubQueued = target;
      return;
    }
    this.scrubBusy = true;
    this.client.request("scrub", { joint, target }, "scrubbed")
      .catch((err: unknown) => {
        this.toast(err instanceof Error ? err.message : String(err));
      })
      .finally(() => {
        this.scrubBusy = false;
        if (this.scrubQueued !== null) {
          const next = this.scrubQueued;
          this.scrubQueued = null;
          this.queueScrub(joint, next);
        }
      });
  }

  // -- store / event intake -----------------------------------------------------------

  private onStoreChange(): void {
    const state = this.latestSimState();
    if (state !== this.currState) {
      const now = performance.now();
      if (this.currState !== null) {
        this.stateInterval = Math.min(500, Math.max(16, now - this.stateArrivedAt));
      }
      this.prevState = this.currState;
      this.currState = state;
      this.stateArrivedAt = now;
    }
    if (!this.fitted && this.sceneHasContent()) {
      this.fitCamera();
      this.fitted = true;
    }
    this.updateChrome();
    this.render();
  }

  private onServerEvent(event: ServerEvent): void {
    switch (event.event) {
      case "run_started":
        this.running = true;
        this.runInstance = event.instance;
        this.startTicker();
        break;
      case "run_finished":
        this.running = false;
        this.runInstance = event.instance;
        if (event.status === "locked") {
          this.markLocked(event.blocking);
          this.toast("mechanism locked at its travel limit");
        } else if (event.status === "singular" || event.status === "diverged") {
          this.toast(`run stopped: ${event.status}`);
        }
        this.render();
        break;
      case "scrubbed":
        if (event.status === "locked") {
          this.markLocked(event.blocking);
        } else {
          this.lockedAt = null;
        }
        break;
      default:
        break;
    }
    this.updateChrome();
  }

  private markLocked(blocking?: Record<string, number>): void {
    this.lockedAt = null;
    const mech = this.mechanism();
    if (!mech || !blocking) return;
    const poses = this.currentPoses();
    for (const key of Object.keys(blocking)) {
      const marker = jointMarkers(mech, poses).find((m) => m.id === Number(key));
      if (marker) {
        this.lockedAt = [marker.x, marker.y];
        return;
      }
    }
  }

  // -- state accessors ---------------------------------------------------------------

  private mechanism(): MechanismPayload | null {
    return this.client.store.state.document.mechanism;
  }

  private inputJoint(): JointPayload | null {
    return this.mechanism()?.joints.find((j) => j.input) ?? null;
  }

  private firstInstanceKey(): string | null {
    const keys = Object.keys(this.client.store.state.sim);
    return keys.length ? keys[0] : null;
  }

  private latestSimState(): SimStatePayload | null {
    const key = this.firstInstanceKey();
    return key === null ? null : this.client.store.state.sim[key].state;
  }

  /** Poses at the last received state — exact, no interpolation. */
  private currentPoses(): Map<number, Pose> {
    const mech = this.mechanism();
    if (!mech) return new Map();
    return posesFromState(mech, this.currState);
  }

  private movableSide(joint: JointPayload): number {
    const mech = this.mechanism();
    const ground = new Set(
      (mech?.links ?? []).filter((l) => l.ground).map((l) => l.id));
    if (ground.has(joint.a) && !ground.has(joint.b)) return joint.b;
    return joint.a;
  }

  private sceneHasContent(): boolean {
    const doc = this.client.store.state.document;
    return doc.strokes.length > 0 || doc.mechanism !== null;
  }

  // -- hit testing -------------------------------------------------------------------

  private hitJoint(world: [number, number]): JointMarker | null {
    const mech = this.mechanism();
    if (!mech) return null;
    const tol = HIT_TOLERANCE_PX / this.camera.zoom;
    let best: JointMarker | null = null;
    let bestDist = tol;
    for (const marker of jointMarkers(mech, this.currentPoses())) {
      const d = Math.hypot(marker.x - world[0], marker.y - world[1]);
      if (d <= bestDist) {
        best = marker;
        bestDist = d;
      }
    }
    return best;
  }

  private hitLink(world: [number, number]): LinkShape | null {
    const mech = this.mechanism();
    if (!mech) return null;
    const tol = HIT_TOLERANCE_PX / this.camera.zoom;
    let best: LinkShape | null = null;
    let bestDist = tol;
    for (const shape of linkShapes(mech, this.currentPoses())) {
      for (let i = 0; i + 1 < shape.anchors.length; i++) {
        const d = distToSegment(world, shape.anchors[i], shape.anchors[i + 1]);
        if (d <= bestDist) {
          best = shape;
          bestDist = d;
        }
      }
      if (shape.anchors.length === 1) {
        const d = Math.hypot(shape.anchors[0][0] - world[0],
                             shape.anchors[0][1] - world[1]);
        if (d <= bestDist) {
          best = shape;
          bestDist = d;
        }
      }
    }
    return best;
  }

  // -- camera ------------------------------------------------------------------------

  private onWheel(e: WheelEvent): void {
    e.preventDefault();
    const [sx, sy] = (() => {
      const rect = this.el.canvas.getBoundingClientRect();
      const ratio = this.el.canvas.width / Math.max(1, rect.width);
      return [(e.clientX - rect.left) * ratio, (e.clientY - rect.top) * ratio];
    })();
    const before = this.renderer.screenToWorld(this.camera, sx, sy);
    const factor = Math.exp(-e.deltaY * 0.0012);
    this.camera.zoom = Math.min(2000, Math.max(2, this.camera.zoom * factor));
    const after = this.renderer.screenToWorld(this.camera, sx, sy);
    this.camera.panX += before[0] - after[0];
    this.camera.panY += before[1] - after[1];
    this.render();
  }

  private fitCamera(): void {
    const doc = this.client.store.state.document;
    let minX = Infinity, minY = Infinity, maxX = -Infinity, maxY = -Infinity;
    const take = (p: ArrayLike<number>) => {
      minX = Math.min(minX, p[0]); maxX = Math.max(maxX, p[0]);
      minY = Math.min(minY, p[1]); maxY = Math.max(maxY, p[1]);
    };
    for (const s of doc.strokes) for (const p of s.points) take(p);
    const mech = doc.mechanism;
    if (mech) {
      for (const shape of linkShapes(mech, this.currentPoses())) {
        for (const a of shape.anchors) take(a);
      }
    }
    if (!Number.isFinite(minX)) return;
    const w = Math.max(1e-6, maxX - minX);
    const h = Math.max(1e-6, maxY - minY);
    this.camera.panX = (minX + maxX) / 2;
    this.camera.panY = (minY + maxY) / 2;
    this.camera.zoom = 0.85 * Math.min(this.el.canvas.width / w,
                                       this.el.canvas.height / h);
  }

  // -- rendering ----------------------------------------------------------------------

  private startTicker(): void {
    if (this.ticking) return;
    this.ticking = true;
    const tick = () => {
      if (!this.running) {
        this.ticking = false;
        this.render(); // settle exactly on the last received state
        return;
      }
      this.render();
      requestAnimationFrame(tick);
    };
    requestAnimationFrame(tick);
  }

  /** Poses for display: interpolated mid-run, exact otherwise. */
  private displayPoses(mech: MechanismPayload): Map<number, Pose> {
    const curr = posesFromState(mech, this.currState);
    if (!this.running || this.prevState === null || this.currState === null) {
      return curr;
    }
    const prev = posesFromState(mech, this.prevState);
    const alpha = (performance.now() - this.stateArrivedAt) / this.stateInterval;
    return interpolatePoses(prev, curr, alpha);
  }

  private inkColors(): Map<number, string> {
    const colors = new Map<number, string>();
    const mech = this.mechanism();
    if (mech) {
      for (const link of mech.links) {
        for (const sid of link.strokes) colors.set(sid, linkColor(link.color));
      }
      return colors;
    }
    if (this.hypotheses) {
      for (const link of this.hypotheses.links) {
        for (const sid of link.strokes) colors.set(sid, linkColor(link.color));
      }
    }
    return colors;
  }

  private render(): void {
    const store = this.client.store.state;
    const mech = store.document.mechanism;
    const poses = mech ? this.displayPoses(mech) : new Map<number, Pose>();
    const joints: JointMarker[] = mech ? jointMarkers(mech, poses) : [];
    if (!mech && this.hypotheses) {
      for (const j of this.hypotheses.joints) {
        joints.push({ id: j.id, kind: j.kind, x: j.anchor[0], y: j.anchor[1],
                      input: false, color: JOINT_BLUE });
      }
    }
    const key = this.firstInstanceKey();
    const frame: Frame = {
      accent: TAB_ACCENTS[this.tab],
      camera: { ...this.camera },
      underlays: store.document.underlays,
      strokes: store.document.strokes,
      inkColors: this.inkColors(),
      decorations: store.document.decorations,
      decorationPoses: poses,
      links: mech ? linkShapes(mech, poses) : [],
      joints,
      traces: key !== null ? tracePolylines(store.sim[key]) : [],
      pending: this.pendingStroke,
      lockedAt: this.lockedAt,
      banner: this.client.status === "open"
        ? null
        : "connection lost — reconnecting…",
    };
    this.renderer.submit(frame);
  }

  private updateChrome(): void {
    const { el } = this;
    el.statusConn.textContent = this.client.status;
    el.statusConn.style.color =
      this.client.status === "open" ? "#2e9e5b" : "#c1121f";
    el.statusSession.textContent =
      this.client.session ? this.client.session.slice(0, 8) : "—";
    el.statusRevision.textContent = String(this.client.store.revision);
    const state = this.latestSimState();
    el.statusSim.textContent = state
      ? `${state.status} · t=${state.t.toFixed(3)}`
      : "idle";
    el.banner.style.display = this.client.status === "open" ? "none" : "block";
    this.render();
  }

  private toast(message: string): void {
    const div = document.createElement("div");
    div.className = "toast";
    div.textContent = message;
    this.el.toasts.appendChild(div);
    setTimeout(() => div.remove(), TOAST_MS);
  }
}

function distToSegment(p: [number, number], a: [number, number],
                       b: [number, number]): number {
  const abx = b[0] - a[0];
  const aby = b[1] - a[1];
  const len2 = abx * abx + aby * aby;
  if (len2 === 0) return Math.hypot(p[0] - a[0], p[1] - a[1]);
  let t = ((p[0] - a[0]) * abx + (p[1] - a[1]) * aby) / len2;
  t = Math.max(0, Math.min(1, t));
  return Math.hypot(p[0] - (a[0] + t * abx), p[1] - (a[1] + t * aby));
}

/** Marker color sanity used by tests: input joints red, the rest blue. */
export const MARKER_COLORS = { input: INPUT_RED, normal: JOINT_BLUE } as const;
