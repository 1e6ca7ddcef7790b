"""Sketch sessions behind a message protocol.

A session owns one sketch document (which carries the built mechanism) and
the live simulation state of each mechanism instance.  Commands arrive as
JSON objects and are applied strictly one at a time per session; every
mutating command bumps the session revision by exactly 1 and emits a
``delta`` event describing the change, so a client that applies all deltas
from revision 0 reconstructs the same state a ``snapshot`` reports
(:func:`reduce_delta` is that client-side reducer, used by the tests to
prove it).

Simulation runs execute on a worker thread per mechanism instance and
publish throttled ``delta`` events with batched trace samples.  Any
mutating command first preempts active runs at a step boundary, keeping
the command stream linear.

See PROTOCOL.md for the wire-level field reference.
"""

from __future__ import annotations

import itertools
import json
import threading
import time

import numpy as np

from . import exports
from .errors import (BadEnvelope, InvalidInput, MechSketchError, StaleRevision,
                     UnknownSession)
from .kinematics import (ConstraintSystem, SimState, Status, Trace, assemble,
                         initial_state, reassemble, run, scrub)
from .mechanism import SceneModel, build_scene
from .recognition import recognize_document
from .sketch import SketchDocument, StrokeMode

DEFAULT_THROTTLE = 60.0  # sim-state events per second, per run


def canonical_json(obj) -> str:
    """One stable text form for comparing states byte for byte."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _state_json(state: SimState) -> dict:
    return {
        "t": float(state.t),
        "q": [float(v) for v in state.q],
        "status": state.status.value,
        "iterations": int(state.iterations),
        "residual_norm": float(state.residual_norm),
        "targets": [float(v) for v in state.targets],
    }


def _trace_json(trace: Trace, samples=None) -> dict:
    return {
        "id": trace.id,
        "link": trace.link,
        "local": [float(trace.local[0]), float(trace.local[1])],
        "samples": [[float(t), float(x), float(y)]
                    for t, x, y in (trace.samples if samples is None else samples)],
        "closed": bool(trace.closed),
    }


class _Preempted(Exception):
    pass


class _InstanceSim:
    """Live solver objects for one mechanism instance."""

    def __init__(self, system: ConstraintSystem, state: SimState,
                 traces: dict[int, Trace]):
        self.system = system
        self.state = state
        self.traces = traces

    def to_json(self) -> dict:
        return {
            "state": _state_json(self.state),
            "traces": [_trace_json(self.traces[tid]) for tid in sorted(self.traces)],
        }


def _fresh_sim(mech) -> _InstanceSim:
    system = assemble(mech)
    traces = {t.id: Trace(t.id, t.link, np.asarray(t.local, dtype=np.float64))
              for t in mech.tracked_points()}
    return _InstanceSim(system, initial_state(system), traces)


class _RunWorker(threading.Thread):
    """Marches one run, flushing throttled sim deltas into the session."""

    def __init__(self, session: "Session", seq, sim: _InstanceSim,
                 instance_id: int, duration: float, dt: float | None,
                 throttle: float):
        super().__init__(daemon=True)
        self.session = session
        self.seq = seq
        self.instance_id = instance_id
        self.duration = duration
        self.dt = dt
        self.throttle = max(throttle, 1e-3)
        self.stop_flag = threading.Event()
        # the solver marches private trace copies; each flush folds the fresh
        # samples into the session's traces under the state lock, so snapshots
        # only ever see what the delta stream has already delivered
        self._solver_traces = {
            tid: Trace(tr.id, tr.link, tr.local, samples=list(tr.samples),
                       closed=tr.closed)
            for tid, tr in sim.traces.items()}
        self._flushed = {tid: len(tr.samples)
                         for tid, tr in self._solver_traces.items()}
        self._last_flush = 0.0
        self._last_state: SimState | None = None
        self._pending = False

    def preempt(self) -> None:
        self.stop_flag.set()
        if self is not threading.current_thread():
            self.join()

    def _on_state(self, state: SimState) -> None:
        # samples for `state` are already in the traces when this is called
        self._last_state = state
        self._pending = True
        if self.stop_flag.is_set():
            raise _Preempted()
        now = time.monotonic()
        if now - self._last_flush >= 1.0 / self.throttle:
            self._flush(state)

    def _collect_samples(self, sim: _InstanceSim) -> dict:
        out = {}
        for tid, tr in self._solver_traces.items():
            start = self._flushed.get(tid, 0)
            fresh = tr.samples[start:]
            if fresh:
                live = sim.traces.get(tid)
                if live is not None:
                    live.samples.extend(fresh)
                out[str(tid)] = [[float(t), float(x), float(y)] for t, x, y in fresh]
                self._flushed[tid] = start + len(fresh)
        return out

    def _flush(self, state: SimState, closed: dict | None = None) -> None:
        session = self.session
        with session.state_lock:
            sim = session.sims.get(self.instance_id)
            if sim is None:
                return
            sim.state = state.copy()
            op = {
                "op": "sim_update",
                "instance": self.instance_id,
                "state": _state_json(sim.state),
                "samples": self._collect_samples(sim),
            }
            if closed:
                op["closed"] = closed
                for tid_s, flag in closed.items():
                    live = sim.traces.get(int(tid_s))
                    if live is not None:
                        live.closed = bool(flag)
            session.bump()
            session.broadcast(session.delta_event(self.seq, [op]))
        self._last_flush = time.monotonic()
        self._pending = False

    def run(self) -> None:
        session = self.session
        sim = session.sims[self.instance_id]
        status = "preempted"
        blocking = None
        try:
            result = run(sim.system, sim.state, self.duration, dt=self.dt,
                         trace_points=list(self._solver_traces.values()),
                         on_state=self._on_state)
            status = result.status.value
            blocking = result.blocking
            closed = {str(t.id): bool(t.closed) for t in result.traces}
            self._flush(result.final, closed=closed)
        except _Preempted:
            if self._pending and self._last_state is not None:
                self._flush(self._last_state)
        finally:
            with session.state_lock:
                if session.runs.get(self.instance_id) is self:
                    del session.runs[self.instance_id]
            done = {"event": "run_finished", "seq": self.seq,
                    "session": self.session.id, "instance": self.instance_id,
                    "status": status}
            if blocking:
                done["blocking"] = {str(j): float(c) for j, c in blocking.items()}
            session.broadcast(done)


class Session:
    """One sketch document plus its live simulations and revision counter."""

    def __init__(self, session_id: str):
        self.id = session_id
        self.doc = SketchDocument()
        self.revision = 0
        self.sims: dict[int, _InstanceSim] = {}
        self.runs: dict[int, _RunWorker] = {}
        self.command_lock = threading.Lock()
        self.state_lock = threading.Lock()
        self.subscribers: list = []
        self.dirty = False

    # -- events -------------------------------------------------------------

    def subscribe(self, outbox) -> None:
        with self.state_lock:
            if outbox not in self.subscribers:
                self.subscribers.append(outbox)

    def unsubscribe(self, outbox) -> None:
        with self.state_lock:
            if outbox in self.subscribers:
                self.subscribers.remove(outbox)

    def broadcast(self, event: dict) -> None:
        for outbox in list(self.subscribers):
            outbox(event)

    def bump(self) -> None:
        self.revision += 1
        self.dirty = True

    def delta_event(self, seq, ops: list[dict]) -> dict:
        return {"event": "delta", "seq": seq, "session": self.id,
                "revision": self.revision, "ops": ops}

    # -- state ---------------------------------------------------------------

    def scene(self) -> SceneModel:
        if self.doc.mechanism is None:
            raise InvalidInput("no mechanism built yet")
        return SceneModel.from_payload(self.doc.mechanism)

    def snapshot_json(self) -> dict:
        return {
            "document": self.doc.to_payload(),
            "sim": {str(i): sim.to_json() for i, sim in sorted(self.sims.items())},
        }

    def preempt_runs(self) -> None:
        for worker in list(self.runs.values()):
            worker.preempt()

    def sync_sim_traces(self, scene: SceneModel) -> list[int]:
        """Align live trace objects with the scene's tracked points.

        Returns the ids of instances whose trace set changed (their clients
        need a sim_reset to learn the new set).
        """
        changed = []
        for instance_id, sim in self.sims.items():
            mech = scene.instance(instance_id)
            wanted = {t.id: t for t in mech.tracked_points()}
            dirty = False
            for tid in list(sim.traces):
                if tid not in wanted:
                    del sim.traces[tid]
                    dirty = True
            for tid, t in wanted.items():
                if tid not in sim.traces:
                    sim.traces[tid] = Trace(t.id, t.link,
                                            np.asarray(t.local, dtype=np.float64))
                    dirty = True
            if dirty:
                changed.append(instance_id)
        return changed


def reduce_delta(state: dict, event: dict) -> dict:
    """Apply one delta event to a client-side state dict.

    ``state`` has the same shape as a snapshot: {"document": ..., "sim": ...}.
    Mutates and returns it.  This is the reference reducer used to prove
    event completeness; clients implement the same semantics.
    """
    for op in event["ops"]:
        kind = op["op"]
        if kind == "stroke_added":
            state["document"]["strokes"].append(op["stroke"])
        elif kind == "underlay_set":
            state["document"]["underlays"].append(op["underlay"])
        elif kind == "decoration_added":
            state["document"]["decorations"].append(op["decoration"])
        elif kind == "mechanism_set":
            state["document"]["mechanism"] = op["mechanism"]
        elif kind == "doc_replaced":
            state["document"] = op["document"]
        elif kind == "sim_reset":
            state["sim"][str(op["instance"])] = {
                "state": op["state"], "traces": op["traces"],
            }
        elif kind == "sim_update":
            entry = state["sim"][str(op["instance"])]
            entry["state"] = op["state"]
            for trace in entry["traces"]:
                fresh = op["samples"].get(str(trace["id"]))
                if fresh:
                    trace["samples"].extend(fresh)
                closed = op.get("closed", {}).get(str(trace["id"]))
                if closed is not None:
                    trace["closed"] = closed
        elif kind == "sim_cleared":
            if op.get("instance") is None:
                state["sim"] = {}
            else:
                state["sim"].pop(str(op["instance"]), None)
        else:
            raise ValueError(f"unknown delta op {kind!r}")
    return state


def empty_state() -> dict:
    return {"document": SketchDocument().to_payload(), "sim": {}}


class SessionHub:
    """All live sessions; the transport-independent command dispatcher."""

    def __init__(self, throttle: float = DEFAULT_THROTTLE):
        self.throttle = throttle
        self.sessions: dict[str, Session] = {}
        self._ids = itertools.count(1)
        self._lock = threading.Lock()

    # -- plumbing -------------------------------------------------------------

    def create_session(self) -> Session:
        with self._lock:
            session = Session(f"s{next(self._ids)}")
            self.sessions[session.id] = session
        return session

    def session(self, session_id) -> Session:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise UnknownSession(f"no session {session_id!r}") from None

    def shutdown(self) -> None:
        import logging

        log = logging.getLogger("mechsketch.service")
        for session in list(self.sessions.values()):
            session.preempt_runs()
            if session.dirty:
                log.warning("session %s has unsaved changes", session.id)

    def handle(self, envelope: dict, outbox=None) -> list[dict]:
        """Apply one command envelope; returns the reply events.

        Delta events are also broadcast to session subscribers; replies are
        returned so the transport can route them to the requester (who may
        not be subscribed).  ``outbox``, when given, is subscribed to the
        session the command touches.
        """
        if not isinstance(envelope, dict):
            raise BadEnvelope("message must be a JSON object")
        seq = envelope.get("seq")
        if not isinstance(seq, int):
            raise BadEnvelope("missing integer 'seq'")
        cmd = envelope.get("cmd")
        if not isinstance(cmd, str):
            raise BadEnvelope("missing string 'cmd'")

        if cmd == "create_session":
            session = self.create_session()
            if outbox is not None:
                session.subscribe(outbox)
            return [{"event": "session_created", "seq": seq,
                     "session": session.id, "revision": session.revision}]

        session = self.session(envelope.get("session"))
        if outbox is not None:
            session.subscribe(outbox)
        handler = _COMMANDS.get(cmd)
        if handler is None:
            raise BadEnvelope(f"unknown command {cmd!r}")

        with session.command_lock:
            if cmd in _MUTATING:
                session.preempt_runs()
            replies = handler(self, session, seq, envelope)
        if outbox is not None:
            # delta events already reached the requester via subscription
            replies = [e for e in replies if e.get("event") != "delta"]
        return replies


# -- command handlers ---------------------------------------------------------
# Each returns the list of reply events; delta events are broadcast inside.


def _check_revision(session: Session, envelope: dict) -> None:
    given = envelope.get("revision")
    if given is not None and given != session.revision:
        raise StaleRevision(session.revision, given)


def _mutate(session: Session, seq, ops: list[dict], extra=None) -> list[dict]:
    session.bump()
    event = session.delta_event(seq, ops)
    session.broadcast(event)
    events = [event]
    if extra:
        events.extend(extra)
    return events


def _require(envelope: dict, field: str):
    if field not in envelope:
        raise BadEnvelope(f"command {envelope.get('cmd')!r} needs {field!r}")
    return envelope[field]


def _stroke_payload(doc: SketchDocument, sid: int) -> dict:
    s = doc.strokes[sid]
    return {
        "id": s.id,
        "mode": s.mode.value,
        "points": [[float(x), float(y)] for x, y in s.points],
        "t": [float(t) for t in s.timestamps],
    }


def _cmd_add_stroke(hub, session, seq, env):
    with session.state_lock:
        _check_revision(session, env)
        points = _require(env, "points")
        mode = StrokeMode(env.get("mode", "ink"))
        sid = session.doc.add_stroke(points, env.get("t"), mode)
        op = {"op": "stroke_added", "stroke": _stroke_payload(session.doc, sid)}
        return _mutate(session, seq, [op])


def _cmd_set_underlay(hub, session, seq, env):
    with session.state_lock:
        _check_revision(session, env)
        uid = session.doc.add_underlay(
            str(_require(env, "image")),
            position=env.get("position", (0.0, 0.0)),
            scale=float(env.get("scale", 1.0)),
            rotation=float(env.get("rotation", 0.0)))
        u = session.doc.underlays[uid]
        op = {"op": "underlay_set", "underlay": {
            "id": u.id, "image": u.image,
            "position": [float(u.position[0]), float(u.position[1])],
            "scale": float(u.scale), "rotation": float(u.rotation)}}
        return _mutate(session, seq, [op])


def _cmd_attach_decoration(hub, session, seq, env):
    with session.state_lock:
        _check_revision(session, env)
        did = session.doc.attach_decoration(
            int(_require(env, "host_link")), _require(env, "strokes"))
        d = session.doc.decorations[did]
        op = {"op": "decoration_added", "decoration": {
            "id": d.id, "host_link": d.host_link,
            "strokes": [[[float(x), float(y)] for x, y in poly] for poly in d.points]}}
        return _mutate(session, seq, [op])


def _history_op(session: Session, seq, applied: bool, cmd: str) -> list[dict]:
    if not applied:
        return [{"event": "noop", "seq": seq, "session": session.id,
                 "command": cmd, "revision": session.revision}]
    session.sims.clear()
    session.runs.clear()
    ops = [{"op": "doc_replaced", "document": session.doc.to_payload()},
           {"op": "sim_cleared", "instance": None}]
    return _mutate(session, seq, ops)


def _cmd_undo(hub, session, seq, env):
    with session.state_lock:
        _check_revision(session, env)
        return _history_op(session, seq, session.doc.undo(), "undo")


def _cmd_redo(hub, session, seq, env):
    with session.state_lock:
        _check_revision(session, env)
        return _history_op(session, seq, session.doc.redo(), "redo")


def _hypotheses_json(links, joints, issues) -> dict:
    return {
        "links": [{"id": h.id, "strokes": list(h.strokes), "color": h.color}
                  for h in links],
        "joints": [{
            "id": j.id, "kind": j.kind, "a": j.a, "b": j.b,
            "anchor": [float(j.anchor[0]), float(j.anchor[1])],
            "axis": None if j.axis is None else [float(j.axis[0]), float(j.axis[1])],
        } for j in joints],
        "issues": list(issues),
    }


def _cmd_recognize(hub, session, seq, env):
    with session.state_lock:
        links, joints, issues = recognize_document(session.doc)
        event = {"event": "hypotheses", "seq": seq, "session": session.id,
                 "revision": session.revision}
        event.update(_hypotheses_json(links, joints, issues))
        return [event]


def _cmd_build(hub, session, seq, env):
    with session.state_lock:
        _check_revision(session, env)
        links, joints, issues = recognize_document(session.doc)
        warnings = list(issues)
        if session.doc.mechanism is None:
            scene = build_scene(links, joints)
        else:
            scene = SceneModel.from_payload(session.doc.mechanism)
            warnings.extend(scene.set_links(links))
            for jh in joints:
                if jh.id not in scene.joints:
                    scene.add_joint(jh)
        session.doc.set_mechanism(scene.to_payload())
        session.sims.clear()
        ops = [{"op": "mechanism_set", "mechanism": session.doc.mechanism},
               {"op": "sim_cleared", "instance": None}]
        info = {"event": "built", "seq": seq, "session": session.id,
                "warnings": warnings,
                "instances": [{"id": m.id, "links": sorted(m.link_ids),
                               "mobility": m.mobility()}
                              for m in scene.instances()]}
        return _mutate(session, seq, ops, extra=[info])


def _scene_edit(hub, session, seq, env, edit, invalidates=None) -> list[dict]:
    """Shared wrapper: mutate a detached scene, store it, emit the delta.

    ``invalidates``, when given, maps the scene to the instance whose
    constraint system the edit makes stale; that instance's live sim is
    dropped (clients get a sim_cleared op).
    """
    with session.state_lock:
        _check_revision(session, env)
        scene = session.scene()
        stale = None if invalidates is None else invalidates(scene)
        edit(scene)
        session.doc.set_mechanism(scene.to_payload())
        ops = [{"op": "mechanism_set", "mechanism": session.doc.mechanism}]
        if stale is not None and stale in session.sims:
            del session.sims[stale]
            ops.append({"op": "sim_cleared", "instance": stale})
        for iid in session.sync_sim_traces(scene):
            ops.append({"op": "sim_reset", "instance": iid,
                        **session.sims[iid].to_json()})
        return _mutate(session, seq, ops)


def _cmd_mark_ground(hub, session, seq, env):
    link = int(_require(env, "link"))
    return _scene_edit(hub, session, seq, env,
                       lambda scene: scene.mark_ground(link),
                       invalidates=lambda scene: scene.instance_of_link(link).id)


def _cmd_add_joint_gesture(hub, session, seq, env):
    with session.state_lock:
        _check_revision(session, env)
        sid = int(_require(env, "stroke"))
        gesture = session.doc.stroke(sid)
        links, _, _ = recognize_document(session.doc)
        from .recognition import extract_joint

        jh = extract_joint(gesture, links, dict(session.doc.strokes))
        if session.doc.mechanism is None:
            scene = build_scene(links, [jh])
        else:
            scene = SceneModel.from_payload(session.doc.mechanism)
            scene.add_joint(jh)
        session.doc.set_mechanism(scene.to_payload())
        ops = [{"op": "mechanism_set", "mechanism": session.doc.mechanism}]
        return _mutate(session, seq, ops)


def _joint_instance(joint_id):
    return lambda scene: scene.instance_of_joint(joint_id).id


def _cmd_select_input(hub, session, seq, env):
    joint = int(_require(env, "joint"))
    return _scene_edit(hub, session, seq, env,
                       lambda scene: scene.select_input(joint),
                       invalidates=_joint_instance(joint))


def _cmd_set_driver(hub, session, seq, env):
    joint = int(_require(env, "joint"))
    rate = float(_require(env, "rate"))
    return _scene_edit(hub, session, seq, env,
                       lambda scene: scene.set_driver(joint, rate),
                       invalidates=_joint_instance(joint))


def _cmd_trace_point(hub, session, seq, env):
    tracked = {}

    def edit(scene):
        t = scene.track_point(int(_require(env, "link")), _require(env, "local"))
        tracked["id"] = t.id

    events = _scene_edit(hub, session, seq, env, edit)
    events.append({"event": "tracked", "seq": seq, "session": events[0]["session"],
                   "tracked": tracked["id"]})
    return events


def _cmd_clear_trace(hub, session, seq, env):
    return _scene_edit(hub, session, seq, env,
                       lambda scene: scene.clear_tracked(env.get("tracked")))


def _sim_for(session: Session, scene: SceneModel, instance_id) -> tuple[int, _InstanceSim, list[dict]]:
    """The live sim for an instance, created at the build pose on first use.

    Returns (instance id, sim, ops) where ops carry a sim_reset when the sim
    was just created.
    """
    mechs = scene.instances()
    if instance_id is None:
        driven = [m for m in mechs if m.driver_joints()]
        if len(driven) != 1:
            raise InvalidInput("specify 'instance': scene does not have exactly "
                               "one driven mechanism")
        instance_id = driven[0].id
    mech = scene.instance(int(instance_id))
    sim = session.sims.get(mech.id)
    if sim is None:
        sim = _fresh_sim(mech)
        session.sims[mech.id] = sim
        return mech.id, sim, [{"op": "sim_reset", "instance": mech.id,
                               **sim.to_json()}]
    return mech.id, sim, []


def _cmd_run(hub, session, seq, env):
    with session.state_lock:
        _check_revision(session, env)
        instance_id, sim, ops = _sim_for(session, session.scene(), env.get("instance"))
        duration = float(env.get("duration", 0.0))
        if duration <= 0.0:
            raise InvalidInput("run duration must be positive")
        dt = env.get("dt")
        worker = _RunWorker(session, seq, sim, instance_id, duration,
                            None if dt is None else float(dt),
                            float(env.get("throttle", hub.throttle)))
        session.runs[instance_id] = worker
        events = []
        if ops:
            events.extend(_mutate(session, seq, ops))
        events.append({"event": "run_started", "seq": seq, "session": session.id,
                       "instance": instance_id, "revision": session.revision})
    worker.start()
    return events


def _cmd_pause(hub, session, seq, env):
    # runs were already preempted because pause is marked mutating; that is
    # its entire effect, so no revision bump of its own
    with session.state_lock:
        sim = None
        instance = env.get("instance")
        if instance is not None:
            entry = session.sims.get(int(instance))
            sim = None if entry is None else _state_json(entry.state)
        return [{"event": "paused", "seq": seq, "session": session.id,
                 "revision": session.revision, "state": sim}]


def _cmd_scrub(hub, session, seq, env):
    with session.state_lock:
        _check_revision(session, env)
        scene = session.scene()
        joint_id = int(_require(env, "joint"))
        target = float(_require(env, "target"))
        mech = scene.instance_of_joint(joint_id)
        instance_id, sim, ops = _sim_for(session, scene, mech.id)
        before = {tid: len(tr.samples) for tid, tr in sim.traces.items()}
        result = scrub(sim.system, sim.state, joint_id, target,
                       trace_points=list(sim.traces.values()))
        sim.state = result.final.copy()
        samples = {}
        for tid, tr in sim.traces.items():
            fresh = tr.samples[before[tid]:]
            if fresh:
                samples[str(tid)] = [[float(t), float(x), float(y)]
                                     for t, x, y in fresh]
        ops.append({"op": "sim_update", "instance": instance_id,
                    "state": _state_json(sim.state), "samples": samples})
        extra = [{"event": "scrubbed", "seq": seq, "session": session.id,
                  "instance": instance_id, "status": result.status.value,
                  **({"blocking": {str(j): float(c)
                                   for j, c in result.blocking.items()}}
                     if result.blocking else {})}]
        return _mutate(session, seq, ops, extra=extra)


def _cmd_move_joint(hub, session, seq, env):
    with session.state_lock:
        _check_revision(session, env)
        scene = session.scene()
        joint_id = int(_require(env, "joint"))
        to = _require(env, "to")
        side = int(_require(env, "side"))
        mech = scene.instance_of_joint(joint_id)
        sim = session.sims.get(mech.id)
        poses = None
        if sim is not None:
            poses = sim.system.poses(sim.state.q)
        scene.move_joint(joint_id, to, side, poses=poses)
        session.doc.set_mechanism(scene.to_payload())
        ops = [{"op": "mechanism_set", "mechanism": session.doc.mechanism}]
        if sim is not None:
            # geometry changed: rebuild the system, re-close the loops at the
            # current driver coordinates, and drop stale trace curves
            mech = scene.instance(mech.id)
            system = assemble(mech)
            try:
                state = reassemble(system, sim.state)
            except MechSketchError:
                del session.sims[mech.id]
                ops.append({"op": "sim_cleared", "instance": mech.id})
            else:
                traces = {t.id: Trace(t.id, t.link,
                                      np.asarray(t.local, dtype=np.float64))
                          for t in mech.tracked_points()}
                session.sims[mech.id] = _InstanceSim(system, state, traces)
                ops.append({"op": "sim_reset", "instance": mech.id,
                            **session.sims[mech.id].to_json()})
        return _mutate(session, seq, ops)


def _cmd_save(hub, session, seq, env):
    with session.state_lock:
        data = session.doc.save().decode("utf-8")
        session.dirty = False
        return [{"event": "saved", "seq": seq, "session": session.id,
                 "revision": session.revision, "data": data}]


def _cmd_load(hub, session, seq, env):
    with session.state_lock:
        _check_revision(session, env)
        doc = SketchDocument.load(_require(env, "data"))
        session.doc = doc
        session.sims.clear()
        session.runs.clear()
        session.dirty = False
        ops = [{"op": "doc_replaced", "document": doc.to_payload()},
               {"op": "sim_cleared", "instance": None}]
        events = _mutate(session, seq, ops)
        session.dirty = False
        return events


def _cmd_snapshot(hub, session, seq, env):
    with session.state_lock:
        event = {"event": "snapshot", "seq": seq, "session": session.id,
                 "revision": session.revision}
        event.update(session.snapshot_json())
        return [event]


def _cmd_export_trace(hub, session, seq, env):
    with session.state_lock:
        fmt = env.get("format", "csv")
        instance = env.get("instance")
        sims = session.sims
        if instance is not None:
            entry = sims.get(int(instance))
            if entry is None:
                raise InvalidInput(f"no simulation for instance {instance}")
            sims = {int(instance): entry}
        if not sims:
            raise InvalidInput("nothing simulated yet")
        traces = [tr for sim in sims.values()
                  for _, tr in sorted(sim.traces.items())]
        if fmt == "csv":
            data = exports.traces_to_csv(traces)
        elif fmt == "svg":
            scene = session.scene()
            mechs = [scene.instance(i) for i in sorted(sims)]
            data = exports.traces_to_svg(traces, mechs)
        else:
            raise BadEnvelope(f"unknown export format {fmt!r}")
        return [{"event": "export", "seq": seq, "session": session.id,
                 "format": fmt, "data": data}]


_COMMANDS = {
    "add_stroke": _cmd_add_stroke,
    "undo": _cmd_undo,
    "redo": _cmd_redo,
    "set_underlay": _cmd_set_underlay,
    "attach_decoration": _cmd_attach_decoration,
    "recognize": _cmd_recognize,
    "build": _cmd_build,
    "mark_ground": _cmd_mark_ground,
    "add_joint_gesture": _cmd_add_joint_gesture,
    "select_input": _cmd_select_input,
    "set_driver": _cmd_set_driver,
    "run": _cmd_run,
    "pause": _cmd_pause,
    "scrub": _cmd_scrub,
    "move_joint": _cmd_move_joint,
    "trace_point": _cmd_trace_point,
    "clear_trace": _cmd_clear_trace,
    "save": _cmd_save,
    "load": _cmd_load,
    "snapshot": _cmd_snapshot,
    "export_trace": _cmd_export_trace,
}

# commands that change canonical session state (bump revision, and must
# preempt active runs before applying); pause preempts without bumping
_MUTATING = {
    "add_stroke", "undo", "redo", "set_underlay", "attach_decoration",
    "build", "mark_ground", "add_joint_gesture", "select_input", "set_driver",
    "run", "pause", "scrub", "move_joint", "trace_point", "clear_trace", "load",
}


def error_event(seq, exc: Exception, session: Session | None = None) -> dict:
    event = {"event": "error", "seq": seq, "error": type(exc).__name__,
             "message": str(exc)}
    if session is not None:
        event["session"] = session.id
        event["revision"] = session.revision
    return event
