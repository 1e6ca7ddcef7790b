"""Batch front door: simulate and inspect sketch files, or host sessions.

Exit codes: 0 success, 1 malformed input or a mechanism that cannot be
simulated (message on stderr prefixed ``error:``), 2 for a simulation that
halted early (locked or singular; artifacts are still written up to the
halt).
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from . import exports
from .errors import MechSketchError
from .kinematics import Status, assemble, initial_state, run
from .mechanism import JointKind, SceneModel, build_scene
from .recognition import recognize_document
from .sketch import SketchDocument

DEFAULT_HOST = "127.0.0.1"
DEFAULT_PORT = 8472


def _fmt(x: float) -> str:
    return repr(float(x))


def _load_document(path) -> SketchDocument:
    return SketchDocument.load_file(path)


def _scene_for(doc: SketchDocument) -> SceneModel:
    """The document's mechanism, or one built on the fly from its strokes."""
    if doc.mechanism is not None:
        return SceneModel.from_payload(doc.mechanism)
    links, joints, _ = recognize_document(doc)
    return build_scene(links, joints)


def _parse_driver(text: str) -> tuple[int, float]:
    joint, sep, rate = text.partition("=")
    if not sep:
        raise ValueError(f"driver override must be JOINT=RATE, got {text!r}")
    return int(joint), float(rate)


def _instance_duration(system, args) -> float:
    if args.duration is not None:
        return float(args.duration)
    cycles = 1.0 if args.cycles is None else float(args.cycles)
    rates = []
    for i, jid in enumerate(system.driver_joint_ids):
        j = system.mechanism.scene.joints[jid]
        if j.kind is JointKind.REVOLUTE and system.rates[i] != 0.0:
            rates.append(abs(float(system.rates[i])))
    if not rates:
        raise MechSketchError(
            "cycles need a revolute driver with a nonzero rate; use --duration")
    return cycles * 2.0 * math.pi / max(rates)


def cmd_simulate(args) -> int:
    doc = _load_document(args.file)
    scene = _scene_for(doc)
    for override in args.driver or ():
        jid, rate = _parse_driver(override)
        scene.set_driver(jid, rate)

    mechanisms = [m for m in scene.instances() if m.joint_ids]
    if not mechanisms:
        raise MechSketchError("no mechanism to simulate")

    all_traces = []
    halted = False
    for mech in mechanisms:
        system = assemble(mech)
        duration = _instance_duration(system, args)
        result = run(system, initial_state(system), duration, dt=args.dt,
                     trace_points=mech.tracked_points())
        all_traces.extend(result.traces)
        final = result.final

        grashof = mech.grashof_class()
        line = f"instance {mech.id}: mobility {mech.mobility()}"
        if grashof:
            line += f", {grashof}"
        print(line)
        print(f"  steps: {result.steps}, status: {result.status.value}")
        print(f"  final residual: {_fmt(final.residual_norm)}")
        print(f"  final t: {_fmt(final.t)}")
        if result.status is not Status.OK:
            halted = True
            if result.blocking:
                for jid, coord in sorted(result.blocking.items()):
                    print(f"  blocked at joint {jid}, driver coordinate {_fmt(coord)}")

    if args.csv:
        exports.write_csv(args.csv, all_traces)
        print(f"wrote {args.csv}")
    if args.svg:
        exports.write_svg(args.svg, all_traces, mechanisms)
        print(f"wrote {args.svg}")
    return 2 if halted else 0


def cmd_recognize(args) -> int:
    doc = _load_document(args.file)
    links, joints, issues = recognize_document(doc)
    if not doc.ink_strokes():
        print("no ink strokes")
    print(f"links: {len(links)}")
    for h in links:
        print(f"  link {h.id}: strokes {list(h.strokes)}, color {h.color}")
    print(f"joints: {len(joints)}")
    for j in joints:
        print(f"  joint {j.id}: {j.kind}, links ({j.a}, {j.b}), "
              f"anchor ({_fmt(j.anchor[0])}, {_fmt(j.anchor[1])})")
    for issue in issues:
        print(f"warning: {issue}")
    if links:
        scene = build_scene(links, joints)
        mechs = scene.instances()
        print(f"instances: {len(mechs)}")
        for m in mechs:
            print(f"  instance {m.id}: links {sorted(m.link_ids)}, "
                  f"mobility {m.mobility()}")
    return 0


def _load_config(path) -> dict:
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise MechSketchError("config must be a JSON object")
    return cfg


def cmd_serve(args) -> int:
    from .server import SessionServer

    cfg = _load_config(args.config)
    host = args.host or cfg.get("host", DEFAULT_HOST)
    port = args.port if args.port is not None else int(cfg.get("port", DEFAULT_PORT))
    try:
        server = SessionServer(host, port,
                               throttle=float(cfg.get("throttle", 60.0)),
                               ping_interval=float(cfg.get("ping_interval", 10.0)),
                               ping_timeout=float(cfg.get("ping_timeout", 30.0)))
    except OSError as exc:
        print(f"error: cannot bind {host}:{port}: {exc}", file=sys.stderr)
        return 1
    print(f"listening on {server.host}:{server.port}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mechsketch",
        description="Sketch-based planar mechanism workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a mechanism file and export traces")
    sim.add_argument("file")
    span = sim.add_mutually_exclusive_group()
    span.add_argument("--duration", type=float, help="driver time to run (seconds)")
    span.add_argument("--cycles", type=float, help="full revolute-driver turns (default 1)")
    sim.add_argument("--dt", type=float, help="time step (default: 1 degree of driver motion)")
    sim.add_argument("--driver", action="append", metavar="JOINT=RATE",
                     help="set a driver rate before simulating (repeatable)")
    sim.add_argument("--csv", metavar="PATH", help="write trace samples as CSV")
    sim.add_argument("--svg", metavar="PATH", help="write trace drawing as SVG")
    sim.set_defaults(func=cmd_simulate)

    rec = sub.add_parser("recognize", help="report links, joints and instances in a sketch")
    rec.add_argument("file")
    rec.set_defaults(func=cmd_recognize)

    srv = sub.add_parser("serve", help="host the session service")
    srv.add_argument("--host", help=f"bind address (default {DEFAULT_HOST})")
    srv.add_argument("--port", type=int, help=f"bind port (default {DEFAULT_PORT})")
    srv.add_argument("--config", metavar="PATH", help="JSON config file")
    srv.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MechSketchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
