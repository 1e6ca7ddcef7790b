"""Canonical example sketches, generated synthetically.

Each builder draws a mechanism the way a user would: ink strokes for the
links (kept clear of each other so proximity grouping separates them),
gesture strokes for the joints (placed to touch exactly the two intended
links), then runs recognition, marks ground and drivers, and stores the
built mechanism in the document.  Every builder verifies that recognition
produced exactly the intended topology and that the numbers (anchors,
lengths, mobility) came out right, so a generated file is trustworthy by
construction.

Ground links are drawn as a rail dropped below the pivot line, with short
risers up toward each ground pivot; this keeps the rail clear of links
lying along the pivot line while letting the pivot gestures reach it.

Run ``python -m mechsketch.fixtures [directory]`` to (re)generate the
``.mech.json`` files.
"""

from __future__ import annotations

import math
import sys

import numpy as np

from .mechanism import SceneModel, build_scene
from .recognition import recognize_document
from .sketch import SketchDocument, StrokeMode

GESTURE_RADIUS = 0.28
CIRCLE_SAMPLES = 64

FIXTURE_NAMES = ("fb1", "sc1", "pg1", "triangle", "rocker", "drumpedal")


def _check(cond: bool, message: str) -> None:
    if not cond:
        raise RuntimeError(f"fixture self-check failed: {message}")


def _ts(n: int) -> list[float]:
    return [10.0 * k for k in range(n)]


def circle_points(center, radius: float, n: int = CIRCLE_SAMPLES) -> np.ndarray:
    """n uniform samples on a circle, not closed: the arithmetic mean of the
    samples is then the exact center."""
    ang = 2 * math.pi * np.arange(n) / n
    return np.column_stack([center[0] + radius * np.cos(ang),
                            center[1] + radius * np.sin(ang)])


def segment_points(p0, p1, n: int = 8) -> np.ndarray:
    t = np.linspace(0.0, 1.0, n)[:, None]
    return np.asarray(p0, dtype=np.float64) + t * (np.subtract(p1, p0))


def inset_segment(p0, p1, inset0: float, inset1: float | None = None, n: int = 8) -> np.ndarray:
    """The segment p0..p1 shortened by the given inset at each end."""
    if inset1 is None:
        inset1 = inset0
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    u = (p1 - p0) / np.linalg.norm(p1 - p0)
    return segment_points(p0 + inset0 * u, p1 - inset1 * u, n)


def _add_ink(doc: SketchDocument, points) -> int:
    pts = np.asarray(points, dtype=np.float64)
    return doc.add_stroke(pts, _ts(len(pts)), StrokeMode.INK)


def _add_gesture(doc: SketchDocument, points) -> int:
    pts = np.asarray(points, dtype=np.float64)
    return doc.add_stroke(pts, _ts(len(pts)), StrokeMode.GESTURE)


def circle_circle(c0, r0: float, c1, r1: float, upper: bool = True) -> np.ndarray:
    """Intersection of two circles, picking the branch on +n (upper) side of
    the center line c0->c1."""
    c0 = np.asarray(c0, dtype=np.float64)
    c1 = np.asarray(c1, dtype=np.float64)
    d = float(np.linalg.norm(c1 - c0))
    a = (r0 * r0 - r1 * r1 + d * d) / (2 * d)
    h2 = r0 * r0 - a * a
    if h2 < 0:
        raise ValueError("circles do not intersect")
    h = math.sqrt(h2)
    u = (c1 - c0) / d
    n = np.array([-u[1], u[0]])
    return c0 + a * u + (h if upper else -h) * n


def _verify_recognition(doc: SketchDocument, expected_links, expected_joints):
    """expected_links: {hyp id: stroke set}; expected_joints: {gesture id:
    (kind, a, b, anchor)}.  Returns the built scene."""
    links, joints, issues = recognize_document(doc)
    _check(not issues, f"unexpected recognition issues: {issues}")
    got_links = {h.id: set(h.strokes) for h in links}
    _check(got_links == {k: set(v) for k, v in expected_links.items()},
           f"link grouping mismatch: {got_links}")
    _check(len({h.color for h in links}) == len(links), "link colors not distinct")
    got = {j.id: (j.kind, j.a, j.b) for j in joints}
    want = {jid: spec[:3] for jid, spec in expected_joints.items()}
    _check(got == want, f"joint extraction mismatch: {got} != {want}")
    for j in joints:
        anchor = expected_joints[j.id][3]
        _check(float(np.linalg.norm(j.anchor - anchor)) <= 1e-9,
               f"joint {j.id} anchor off: {j.anchor} vs {anchor}")
    return build_scene(links, joints)


def _finish(doc: SketchDocument, scene: SceneModel, mobility: int) -> SketchDocument:
    mechs = scene.instances()
    _check(len(mechs) == 1, f"expected one instance, got {len(mechs)}")
    _check(mechs[0].mobility() == mobility,
           f"mobility {mechs[0].mobility()} != {mobility}")
    doc.set_mechanism(scene.to_payload())
    return doc


def fb1() -> SketchDocument:
    """Crank-rocker four-bar: ground pivots (0,0) and (8,0), crank 2,
    coupler 6, rocker 5, built at crank angle 0 on the upper branch."""
    O = np.array([0.0, 0.0])
    A = np.array([2.0, 0.0])
    B = np.array([71.0 / 12.0, math.sqrt(36.0 - (47.0 / 12.0) ** 2)])
    C = np.array([8.0, 0.0])

    doc = SketchDocument()
    rail = _add_ink(doc, [(0, -0.1), (0, -0.75), (8, -0.75), (8, -0.1)])
    crank = _add_ink(doc, inset_segment(O, A, 0.4))
    coupler = _add_ink(doc, inset_segment(A, B, 0.4))
    rocker = _add_ink(doc, inset_segment(B, C, 0.4))
    gO = _add_gesture(doc, circle_points(O, GESTURE_RADIUS))
    gA = _add_gesture(doc, circle_points(A, GESTURE_RADIUS))
    gB = _add_gesture(doc, circle_points(B, GESTURE_RADIUS))
    gC = _add_gesture(doc, circle_points(C, GESTURE_RADIUS))

    scene = _verify_recognition(
        doc,
        {rail: {rail}, crank: {crank}, coupler: {coupler}, rocker: {rocker}},
        {
            gO: ("revolute", rail, crank, O),
            gA: ("revolute", crank, coupler, A),
            gB: ("revolute", coupler, rocker, B),
            gC: ("revolute", rail, rocker, C),
        })
    scene.mark_ground(rail)
    scene.set_driver(gO, 1.0)
    scene.track_point(coupler, (A + B) / 2.0)

    mech = scene.instances()[0]
    lengths = mech.link_lengths()
    for lid, want in ((crank, 2.0), (coupler, 6.0), (rocker, 5.0), (rail, 8.0)):
        _check(abs(lengths[lid] - want) <= 1e-9, f"link {lid} length {lengths[lid]}")
    _check(mech.grashof_class() == "Grashof crank-rocker", mech.grashof_class())
    return _finish(doc, scene, 1)


def sc1() -> SketchDocument:
    """Slider-crank: crank 1, rod 3, slider on the x-axis, built at crank
    angle 90 degrees (slider x = sqrt(8))."""
    O = np.array([0.0, 0.0])
    A = np.array([0.0, 1.0])
    B = np.array([math.sqrt(8.0), 0.0])
    rho = GESTURE_RADIUS

    doc = SketchDocument()
    # ground: riser at the crank pivot, deep rail, plateau right of the
    # slider for the prismatic gesture to reach
    rail = _add_ink(doc, [(0, -0.1), (0, -0.5), (3.35, -0.5),
                          (3.35, -0.34), (3.95, -0.34)])
    crank = _add_ink(doc, inset_segment(O, A, 0.34))
    rod = _add_ink(doc, inset_segment(A, B, 0.34))
    bx = float(B[0])
    box = _add_ink(doc, [(bx - 0.2, -0.2), (bx + 0.2, -0.2), (bx + 0.2, 0.2),
                         (bx - 0.2, 0.2), (bx - 0.2, -0.2)])
    gO = _add_gesture(doc, circle_points(O, rho))
    gA = _add_gesture(doc, circle_points(A, rho))
    gB = _add_gesture(doc, circle_points(B, rho))
    gSlide = _add_gesture(doc, segment_points((2.7, -0.27), (3.9, -0.27), 16))

    scene = _verify_recognition(
        doc,
        {rail: {rail}, crank: {crank}, rod: {rod}, box: {box}},
        {
            gO: ("revolute", rail, crank, O),
            gA: ("revolute", crank, rod, A),
            gB: ("revolute", rod, box, B),
            gSlide: ("prismatic", rail, box, np.array([3.3, -0.27])),
        })
    slide = scene.joints[gSlide]
    _check(float(np.linalg.norm(slide.axis_b - [1.0, 0.0])) <= 1e-12,
           f"slider axis {slide.axis_b}")
    scene.mark_ground(rail)
    scene.set_driver(gO, 1.0)
    scene.track_point(box, B)

    lengths = scene.instances()[0].link_lengths()
    _check(abs(lengths[crank] - 1.0) <= 1e-9, f"crank length {lengths[crank]}")
    _check(abs(lengths[rod] - 3.0) <= 1e-9, f"rod length {lengths[rod]}")
    return _finish(doc, scene, 1)


def pg1() -> SketchDocument:
    """Parallelogram linkage: ground 6 between (0,0) and (6,0), cranks 2,
    coupler 6.  Built with the cranks at 90.25 degrees so that a whole-degree
    driver grid stays a quarter degree away from the flattened poses."""
    phi = math.radians(90.25)
    O = np.array([0.0, 0.0])
    C = np.array([6.0, 0.0])
    u = np.array([math.cos(phi), math.sin(phi)])
    A = O + 2.0 * u
    B = C + 2.0 * u

    doc = SketchDocument()
    rail = _add_ink(doc, [(0, -0.1), (0, -0.75), (6, -0.75), (6, -0.1)])
    crank = _add_ink(doc, inset_segment(O, A, 0.38))
    coupler = _add_ink(doc, inset_segment(A, B, 0.38))
    follower = _add_ink(doc, inset_segment(C, B, 0.38))
    gO = _add_gesture(doc, circle_points(O, GESTURE_RADIUS))
    gA = _add_gesture(doc, circle_points(A, GESTURE_RADIUS))
    gB = _add_gesture(doc, circle_points(B, GESTURE_RADIUS))
    gC = _add_gesture(doc, circle_points(C, GESTURE_RADIUS))

    scene = _verify_recognition(
        doc,
        {rail: {rail}, crank: {crank}, coupler: {coupler}, follower: {follower}},
        {
            gO: ("revolute", rail, crank, O),
            gA: ("revolute", crank, coupler, A),
            gB: ("revolute", coupler, follower, B),
            gC: ("revolute", rail, follower, C),
        })
    scene.mark_ground(rail)
    scene.set_driver(gO, 1.0)
    scene.track_point(coupler, (A + B) / 2.0)

    mech = scene.instances()[0]
    _check(mech.grashof_class() == "Grashof change-point", mech.grashof_class())
    return _finish(doc, scene, 1)


def triangle() -> SketchDocument:
    """Three links pinned in a triangle: mobility 0, a structure."""
    O = np.array([0.0, 0.0])
    P = np.array([4.0, 0.0])
    Q = np.array([2.0, 3.0])

    doc = SketchDocument()
    base = _add_ink(doc, inset_segment(O, P, 0.35))
    right = _add_ink(doc, inset_segment(P, Q, 0.35))
    left = _add_ink(doc, inset_segment(Q, O, 0.35))
    gO = _add_gesture(doc, circle_points(O, GESTURE_RADIUS))
    gP = _add_gesture(doc, circle_points(P, GESTURE_RADIUS))
    gQ = _add_gesture(doc, circle_points(Q, GESTURE_RADIUS))

    scene = _verify_recognition(
        doc,
        {base: {base}, right: {right}, left: {left}},
        {
            gO: ("revolute", base, left, O),
            gP: ("revolute", base, right, P),
            gQ: ("revolute", right, left, Q),
        })
    scene.mark_ground(base)
    return _finish(doc, scene, 0)


def rocker() -> SketchDocument:
    """Non-Grashof four-bar driven at the (0,0) rocker: ground 6, driven
    rocker 5, coupler 5.5, output 4.8, built with the rocker at 75 degrees.
    Driving counter-clockwise locks where coupler and output extend to a
    tangent: cos(limit) = (61 - 10.3^2)/60."""
    theta0 = math.radians(75.0)
    O = np.array([0.0, 0.0])
    C = np.array([6.0, 0.0])
    A = 5.0 * np.array([math.cos(theta0), math.sin(theta0)])
    B = circle_circle(A, 5.5, C, 4.8, upper=True)

    doc = SketchDocument()
    rail = _add_ink(doc, [(0, -0.1), (0, -0.75), (6, -0.75), (6, -0.1)])
    arm = _add_ink(doc, inset_segment(O, A, 0.4))
    coupler = _add_ink(doc, inset_segment(A, B, 0.4))
    output = _add_ink(doc, inset_segment(C, B, 0.4))
    gO = _add_gesture(doc, circle_points(O, GESTURE_RADIUS))
    gA = _add_gesture(doc, circle_points(A, GESTURE_RADIUS))
    gB = _add_gesture(doc, circle_points(B, GESTURE_RADIUS))
    gC = _add_gesture(doc, circle_points(C, GESTURE_RADIUS))

    scene = _verify_recognition(
        doc,
        {rail: {rail}, arm: {arm}, coupler: {coupler}, output: {output}},
        {
            gO: ("revolute", rail, arm, O),
            gA: ("revolute", arm, coupler, A),
            gB: ("revolute", coupler, output, B),
            gC: ("revolute", rail, output, C),
        })
    scene.mark_ground(rail)
    scene.set_driver(gO, 1.0)
    scene.track_point(coupler, (A + B) / 2.0)

    mech = scene.instances()[0]
    _check(mech.grashof_class() == "non-Grashof triple-rocker", mech.grashof_class())
    return _finish(doc, scene, 1)


def rocker_limit_angle() -> float:
    """Rotation of the rocker fixture's driven arm, from its build angle,
    at which coupler + output reach full extension (the locking pose)."""
    reach = 5.5 + 4.8
    cos_limit = (61.0 - reach * reach) / 60.0
    return math.acos(cos_limit) - math.radians(75.0)


def drumpedal() -> SketchDocument:
    """A drum-pedal style crank-rocker traced over an image underlay, with
    a beater decoration attached to the rocker and its tip tracked."""
    O = np.array([0.0, 0.0])
    C = np.array([2.6, 0.0])
    phi = math.radians(70.0)
    A = 0.8 * np.array([math.cos(phi), math.sin(phi)])
    B = circle_circle(A, 2.2, C, 1.5, upper=True)

    doc = SketchDocument()
    doc.add_underlay("drum-pedal.png", position=(-0.2, -0.6), scale=1.4)
    rail = _add_ink(doc, [(0, -0.1), (0, -0.55), (2.6, -0.55), (2.6, -0.1)])
    crank = _add_ink(doc, inset_segment(O, A, 0.24))
    strap = _add_ink(doc, inset_segment(A, B, 0.24))
    pedal = _add_ink(doc, inset_segment(C, B, 0.24))
    gO = _add_gesture(doc, circle_points(O, 0.2))
    gA = _add_gesture(doc, circle_points(A, 0.2))
    gB = _add_gesture(doc, circle_points(B, 0.2))
    gC = _add_gesture(doc, circle_points(C, 0.2))

    scene = _verify_recognition(
        doc,
        {rail: {rail}, crank: {crank}, strap: {strap}, pedal: {pedal}},
        {
            gO: ("revolute", rail, crank, O),
            gA: ("revolute", crank, strap, A),
            gB: ("revolute", strap, pedal, B),
            gC: ("revolute", rail, pedal, C),
        })
    scene.mark_ground(rail)
    scene.set_driver(gO, 1.0)

    tip = B + 0.8 * (B - C) / 1.5
    scene.track_point(pedal, tip)
    head = circle_points(tip, 0.12, 24)
    stem = segment_points(B + 0.1 * (B - C) / 1.5, tip - 0.12 * (B - C) / 1.5, 6)
    doc.attach_decoration(pedal, [head, stem])

    mech = scene.instances()[0]
    _check(mech.grashof_class() == "Grashof crank-rocker", mech.grashof_class())
    return _finish(doc, scene, 1)


BUILDERS = {
    "fb1": fb1,
    "sc1": sc1,
    "pg1": pg1,
    "triangle": triangle,
    "rocker": rocker,
    "drumpedal": drumpedal,
}


def write_all(directory) -> list[str]:
    import os

    os.makedirs(directory, exist_ok=True)
    written = []
    for name in FIXTURE_NAMES:
        path = os.path.join(directory, f"{name}.mech.json")
        BUILDERS[name]().save_file(path)
        written.append(path)
    return written


if __name__ == "__main__":
    target = sys.argv[1] if len(sys.argv) > 1 else "fixtures"
    for p in write_all(target):
        print(p)
