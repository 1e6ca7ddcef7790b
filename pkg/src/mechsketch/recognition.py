"""Turning ink and gestures into linkage hypotheses.

Links: ink strokes are grouped into rigid-link hypotheses by proximity --
two strokes belong to the same link when their polylines pass within a
tolerance of each other (transitively).  Every link gets a color from a
fixed 12-color palette so clients can render components distinctly.

Joints: a gesture stroke is classified as a circle (revolute), a straight
line (prismatic) or unknown.  The joint anchor is the arithmetic mean of
the gesture's sample points; for partial arcs this mean is biased toward
the drawn side, which is accepted behavior rather than corrected.  A
prismatic gesture's motion axis is the direction of the least-squares line
through its points.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import geometry
from .errors import AmbiguousJoint, NotAGesture
from .sketch import Stroke, StrokeMode

# Fraction of the scene bounding-box diagonal used as the proximity
# tolerance for grouping and joint attachment.
EPSILON_FRACTION = 0.02

# Gesture thresholds.  Circle wins ties: it is tested first.
CLOSURE_MAX = 0.30          # endpoint gap / path length
RADIAL_CV_MAX = 0.25        # std/mean of radii about the coordinate centroid
LINE_DEVIATION_FRACTION = 0.05  # max perpendicular deviation / path length

PALETTE = (
    "#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#42d4f4",
    "#f032e6", "#bfef45", "#fabed4", "#469990", "#9a6324", "#800000",
)


class GestureClass(enum.Enum):
    CIRCLE = "circle"
    LINE = "line"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class LinkHypothesis:
    """A proposed rigid link: a set of ink strokes plus a display color."""

    id: int
    strokes: tuple[int, ...]
    color: int

    @property
    def color_hex(self) -> str:
        return PALETTE[self.color]


@dataclass
class JointHypothesis:
    """A proposed joint between two link hypotheses, in world coordinates."""

    id: int
    kind: str                      # "revolute" | "prismatic"
    a: int
    b: int
    anchor: np.ndarray
    axis: np.ndarray | None = None


def default_epsilon(polylines) -> float:
    """Proximity tolerance: 2% of the diagonal of the scene bounds."""
    return EPSILON_FRACTION * geometry.diagonal(polylines)


def group_links(strokes: list[Stroke], epsilon: float | None = None) -> list[LinkHypothesis]:
    """Partition ink strokes into link hypotheses by polyline proximity.

    The partition is the transitive closure of "minimum distance <= epsilon".
    Output order and ids are deterministic: each hypothesis is identified by
    its lowest member stroke id, hypotheses are sorted by that id, and colors
    are assigned round-robin in that order.  Stroke input order never affects
    the result.
    """
    ink = [s for s in strokes if s.mode is StrokeMode.INK]
    if not ink:
        return []
    if epsilon is None:
        epsilon = default_epsilon([s.points for s in ink])

    ink = sorted(ink, key=lambda s: s.id)
    parent = {s.id: s.id for s in ink}

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x: int, y: int) -> None:
        rx, ry = find(x), find(y)
        if rx != ry:
            # keep the smaller id as the representative
            if ry < rx:
                rx, ry = ry, rx
            parent[ry] = rx

    for i in range(len(ink)):
        for k in range(i + 1, len(ink)):
            if geometry.polyline_distance(ink[i].points, ink[k].points) <= epsilon:
                union(ink[i].id, ink[k].id)

    groups: dict[int, list[int]] = {}
    for s in ink:
        groups.setdefault(find(s.id), []).append(s.id)

    hypotheses = []
    for order, root in enumerate(sorted(groups)):
        members = tuple(sorted(groups[root]))
        hypotheses.append(LinkHypothesis(id=members[0], strokes=members, color=order % len(PALETTE)))
    return hypotheses


def gesture_metrics(points: np.ndarray) -> dict:
    """The raw quantities the classifier thresholds are applied to."""
    pts = np.asarray(points, dtype=np.float64)
    length = geometry.path_length(pts)
    closure = float(np.linalg.norm(pts[-1] - pts[0])) / length
    centroid = pts.mean(axis=0)
    radii = np.linalg.norm(pts - centroid, axis=1)
    mean_r = float(radii.mean())
    radial_cv = float(radii.std() / mean_r) if mean_r > 0 else float("inf")
    deviation = geometry.max_line_deviation(pts) / length
    return {
        "path_length": length,
        "closure": closure,
        "radial_cv": radial_cv,
        "line_deviation": float(deviation),
        "centroid": centroid,
        "mean_radius": mean_r,
    }


def classify_gesture(stroke) -> GestureClass:
    """Classify a gesture stroke as circle, line or unknown.

    Accepts a gesture-mode :class:`Stroke` or a bare point array.  The circle
    test runs first, so shapes passing both (none in practice) are circles.
    """
    if isinstance(stroke, Stroke):
        if stroke.mode is not StrokeMode.GESTURE:
            raise NotAGesture(f"stroke {stroke.id} is ink, not a gesture")
        points = stroke.points
    else:
        points = np.asarray(stroke, dtype=np.float64)
    m = gesture_metrics(points)
    if m["closure"] <= CLOSURE_MAX and m["radial_cv"] <= RADIAL_CV_MAX:
        return GestureClass.CIRCLE
    if m["line_deviation"] <= LINE_DEVIATION_FRACTION:
        return GestureClass.LINE
    return GestureClass.UNKNOWN


def recognize_document(doc, epsilon: float | None = None):
    """Run full recognition over a document's strokes.

    Returns ``(links, joints, issues)``: link hypotheses from ink grouping,
    joint hypotheses from every interpretable gesture, and human-readable
    notes for gestures that could not be interpreted (unknown shape or an
    ambiguous link count).  Decorations and underlays are never consulted.
    """
    ink = doc.ink_strokes()
    if epsilon is None:
        epsilon = default_epsilon([s.points for s in ink])
    links = group_links(ink, epsilon) if ink else []
    strokes_by_id = dict(doc.strokes)
    joints: list[JointHypothesis] = []
    issues: list[str] = []
    for g in sorted(doc.gesture_strokes(), key=lambda s: s.id):
        try:
            joints.append(extract_joint(g, links, strokes_by_id, epsilon))
        except (AmbiguousJoint, NotAGesture) as exc:
            issues.append(f"gesture {g.id}: {exc}")
    return links, joints, issues


def extract_joint(gesture: Stroke, hypotheses: list[LinkHypothesis],
                  strokes_by_id: dict[int, Stroke],
                  epsilon: float | None = None) -> JointHypothesis:
    """Interpret a gesture stroke as a joint between exactly two links.

    The candidate links are those whose ink polylines pass within epsilon of
    the gesture polyline.  Anything other than exactly two is ambiguous.
    The link pair is ordered by hypothesis id.
    """
    kind = classify_gesture(gesture)
    if kind is GestureClass.UNKNOWN:
        raise NotAGesture("gesture is neither a circle nor a straight line")

    if epsilon is None:
        polys = [s.points for s in strokes_by_id.values() if s.mode is StrokeMode.INK]
        epsilon = default_epsilon(polys)

    touched = []
    for hyp in hypotheses:
        dist = min(
            geometry.polyline_distance(gesture.points, strokes_by_id[sid].points)
            for sid in hyp.strokes
        )
        if dist <= epsilon:
            touched.append(hyp)
    if len(touched) != 2:
        raise AmbiguousJoint(len(touched), [h.id for h in touched])

    touched.sort(key=lambda h: h.id)
    anchor = gesture.points.mean(axis=0)
    if kind is GestureClass.CIRCLE:
        return JointHypothesis(gesture.id, "revolute", touched[0].id, touched[1].id, anchor)
    _, direction = geometry.fit_line(gesture.points)
    return JointHypothesis(gesture.id, "prismatic", touched[0].id, touched[1].id, anchor,
                           axis=direction)
