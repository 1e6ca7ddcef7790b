"""Sketch document: strokes, underlays, decorations, persistence, history.

A document is the unit of saving and of session state.  Undo/redo works on
canonical serialized snapshots, which makes the round-trip guarantees exact:
undo followed by redo restores the pre-undo document byte for byte.  The
history itself is never persisted.

File format (version 1) is a single JSON object:

    {"version": 1, "strokes": [...], "underlays": [...],
     "decorations": [...], "mechanism": {...} | null}

Numbers are written with Python's shortest round-trippable float repr, and
construction order of keys is fixed, so save(load(save(d))) == save(d).
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .errors import FormatError, RejectedStroke, UnknownEntity, VersionError

FORMAT_VERSION = 1
_TOP_KEYS = ("version", "strokes", "underlays", "decorations", "mechanism")


class StrokeMode(enum.Enum):
    INK = "ink"
    GESTURE = "gesture"


@dataclass
class Stroke:
    """A captured pen trail: ordered points plus per-point timestamps (ms)."""

    id: int
    points: np.ndarray
    timestamps: np.ndarray
    mode: StrokeMode = StrokeMode.INK

    def path_length(self) -> float:
        return geometry.path_length(self.points)

    def resampled(self, n: int) -> np.ndarray:
        return geometry.resample_polyline(self.points, n)


@dataclass
class ImageUnderlay:
    """A reference image placed under the ink; the pixels are an opaque
    reference, never loaded by this package."""

    id: int
    image: str
    position: tuple[float, float] = (0.0, 0.0)
    scale: float = 1.0
    rotation: float = 0.0


@dataclass
class Decoration:
    """Cosmetic strokes attached to a link; invisible to recognition."""

    id: int
    host_link: int
    points: list[np.ndarray] = field(default_factory=list)


def _validate_stroke_input(points, timestamps):
    pts = geometry.as_points(points)
    if len(pts) < 2:
        raise RejectedStroke(f"stroke needs at least 2 points, got {len(pts)}")
    if not np.isfinite(pts).all():
        raise RejectedStroke("stroke contains non-finite coordinates")
    if geometry.path_length(pts) <= 0.0:
        raise RejectedStroke("stroke has zero path length")
    if timestamps is None:
        ts = np.arange(len(pts), dtype=np.float64)
    else:
        ts = np.asarray(timestamps, dtype=np.float64)
        if ts.shape != (len(pts),):
            raise RejectedStroke("timestamp count does not match point count")
        if not np.isfinite(ts).all():
            raise RejectedStroke("stroke contains non-finite timestamps")
        if np.any(np.diff(ts) < 0):
            raise RejectedStroke("timestamps must be non-decreasing")
    return pts, ts


class SketchDocument:
    """Mutable sketch scene with unbounded in-session undo/redo.

    ``mechanism`` holds the serialized recognition/mechanism state as plain
    JSON-compatible data; the typed model lives in :mod:`mechsketch.mechanism`
    and is rebuilt from this payload when needed.  Keeping the document as the
    single source of truth means history snapshots cover every kind of edit.
    """

    def __init__(self) -> None:
        self.strokes: dict[int, Stroke] = {}
        self.underlays: dict[int, ImageUnderlay] = {}
        self.decorations: dict[int, Decoration] = {}
        self.mechanism: dict | None = None
        self._next_id = 1
        self._undo: list[bytes] = []
        self._redo: list[bytes] = []

    # -- identity ---------------------------------------------------------

    def allocate_id(self) -> int:
        i = self._next_id
        self._next_id += 1
        return i

    # -- edits ------------------------------------------------------------

    def _checkpoint(self) -> bytes:
        return self.save()

    def commit(self, before: bytes) -> None:
        """Record a completed edit.  ``before`` is the pre-edit snapshot."""
        self._undo.append(before)
        self._redo.clear()

    def add_stroke(self, points, timestamps=None, mode: StrokeMode = StrokeMode.INK) -> int:
        pts, ts = _validate_stroke_input(points, timestamps)
        before = self._checkpoint()
        sid = self.allocate_id()
        self.strokes[sid] = Stroke(sid, pts, ts, mode)
        self.commit(before)
        return sid

    def add_underlay(self, image: str, position=(0.0, 0.0), scale: float = 1.0,
                     rotation: float = 0.0) -> int:
        before = self._checkpoint()
        uid = self.allocate_id()
        self.underlays[uid] = ImageUnderlay(uid, str(image), (float(position[0]), float(position[1])),
                                            float(scale), float(rotation))
        self.commit(before)
        return uid

    def attach_decoration(self, host_link: int, stroke_points) -> int:
        polys = [geometry.as_points(p) for p in stroke_points]
        for p in polys:
            if not np.isfinite(p).all():
                raise RejectedStroke("decoration contains non-finite coordinates")
        before = self._checkpoint()
        did = self.allocate_id()
        self.decorations[did] = Decoration(did, int(host_link), polys)
        self.commit(before)
        return did

    def set_mechanism(self, payload: dict | None) -> None:
        """Replace the mechanism state (an undoable edit like any other)."""
        before = self._checkpoint()
        self.mechanism = payload
        self.commit(before)

    def stroke(self, sid: int) -> Stroke:
        try:
            return self.strokes[sid]
        except KeyError:
            raise UnknownEntity(f"no stroke with id {sid}") from None

    def ink_strokes(self) -> list[Stroke]:
        return [s for s in self.strokes.values() if s.mode is StrokeMode.INK]

    def gesture_strokes(self) -> list[Stroke]:
        return [s for s in self.strokes.values() if s.mode is StrokeMode.GESTURE]

    def scene_diagonal(self) -> float:
        return geometry.diagonal([s.points for s in self.strokes.values()])

    # -- history ----------------------------------------------------------

    def can_undo(self) -> bool:
        return bool(self._undo)

    def can_redo(self) -> bool:
        return bool(self._redo)

    def undo(self) -> bool:
        if not self._undo:
            return False
        self._redo.append(self._checkpoint())
        self._restore(self._undo.pop())
        return True

    def redo(self) -> bool:
        if not self._redo:
            return False
        self._undo.append(self._checkpoint())
        self._restore(self._redo.pop())
        return True

    def _restore(self, snapshot: bytes) -> None:
        doc = SketchDocument.load(snapshot)
        self.strokes = doc.strokes
        self.underlays = doc.underlays
        self.decorations = doc.decorations
        self.mechanism = doc.mechanism
        self._next_id = doc._next_id

    # -- persistence ------------------------------------------------------

    def to_payload(self) -> dict:
        strokes = []
        for sid in sorted(self.strokes):
            s = self.strokes[sid]
            strokes.append({
                "id": s.id,
                "mode": s.mode.value,
                "points": [[float(x), float(y)] for x, y in s.points],
                "t": [float(t) for t in s.timestamps],
            })
        underlays = []
        for uid in sorted(self.underlays):
            u = self.underlays[uid]
            underlays.append({
                "id": u.id,
                "image": u.image,
                "position": [float(u.position[0]), float(u.position[1])],
                "scale": float(u.scale),
                "rotation": float(u.rotation),
            })
        decorations = []
        for did in sorted(self.decorations):
            d = self.decorations[did]
            decorations.append({
                "id": d.id,
                "host_link": d.host_link,
                "strokes": [[[float(x), float(y)] for x, y in poly] for poly in d.points],
            })
        return {
            "version": FORMAT_VERSION,
            "strokes": strokes,
            "underlays": underlays,
            "decorations": decorations,
            "mechanism": self.mechanism,
        }

    def save(self) -> bytes:
        text = json.dumps(self.to_payload(), indent=2, ensure_ascii=False)
        return (text + "\n").encode("utf-8")

    def save_file(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.save())

    @staticmethod
    def load(data) -> "SketchDocument":
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        try:
            payload = json.loads(data)
        except json.JSONDecodeError as e:
            raise FormatError(f"malformed document: {e.msg}", position=e.pos) from None
        return SketchDocument.from_payload(payload)

    @staticmethod
    def load_file(path) -> "SketchDocument":
        with open(path, "rb") as fh:
            return SketchDocument.load(fh.read())

    @staticmethod
    def from_payload(payload) -> "SketchDocument":
        if not isinstance(payload, dict):
            raise FormatError("document root must be an object")
        if "version" not in payload:
            raise FormatError("document is missing the version field")
        if payload["version"] != FORMAT_VERSION:
            raise VersionError(payload["version"])
        unknown = set(payload) - set(_TOP_KEYS)
        if unknown:
            raise FormatError(f"unknown top-level key(s): {', '.join(sorted(unknown))}")

        doc = SketchDocument()
        max_id = 0
        for i, entry in enumerate(payload.get("strokes", [])):
            try:
                sid = int(entry["id"])
                mode = StrokeMode(entry.get("mode", "ink"))
                pts = geometry.as_points(entry["points"])
                ts = np.asarray(entry.get("t", range(len(pts))), dtype=np.float64)
            except (KeyError, TypeError, ValueError) as e:
                raise FormatError(f"strokes[{i}]: {e}") from None
            if sid in doc.strokes:
                raise FormatError(f"strokes[{i}]: duplicate id {sid}")
            if len(ts) != len(pts):
                raise FormatError(f"strokes[{i}]: timestamp count mismatch")
            doc.strokes[sid] = Stroke(sid, pts, ts, mode)
            max_id = max(max_id, sid)
        for i, entry in enumerate(payload.get("underlays", [])):
            try:
                uid = int(entry["id"])
                pos = entry.get("position", [0.0, 0.0])
                doc.underlays[uid] = ImageUnderlay(uid, str(entry["image"]),
                                                   (float(pos[0]), float(pos[1])),
                                                   float(entry.get("scale", 1.0)),
                                                   float(entry.get("rotation", 0.0)))
            except (KeyError, TypeError, ValueError) as e:
                raise FormatError(f"underlays[{i}]: {e}") from None
            max_id = max(max_id, uid)
        for i, entry in enumerate(payload.get("decorations", [])):
            try:
                did = int(entry["id"])
                polys = [geometry.as_points(p) for p in entry.get("strokes", [])]
                doc.decorations[did] = Decoration(did, int(entry["host_link"]), polys)
            except (KeyError, TypeError, ValueError) as e:
                raise FormatError(f"decorations[{i}]: {e}") from None
            max_id = max(max_id, did)

        mech = payload.get("mechanism")
        if mech is not None and not isinstance(mech, dict):
            raise FormatError("mechanism must be an object or null")
        doc.mechanism = mech
        doc._next_id = max_id + 1
        return doc

    def clone(self) -> "SketchDocument":
        """Read-only style copy (history not carried over)."""
        return SketchDocument.load(self.save())
