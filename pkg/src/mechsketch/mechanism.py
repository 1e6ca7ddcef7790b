"""Kinematic scene model: rigid links, joints, drivers, tracked points.

A :class:`SceneModel` holds the whole recognized scene; a :class:`Mechanism`
is a view of one connected component (an "instance"), which is the unit the
solver assembles.  Link reference poses are the identity: link-local
coordinates equal world coordinates at build time, so joint anchors recorded
from gestures satisfy their constraints exactly by construction.

Mobility is planar Grübler: 3(n-1) - 2j, counting the ground link in n.
Lower pairs only; both joint kinds remove two freedoms each.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .errors import (DegenerateLink, FormatError, InvalidInput, NoGround,
                     UnknownEntity)

# Edits that would bring two anchors of one link closer than this fraction
# of the scene diagonal collapse the link and are refused.
DEGENERATE_FRACTION = 1e-9


class JointKind(enum.Enum):
    REVOLUTE = "revolute"
    PRISMATIC = "prismatic"


@dataclass
class RigidLink:
    id: int
    strokes: tuple[int, ...] = ()
    color: int = 0
    ground: bool = False


@dataclass
class Driver:
    """Kinematic input: the driven joint coordinate advances at ``rate``
    (rad/s for revolute, length units/s for prismatic) from its build value."""

    rate: float


@dataclass
class KinJoint:
    id: int
    kind: JointKind
    a: int
    b: int
    anchor_a: np.ndarray        # local frame of link a
    anchor_b: np.ndarray        # local frame of link b
    axis_b: np.ndarray | None = None   # prismatic motion axis, local frame of b
    input: bool = False
    driver: Driver | None = None

    def other(self, link_id: int) -> int:
        return self.b if link_id == self.a else self.a


@dataclass
class TrackedPoint:
    id: int
    link: int
    local: np.ndarray


class Mechanism:
    """One connected component of the scene: what the solver assembles."""

    def __init__(self, scene: "SceneModel", link_ids: tuple[int, ...], joint_ids: tuple[int, ...]):
        self.scene = scene
        self.link_ids = link_ids
        self.joint_ids = joint_ids
        self.id = min(link_ids)

    def links(self) -> list[RigidLink]:
        return [self.scene.links[i] for i in self.link_ids]

    def joints(self) -> list[KinJoint]:
        return [self.scene.joints[i] for i in self.joint_ids]

    def ground_link(self) -> RigidLink | None:
        for link in self.links():
            if link.ground:
                return link
        return None

    def mobility(self) -> int:
        return 3 * (len(self.link_ids) - 1) - 2 * len(self.joint_ids)

    def driver_joints(self) -> list[KinJoint]:
        return [j for j in self.joints() if j.driver is not None]

    def tracked_points(self) -> list[TrackedPoint]:
        return [t for t in self.scene.tracked.values() if t.link in self.link_ids]

    def link_anchor_map(self) -> dict[int, list[np.ndarray]]:
        """Local anchors carried by each link of this instance."""
        anchors: dict[int, list[np.ndarray]] = {i: [] for i in self.link_ids}
        for j in self.joints():
            anchors[j.a].append(j.anchor_a)
            anchors[j.b].append(j.anchor_b)
        return anchors

    def scene_diagonal(self) -> float:
        pts = [np.array([j.anchor_a for j in self.joints()] + [j.anchor_b for j in self.joints()])] \
            if self.joint_ids else []
        d = geometry.diagonal(pts)
        return d if d > 0 else 1.0

    def link_lengths(self) -> dict[int, float]:
        """Inter-anchor length per link with exactly two anchors."""
        lengths = {}
        for lid, anchors in self.link_anchor_map().items():
            if len(anchors) == 2:
                lengths[lid] = float(np.linalg.norm(anchors[0] - anchors[1]))
        return lengths

    def grashof_class(self) -> str | None:
        """Grashof classification for four-bar instances, else None."""
        if len(self.link_ids) != 4 or len(self.joint_ids) != 4:
            return None
        if any(j.kind is not JointKind.REVOLUTE for j in self.joints()):
            return None
        lengths = self.link_lengths()
        if len(lengths) != 4:
            return None
        ground = self.ground_link()
        if ground is None or ground.id not in lengths:
            return None
        vals = sorted(lengths.values())
        s, l = vals[0], vals[3]
        p, q = vals[1], vals[2]
        # lengths come from sketched anchors; treat near-ties as equality
        tol = 1e-9 * (s + l + p + q)
        if s + l > p + q + tol:
            return "non-Grashof triple-rocker"
        shortest = min(lengths, key=lambda lid: (lengths[lid], lid))
        if abs(s + l - (p + q)) <= tol:
            kind = "change-point"
        elif shortest == ground.id:
            kind = "drag-link"
        else:
            # shortest adjacent to ground -> crank-rocker, opposite -> double-rocker
            adjacent = any(
                {j.a, j.b} == {shortest, ground.id} for j in self.joints()
            )
            kind = "crank-rocker" if adjacent else "double-rocker"
        return f"Grashof {kind}"


class SceneModel:
    """All recognized links, joints and tracked points in a document."""

    def __init__(self) -> None:
        self.links: dict[int, RigidLink] = {}
        self.joints: dict[int, KinJoint] = {}
        self.tracked: dict[int, TrackedPoint] = {}
        self._next_track_id = 1

    # -- construction -------------------------------------------------------

    def set_links(self, hypotheses) -> list[str]:
        """Replace the link set from recognition output, rebinding joints.

        Returns human-readable warnings for joints or tracked points that
        could not be carried over (members erased, or both ends landing on
        the same new link).
        """
        warnings: list[str] = []
        remap: dict[int, int | None] = {}
        new_by_id = {h.id: h for h in hypotheses}

        for old_id, old in self.links.items():
            candidates = [h for h in hypotheses if set(h.strokes) & set(old.strokes)]
            if not candidates:
                remap[old_id] = None
            else:
                candidates.sort(key=lambda h: h.id)
                remap[old_id] = candidates[0].id

        new_links = {
            h.id: RigidLink(h.id, tuple(h.strokes), h.color) for h in hypotheses
        }
        for old_id, old in self.links.items():
            tgt = remap.get(old_id)
            if old.ground and tgt is not None:
                new_links[tgt].ground = True

        kept_joints: dict[int, KinJoint] = {}
        for jid, j in self.joints.items():
            na, nb = remap.get(j.a), remap.get(j.b)
            if na is None or nb is None:
                warnings.append(f"joint {jid} dropped: member strokes were erased")
                continue
            if na == nb:
                warnings.append(f"joint {jid} dropped: both links merged into link {na}")
                continue
            j.a, j.b = na, nb
            kept_joints[jid] = j

        kept_tracked: dict[int, TrackedPoint] = {}
        for tid, t in self.tracked.items():
            nl = remap.get(t.link)
            if nl is None:
                warnings.append(f"tracked point {tid} dropped: link strokes were erased")
                continue
            t.link = nl
            kept_tracked[tid] = t

        self.links = new_links
        self.joints = kept_joints
        self.tracked = kept_tracked
        return warnings

    def add_joint(self, hypothesis) -> KinJoint:
        """Materialize a joint hypothesis (world anchors, identity poses)."""
        for lid in (hypothesis.a, hypothesis.b):
            if lid not in self.links:
                raise UnknownEntity(f"no link with id {lid}")
        anchor = np.asarray(hypothesis.anchor, dtype=np.float64)
        axis = None
        if hypothesis.kind == "prismatic":
            axis = np.asarray(hypothesis.axis, dtype=np.float64)
            axis = axis / np.linalg.norm(axis)
        joint = KinJoint(
            id=hypothesis.id,
            kind=JointKind(hypothesis.kind),
            a=hypothesis.a,
            b=hypothesis.b,
            anchor_a=anchor.copy(),
            anchor_b=anchor.copy(),
            axis_b=axis,
        )
        self.joints[joint.id] = joint
        return joint

    # -- instances -----------------------------------------------------------

    def instances(self) -> list[Mechanism]:
        """Connected components over links, ordered by lowest link id."""
        neighbors: dict[int, set[int]] = {lid: set() for lid in self.links}
        for j in self.joints.values():
            neighbors[j.a].add(j.b)
            neighbors[j.b].add(j.a)
        seen: set[int] = set()
        comps: list[Mechanism] = []
        for lid in sorted(self.links):
            if lid in seen:
                continue
            stack, comp = [lid], set()
            while stack:
                cur = stack.pop()
                if cur in comp:
                    continue
                comp.add(cur)
                stack.extend(neighbors[cur] - comp)
            seen |= comp
            link_ids = tuple(sorted(comp))
            joint_ids = tuple(sorted(
                j.id for j in self.joints.values() if j.a in comp
            ))
            comps.append(Mechanism(self, link_ids, joint_ids))
        return comps

    def instance_of_link(self, link_id: int) -> Mechanism:
        for mech in self.instances():
            if link_id in mech.link_ids:
                return mech
        raise UnknownEntity(f"no link with id {link_id}")

    def instance_of_joint(self, joint_id: int) -> Mechanism:
        if joint_id not in self.joints:
            raise UnknownEntity(f"no joint with id {joint_id}")
        return self.instance_of_link(self.joints[joint_id].a)

    def instance(self, instance_id: int) -> Mechanism:
        for mech in self.instances():
            if mech.id == instance_id:
                return mech
        raise UnknownEntity(f"no mechanism instance with id {instance_id}")

    # -- marks ----------------------------------------------------------------

    def mark_ground(self, link_id: int) -> None:
        """Designate the ground link; clears any previous ground in the same
        instance (one ground per instance)."""
        if link_id not in self.links:
            raise UnknownEntity(f"no link with id {link_id}")
        mech = self.instance_of_link(link_id)
        for link in mech.links():
            link.ground = False
        self.links[link_id].ground = True

    def select_input(self, joint_id: int) -> None:
        """Mark a joint as the kinematic input.  The joint's instance must
        contain a ground link for the input to drive anything."""
        if joint_id not in self.joints:
            raise UnknownEntity(f"no joint with id {joint_id}")
        mech = self.instance_of_joint(joint_id)
        if mech.ground_link() is None:
            raise InvalidInput(
                f"joint {joint_id} is in an instance with no ground link")
        self.joints[joint_id].input = True

    def set_driver(self, joint_id: int, rate: float) -> None:
        if joint_id not in self.joints:
            raise UnknownEntity(f"no joint with id {joint_id}")
        if not self.joints[joint_id].input:
            self.select_input(joint_id)
        self.joints[joint_id].driver = Driver(float(rate))

    def track_point(self, link_id: int, local) -> TrackedPoint:
        if link_id not in self.links:
            raise UnknownEntity(f"no link with id {link_id}")
        t = TrackedPoint(self._next_track_id, link_id,
                         np.asarray(local, dtype=np.float64))
        self.tracked[t.id] = t
        self._next_track_id += 1
        return t

    def clear_tracked(self, tracked_id: int | None = None) -> None:
        if tracked_id is None:
            self.tracked.clear()
            return
        if tracked_id not in self.tracked:
            raise UnknownEntity(f"no tracked point with id {tracked_id}")
        del self.tracked[tracked_id]

    # -- edits ------------------------------------------------------------------

    def move_joint(self, joint_id: int, new_world, side: int, poses=None) -> None:
        """Re-anchor one side of a joint so it sits at ``new_world`` in the
        given poses (defaults to the build pose).  Changes that link's
        effective geometry; refuses edits that collapse the link.
        """
        if joint_id not in self.joints:
            raise UnknownEntity(f"no joint with id {joint_id}")
        joint = self.joints[joint_id]
        if side not in (joint.a, joint.b):
            raise UnknownEntity(f"link {side} is not a member of joint {joint_id}")
        pose = (0.0, 0.0, 0.0)
        if poses is not None and side in poses:
            pose = poses[side]
        new_local = geometry.untransform_point(pose, np.asarray(new_world, dtype=np.float64))

        mech = self.instance_of_joint(joint_id)
        limit = DEGENERATE_FRACTION * mech.scene_diagonal()
        for other in mech.joints():
            if other.id == joint_id:
                continue
            for lid, anchor in ((other.a, other.anchor_a), (other.b, other.anchor_b)):
                if lid == side and np.linalg.norm(anchor - new_local) < limit:
                    raise DegenerateLink(
                        f"moving joint {joint_id} collapses link {side} "
                        f"(anchor coincides with joint {other.id})")
        if side == joint.a:
            joint.anchor_a = new_local
        else:
            joint.anchor_b = new_local

    # -- persistence ---------------------------------------------------------------

    def to_payload(self) -> dict:
        links = []
        for lid in sorted(self.links):
            l = self.links[lid]
            links.append({
                "id": l.id,
                "strokes": list(l.strokes),
                "color": l.color,
                "ground": l.ground,
            })
        joints = []
        for jid in sorted(self.joints):
            j = self.joints[jid]
            joints.append({
                "id": j.id,
                "kind": j.kind.value,
                "a": j.a,
                "b": j.b,
                "anchor_a": [float(j.anchor_a[0]), float(j.anchor_a[1])],
                "anchor_b": [float(j.anchor_b[0]), float(j.anchor_b[1])],
                "axis": None if j.axis_b is None else [float(j.axis_b[0]), float(j.axis_b[1])],
                "input": j.input,
                "rate": None if j.driver is None else float(j.driver.rate),
            })
        tracked = []
        for tid in sorted(self.tracked):
            t = self.tracked[tid]
            tracked.append({
                "id": t.id,
                "link": t.link,
                "point": [float(t.local[0]), float(t.local[1])],
            })
        return {"links": links, "joints": joints, "tracked": tracked}

    @staticmethod
    def from_payload(payload: dict) -> "SceneModel":
        if not isinstance(payload, dict):
            raise FormatError("mechanism payload must be an object")
        scene = SceneModel()
        try:
            for entry in payload.get("links", []):
                link = RigidLink(int(entry["id"]), tuple(int(s) for s in entry.get("strokes", [])),
                                 int(entry.get("color", 0)), bool(entry.get("ground", False)))
                scene.links[link.id] = link
            for entry in payload.get("joints", []):
                kind = JointKind(entry["kind"])
                axis = entry.get("axis")
                joint = KinJoint(
                    int(entry["id"]), kind, int(entry["a"]), int(entry["b"]),
                    np.asarray(entry["anchor_a"], dtype=np.float64),
                    np.asarray(entry["anchor_b"], dtype=np.float64),
                    None if axis is None else np.asarray(axis, dtype=np.float64),
                    bool(entry.get("input", False)),
                )
                rate = entry.get("rate")
                if rate is not None:
                    joint.driver = Driver(float(rate))
                scene.joints[joint.id] = joint
            for entry in payload.get("tracked", []):
                t = TrackedPoint(int(entry["id"]), int(entry["link"]),
                                 np.asarray(entry["point"], dtype=np.float64))
                scene.tracked[t.id] = t
                scene._next_track_id = max(scene._next_track_id, t.id + 1)
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"mechanism payload: {e}") from None
        for j in scene.joints.values():
            for lid in (j.a, j.b):
                if lid not in scene.links:
                    raise FormatError(f"joint {j.id} references unknown link {lid}")
        for mech in scene.instances():
            if sum(1 for l in mech.links() if l.ground) > 1:
                raise FormatError(f"instance {mech.id} has more than one ground link")
        return scene

    def require_ground(self, mech: Mechanism) -> RigidLink:
        g = mech.ground_link()
        if g is None:
            raise NoGround(f"instance {mech.id} has no ground link")
        return g


def build_scene(link_hypotheses, joint_hypotheses) -> SceneModel:
    """Materialize recognition output into a fresh scene model."""
    scene = SceneModel()
    scene.set_links(link_hypotheses)
    for jh in joint_hypotheses:
        scene.add_joint(jh)
    return scene
