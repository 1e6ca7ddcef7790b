import math
import pathlib

import numpy as np
import pytest

from mechsketch.kinematics import compiled_available
from mechsketch.mechanism import SceneModel, build_scene
from mechsketch.recognition import JointHypothesis, LinkHypothesis
from mechsketch.sketch import SketchDocument

REPO = pathlib.Path(__file__).resolve().parent.parent
FIXTURE_DIR = REPO / "fixtures"

KERNELS = ["pure"] + (["compiled"] if compiled_available() else [])


@pytest.fixture(params=KERNELS)
def kernel_name(request):
    return request.param


def load_fixture(name: str) -> SketchDocument:
    return SketchDocument.load_file(FIXTURE_DIR / f"{name}.mech.json")


def fixture_scene(name: str) -> SceneModel:
    doc = load_fixture(name)
    assert doc.mechanism is not None, f"fixture {name} has no mechanism payload"
    return SceneModel.from_payload(doc.mechanism)


def fixture_mech(name: str):
    """The single driven mechanism instance of a fixture scene."""
    scene = fixture_scene(name)
    mechs = scene.instances()
    driven = [m for m in mechs if m.driver_joints()]
    return (driven or mechs)[0]


@pytest.fixture
def fb1_mech():
    return fixture_mech("fb1")


def chain_hypotheses(anchors, prismatic=(), ground_first=True):
    """Closed-loop linkage hypotheses: link i spans anchors[i] .. anchors[i+1].

    ``anchors`` is a list of world joint positions; n anchors make n links in
    a loop with n joints.  Joint j sits at anchors[j] between link j-1 and
    link j (mod n).  Indices in ``prismatic`` make that joint a slider along
    the x axis.
    """
    n = len(anchors)
    links = [LinkHypothesis(id=i + 1, strokes=(i + 1,), color=i % 12)
             for i in range(n)]
    joints = []
    for j in range(n):
        a_link = ((j - 1) % n) + 1
        b_link = j + 1
        lo, hi = min(a_link, b_link), max(a_link, b_link)
        kind = "prismatic" if j in prismatic else "revolute"
        joints.append(JointHypothesis(
            id=100 + j, kind=kind, a=lo, b=hi,
            anchor=np.asarray(anchors[j], dtype=np.float64),
            axis=np.array([1.0, 0.0]) if kind == "prismatic" else None))
    return links, joints


def make_five_bar() -> SceneModel:
    """Five revolute-jointed links in a loop: mobility 2."""
    anchors = [(0.0, 0.0), (1.0, 2.0), (4.0, 3.0), (7.0, 2.0), (8.0, 0.0)]
    links, joints = chain_hypotheses(anchors)
    scene = build_scene(links, joints)
    scene.mark_ground(1)
    return scene


def make_four_bar() -> SceneModel:
    anchors = [(0.0, 0.0), (0.0, 2.0), (6.0, 3.0), (8.0, 0.0)]
    links, joints = chain_hypotheses(anchors)
    scene = build_scene(links, joints)
    scene.mark_ground(1)
    return scene


def drive_first_ground_joint(scene: SceneModel, rate: float = 1.0) -> int:
    mech = scene.instances()[0]
    ground = scene.require_ground(mech).id
    jid = min(j.id for j in mech.joints() if ground in (j.a, j.b))
    scene.set_driver(jid, rate)
    return jid


def full_circle_angles(n: int = 360):
    return [2.0 * math.pi * k / n for k in range(n + 1)]
