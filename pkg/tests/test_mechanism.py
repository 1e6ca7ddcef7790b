import math

import numpy as np
import pytest

from mechsketch.errors import DegenerateLink, InvalidInput, UnknownEntity
from mechsketch.kinematics import Trace, assemble, initial_state, run
from mechsketch.mechanism import SceneModel, build_scene
from mechsketch.recognition import LinkHypothesis, recognize_document

from .conftest import (chain_hypotheses, drive_first_ground_joint,
                       fixture_mech, fixture_scene, load_fixture,
                       make_five_bar, make_four_bar)


# -- instance partitioning ------------------------------------------------------


def test_four_bar_loop_is_one_instance_mobility_one():
    scene = make_four_bar()
    (mech,) = scene.instances()
    assert mech.mobility() == 1
    assert len(mech.links()) == 4 and len(mech.joints()) == 4


def test_two_disjoint_four_bars_are_two_instances():
    links1, joints1 = chain_hypotheses(
        [(0.0, 0.0), (0.0, 2.0), (6.0, 3.0), (8.0, 0.0)])
    links2, joints2 = chain_hypotheses(
        [(20.0, 0.0), (20.0, 2.0), (26.0, 3.0), (28.0, 0.0)])
    links2 = [LinkHypothesis(h.id + 10, tuple(s + 10 for s in h.strokes), h.color)
              for h in links2]
    for j in joints2:
        j.id += 100
        j.a += 10
        j.b += 10
    scene = build_scene(links1 + links2, joints1 + joints2)
    mechs = scene.instances()
    assert len(mechs) == 2
    assert all(m.mobility() == 1 for m in mechs)


def test_pendulum_is_mobility_one():
    links = [LinkHypothesis(1, (1,), 0), LinkHypothesis(2, (2,), 1)]
    _, joints = chain_hypotheses([(0.0, 0.0), (1.0, 1.0)])
    scene = build_scene(links, joints[:1])
    (mech,) = scene.instances()
    assert mech.mobility() == 1


def test_five_bar_mobility_two():
    (mech,) = make_five_bar().instances()
    assert mech.mobility() == 2


def test_triangle_mobility_zero():
    mech = fixture_mech("triangle")
    assert mech.mobility() == 0


# -- ground and input ------------------------------------------------------------


def test_ground_remark_clears_previous():
    scene = make_four_bar()
    scene.mark_ground(2)
    grounds = [l.id for l in scene.links.values() if l.ground]
    assert grounds == [2]


def test_input_requires_connection_to_ground():
    # two disjoint pendulums; ground the first, select input in the second
    links = [LinkHypothesis(i, (i,), i - 1) for i in (1, 2, 3, 4)]
    _, j1 = chain_hypotheses([(0.0, 0.0), (1.0, 0.0)])
    _, j2 = chain_hypotheses([(10.0, 0.0), (11.0, 0.0)])
    j2[0].id = 200
    j2[0].a, j2[0].b = 3, 4
    scene = build_scene(links, [j1[0], j2[0]])
    scene.mark_ground(1)
    with pytest.raises(InvalidInput):
        scene.select_input(200)


def test_select_input_on_ground_joint_accepted():
    scene = make_four_bar()
    mech = scene.instances()[0]
    jid = min(j.id for j in mech.joints() if 1 in (j.a, j.b))
    scene.select_input(jid)
    assert scene.joints[jid].input is True
    assert scene.joints[jid].driver is None  # rate comes from set_driver


def test_driver_rate_sign_preserved():
    scene = make_four_bar()
    jid = drive_first_ground_joint(scene, rate=-2.5)
    assert scene.joints[jid].driver.rate == -2.5


# -- joint manipulation ------------------------------------------------------------


def rocker_of(scene):
    """(rocker link id, its ground pivot joint, its coupler joint) for FB1."""
    mech = scene.instances()[0]
    ground = scene.require_ground(mech).id
    driver = [j for j in mech.joints() if j.driver is not None][0]
    pivot = next(j for j in mech.joints()
                 if ground in (j.a, j.b) and j.id != driver.id)
    rocker_id = pivot.other(ground)
    moving = next(j for j in mech.joints()
                  if rocker_id in (j.a, j.b) and j.id != pivot.id)
    return rocker_id, pivot, moving


def anchor_on(joint, link_id):
    return joint.anchor_a if joint.a == link_id else joint.anchor_b


def test_move_joint_plus_one_changes_length_exactly():
    scene = fixture_scene("fb1")
    rocker_id, pivot, moving = rocker_of(scene)
    mech = scene.instances()[0]
    length0 = mech.link_lengths()[rocker_id]

    a0 = anchor_on(pivot, rocker_id)
    b0 = anchor_on(moving, rocker_id)
    direction = (b0 - a0) / np.hypot(*(b0 - a0))
    scene.move_joint(moving.id, b0 + direction, side=rocker_id)

    length1 = scene.instances()[0].link_lengths()[rocker_id]
    assert abs(length1 - (length0 + 1.0)) <= 1e-12


def test_move_joint_round_trip_restores_geometry():
    scene = fixture_scene("fb1")
    mech = scene.instances()[0]
    moving = max(j.id for j in mech.joints())
    before = {jid: (j.anchor_a.copy(), j.anchor_b.copy())
              for jid, j in scene.joints.items()}
    original = scene.joints[moving].anchor_a.copy()
    side = scene.joints[moving].a
    scene.move_joint(moving, original + [0.25, -0.125], side=side)
    scene.move_joint(moving, original, side=side)
    for jid, (aa, ab) in before.items():
        assert np.linalg.norm(scene.joints[jid].anchor_a - aa) <= 1e-9
        assert np.linalg.norm(scene.joints[jid].anchor_b - ab) <= 1e-9


def test_move_joint_onto_other_anchor_degenerate():
    scene = make_four_bar()
    mech = scene.instances()[0]
    joints_of_2 = [j for j in mech.joints() if 2 in (j.a, j.b)]
    target = joints_of_2[0].anchor_a
    with pytest.raises(DegenerateLink):
        scene.move_joint(joints_of_2[1].id, target, side=2)


def test_moved_joint_changes_coupler_curve():
    def coupler_samples(scene):
        mech = scene.instances()[0]
        system = assemble(mech)
        tp = mech.tracked_points()[0]
        trace = Trace(tp.id, tp.link, np.asarray(tp.local))
        run(system, initial_state(system), 2.0 * math.pi, dt=math.radians(5.0),
            trace_points=[trace])
        return np.array([(x, y) for _, x, y in trace.samples])

    base = coupler_samples(fixture_scene("fb1"))
    moved_scene = fixture_scene("fb1")
    mech = moved_scene.instances()[0]
    moving = max(j.id for j in mech.joints()
                 if all(not moved_scene.links[l].ground for l in (j.a, j.b)))
    j = moved_scene.joints[moving]
    moved_scene.move_joint(moving, j.anchor_a + [0.5, 0.0], side=j.a)
    moved = coupler_samples(moved_scene)
    # the curve passes through different points; compare at the quarter turn
    k = len(base) // 4
    assert np.hypot(*(moved[k] - base[k])) > 0.01


def test_move_joint_unknown_id():
    with pytest.raises(UnknownEntity):
        make_four_bar().move_joint(999, (0.0, 0.0), side=1)


# -- rebinding on re-recognition -----------------------------------------------------


def rebuilt_fixture_doc():
    doc = load_fixture("fb1")
    links, joints, issues = recognize_document(doc)
    assert not issues
    scene = build_scene(links, joints)
    return doc, scene


def test_cosmetic_stroke_absorbed_without_losing_joints():
    doc, scene = rebuilt_fixture_doc()
    joints_before = dict(scene.joints)
    ink = doc.ink_strokes()[0]
    p = ink.points[len(ink.points) // 2]
    doc.add_stroke([tuple(p), (float(p[0]) + 0.05, float(p[1]) + 0.05)])
    links, _, _ = recognize_document(doc)
    warnings = scene.set_links(links)
    assert warnings == []
    assert set(scene.joints) == set(joints_before)
    host = [l for l in scene.links.values()
            if max(s.id for s in doc.strokes.values()) in l.strokes]
    assert len(host) == 1


def test_erasing_links_strokes_drops_its_joints_with_warning():
    doc, scene = rebuilt_fixture_doc()
    victim = next(l for l in scene.links.values() if not l.ground)
    kept_links = [h for h in recognize_document(doc)[0] if h.id != victim.id]
    joints_on_victim = {j.id for j in scene.joints.values()
                        if victim.id in (j.a, j.b)}
    warnings = scene.set_links(kept_links)
    assert joints_on_victim and not joints_on_victim & set(scene.joints)
    assert any("dropped" in w for w in warnings)


def test_bridging_stroke_merges_links_and_drops_self_joint():
    doc, scene = rebuilt_fixture_doc()
    joint = next(iter(scene.joints.values()))
    la, lb = scene.links[joint.a], scene.links[joint.b]
    pa = doc.strokes[la.strokes[0]].points[0]
    pb = doc.strokes[lb.strokes[0]].points[-1]
    doc.add_stroke([tuple(pa), tuple(pb)])
    links, _, _ = recognize_document(doc)
    warnings = scene.set_links(links)
    assert any("merged" in w for w in warnings)
    merged = [l for l in scene.links.values()
              if set(la.strokes) | set(lb.strokes) <= set(l.strokes)]
    assert len(merged) == 1


# -- classification of four-bars -------------------------------------------------------


def test_fb1_is_grashof_crank_rocker():
    mech = fixture_mech("fb1")
    assert mech.grashof_class() == "Grashof crank-rocker"


def test_rocker_fixture_is_non_grashof():
    mech = fixture_mech("rocker")
    assert "non-Grashof" in mech.grashof_class()


def test_pg1_is_change_point():
    mech = fixture_mech("pg1")
    assert "change-point" in mech.grashof_class()


def test_slider_crank_has_no_grashof_class():
    mech = fixture_mech("sc1")
    assert mech.grashof_class() is None


# -- persistence --------------------------------------------------------------------


def test_scene_payload_round_trip():
    scene = fixture_scene("fb1")
    payload = scene.to_payload()
    again = SceneModel.from_payload(payload)
    assert again.to_payload() == payload


def test_payload_rejects_dangling_joint_reference():
    payload = fixture_scene("fb1").to_payload()
    payload["joints"][0]["a"] = 777
    from mechsketch.errors import FormatError
    with pytest.raises(FormatError):
        SceneModel.from_payload(payload)


def test_tracked_points_round_trip_and_clear():
    scene = fixture_scene("fb1")
    n0 = len(scene.tracked)
    t = scene.track_point(min(scene.links), (0.1, 0.2))
    assert len(scene.tracked) == n0 + 1
    scene.clear_tracked(t.id)
    assert len(scene.tracked) == n0
    scene.clear_tracked()
    assert len(scene.tracked) == 0
