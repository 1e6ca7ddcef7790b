import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mechsketch.errors import AmbiguousJoint, NotAGesture
from mechsketch.recognition import (GestureClass, classify_gesture,
                                    default_epsilon, extract_joint,
                                    gesture_metrics, group_links,
                                    recognize_document)
from mechsketch.sketch import SketchDocument, Stroke, StrokeMode

from .conftest import load_fixture
from .oracles import (group_by_proximity, make_arc, make_circle, make_line,
                      tls_line)


def gesture(points, sid=900):
    pts = np.asarray(points, dtype=np.float64)
    return Stroke(sid, pts, np.arange(len(pts), dtype=float), StrokeMode.GESTURE)


def ink(points, sid):
    pts = np.asarray(points, dtype=np.float64)
    return Stroke(sid, pts, np.arange(len(pts), dtype=float), StrokeMode.INK)


# -- classification ---------------------------------------------------------------


def test_uniform_circle_classifies_with_exact_center():
    pts = make_circle((5.0, 5.0), 2.0, n=64)
    assert classify_gesture(pts) is GestureClass.CIRCLE
    m = gesture_metrics(pts)
    assert np.linalg.norm(m["centroid"] - [5.0, 5.0]) <= 1e-9 * 2.0
    assert m["mean_radius"] == pytest.approx(2.0, abs=1e-9)


def test_straight_segment_classifies_as_line():
    pts = make_line((0.0, 0.0), (6.0, 0.0))
    assert classify_gesture(pts) is GestureClass.LINE


def test_semicircle_is_unknown():
    # endpoint gap 2r over path length pi*r gives closure 0.637 > 0.30, and
    # the bulge reaches r above the chord line, far over 5% of path length
    pts = make_arc((0.0, 0.0), 1.0, math.pi, n=64)
    m = gesture_metrics(pts)
    assert m["closure"] > 0.30 and m["line_deviation"] > 0.05
    assert classify_gesture(pts) is GestureClass.UNKNOWN


def test_ink_stroke_is_not_a_gesture():
    with pytest.raises(NotAGesture):
        classify_gesture(ink([(0.0, 0.0), (1.0, 1.0)], 1))


def test_circle_detection_rotation_invariant():
    for phase in np.linspace(0.0, 2.0 * math.pi, 9):
        pts = make_circle((-3.0, 7.0), 0.8, n=48, t0=float(phase))
        assert classify_gesture(pts) is GestureClass.CIRCLE


# -- grouping ----------------------------------------------------------------------


def test_strokes_sharing_endpoint_group_together():
    strokes = [ink([(0.0, 0.0), (2.0, 0.0)], 1), ink([(2.0, 0.0), (2.0, 2.0)], 2)]
    (hyp,) = group_links(strokes)
    assert hyp.strokes == (1, 2)


def test_strokes_far_apart_stay_separate():
    strokes = [ink([(0.0, 0.0), (2.0, 0.0)], 1), ink([(0.0, 1.0), (2.0, 1.0)], 2)]
    eps = default_epsilon([s.points for s in strokes])
    hyps = group_links(strokes, epsilon=eps)
    assert len(hyps) == 2
    # the gap is 1.0; confirm it is at least 10x the tolerance used
    assert 1.0 >= 10 * eps


def test_transitive_chain_groups_as_one():
    strokes = [
        ink([(0.0, 0.0), (1.0, 0.0)], 1),      # A
        ink([(1.0, 0.0), (2.0, 0.0)], 2),      # B touches A
        ink([(2.0, 0.0), (3.0, 0.0)], 3),      # C touches B, far from A
    ]
    (hyp,) = group_links(strokes)
    assert hyp.strokes == (1, 2, 3)


def test_grouping_matches_union_find_oracle():
    rng = np.random.default_rng(11)
    strokes = []
    for sid in range(1, 13):
        start = rng.uniform(0, 10, 2)
        steps = rng.uniform(-1, 1, (4, 2))
        strokes.append(ink(np.vstack([start, start + np.cumsum(steps, axis=0)]), sid))
    eps = default_epsilon([s.points for s in strokes])
    got = sorted((frozenset(h.strokes) for h in group_links(strokes, eps)), key=min)
    want = group_by_proximity({s.id: s.points for s in strokes}, eps)
    assert got == want


def test_link_hypothesis_ids_are_lowest_member():
    strokes = [ink([(0.0, 0.0), (1.0, 0.0)], 5), ink([(1.0, 0.0), (2.0, 0.0)], 9),
               ink([(50.0, 50.0), (51.0, 50.0)], 2)]
    hyps = group_links(strokes)
    assert sorted(h.id for h in hyps) == [2, 5]
    for h in hyps:
        assert h.id == min(h.strokes)


def test_colors_distinct_within_scene():
    strokes = [ink([(10.0 * k, 0.0), (10.0 * k + 1.0, 0.0)], k + 1) for k in range(6)]
    hyps = group_links(strokes)
    colors = [h.color for h in hyps]
    assert len(set(colors)) == len(colors)


@given(st.integers(min_value=0, max_value=10_000))
@settings(max_examples=25, deadline=None)
def test_grouping_matches_oracle_on_random_scenes(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    strokes = []
    for sid in range(1, n + 1):
        start = rng.uniform(0, 8, 2)
        steps = rng.uniform(-1.5, 1.5, (3, 2))
        strokes.append(ink(np.vstack([start, start + np.cumsum(steps, axis=0)]), sid))
    eps = default_epsilon([s.points for s in strokes])
    got = sorted((frozenset(h.strokes) for h in group_links(strokes, eps)), key=min)
    want = group_by_proximity({s.id: s.points for s in strokes}, eps)
    assert got == want


def test_grouping_partition_is_order_independent():
    rng = np.random.default_rng(3)
    base = []
    for sid in range(1, 11):
        start = rng.uniform(0, 6, 2)
        steps = rng.uniform(-1, 1, (3, 2))
        base.append(ink(np.vstack([start, start + np.cumsum(steps, axis=0)]), sid))
    eps = default_epsilon([s.points for s in base])
    want = sorted((frozenset(h.strokes) for h in group_links(base, eps)), key=min)
    for _ in range(20):
        order = rng.permutation(len(base))
        got = sorted((frozenset(h.strokes)
                      for h in group_links([base[i] for i in order], eps)), key=min)
        assert got == want


# -- joint extraction ----------------------------------------------------------------


def two_bar_scene():
    """Two separate bars whose near ends leave a 0.3 gap at x = 2 .. 2.3."""
    s1 = ink([(0.0, 0.0), (2.0, 0.0)], 1)
    s2 = ink([(2.3, 0.0), (2.3, 2.0)], 2)
    strokes = {1: s1, 2: s2}
    hyps = group_links([s1, s2], epsilon=0.01)
    assert len(hyps) == 2
    return hyps, strokes


def test_circle_over_shared_endpoint_gives_revolute():
    hyps, strokes = two_bar_scene()
    g = gesture(make_circle((2.15, 0.0), 0.15, n=64))
    j = extract_joint(g, hyps, strokes, epsilon=0.2)
    assert j.kind == "revolute"
    assert (j.a, j.b) == (1, 2)
    assert np.linalg.norm(j.anchor - [2.15, 0.0]) <= 1e-9


def test_circle_touching_one_link_is_ambiguous():
    hyps, strokes = two_bar_scene()
    g = gesture(make_circle((0.0, 0.0), 0.15, n=64))
    with pytest.raises(AmbiguousJoint) as exc_info:
        extract_joint(g, hyps, strokes, epsilon=0.2)
    assert exc_info.value.count == 1


def test_line_gesture_gives_prismatic_with_tls_direction():
    hyps, strokes = two_bar_scene()
    ang = math.radians(30.0)
    d = np.array([math.cos(ang), math.sin(ang)])
    g = gesture(make_line((2.15, 0.0) - 0.5 * d, (2.15, 0.0) + 0.5 * d))
    j = extract_joint(g, hyps, strokes, epsilon=0.2)
    assert j.kind == "prismatic"
    _, want = tls_line(g.points)
    assert min(np.linalg.norm(j.axis - want), np.linalg.norm(j.axis + want)) <= 1e-9
    assert abs(abs(float(j.axis @ d)) - 1.0) <= 1e-12


def test_scribble_gesture_raises_not_a_gesture():
    hyps, strokes = two_bar_scene()
    from .oracles import make_scribble
    g = gesture(make_scribble(np.random.default_rng(5), scale=0.3))
    with pytest.raises(NotAGesture):
        extract_joint(g, hyps, strokes, epsilon=0.2)


# -- whole-document recognition ---------------------------------------------------------


def test_fb1_fixture_recognizes_four_links_four_revolutes():
    doc = load_fixture("fb1")
    links, joints, issues = recognize_document(doc)
    assert issues == []
    assert len(links) == 4
    assert len({h.color for h in links}) == 4
    assert len(joints) == 4
    assert all(j.kind == "revolute" for j in joints)


def test_sc1_fixture_has_one_prismatic():
    doc = load_fixture("sc1")
    links, joints, issues = recognize_document(doc)
    assert issues == []
    kinds = sorted(j.kind for j in joints)
    assert kinds.count("prismatic") == 1


def test_default_epsilon_is_two_percent_of_diagonal():
    polys = [np.array([[0.0, 0.0], [3.0, 4.0]])]  # bbox diagonal 5
    assert default_epsilon(polys) == pytest.approx(0.1)


def test_scaling_scene_scales_anchors_proportionally():
    hyps, strokes = two_bar_scene()
    g = gesture(make_circle((2.0, 0.0), 0.15, n=64))
    j1 = extract_joint(g, hyps, strokes, epsilon=0.2)

    s = 3.7
    strokes_s = {sid: ink(st.points * s, sid) for sid, st in strokes.items()}
    hyps_s = group_links(list(strokes_s.values()), epsilon=0.01 * s)
    g_s = gesture(make_circle((2.0 * s, 0.0), 0.15 * s, n=64))
    j2 = extract_joint(g_s, hyps_s, strokes_s, epsilon=0.2 * s)
    assert np.linalg.norm(j2.anchor - s * j1.anchor) <= 1e-9 * s
