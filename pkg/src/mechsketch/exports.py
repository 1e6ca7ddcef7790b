"""Trace export: CSV tables and SVG drawings.

CSV rows are one sample per line under the header ``t,x,y,link_id,px,py``:
driver time, world coordinates of the sample, the link carrying the traced
point and that point in link-local coordinates.  Floats are written with
``repr`` (shortest round-trippable decimal) so identical runs export
byte-identical files.

The SVG draws each trace as a polyline over a light skeleton of the
mechanism at its build pose (links as segments between their joint
anchors, joints as circles).  Sketch coordinates are y-up; SVG is y-down,
so the drawing is flipped about the horizontal axis.
"""

from __future__ import annotations

import io

import numpy as np

CSV_HEADER = "t,x,y,link_id,px,py"

SVG_WIDTH = 640.0
SVG_MARGIN = 20.0
TRACE_COLORS = ("#e6194b", "#3cb44b", "#4363d8", "#f58231", "#911eb4", "#46f0f0")


def _fmt(x: float) -> str:
    return repr(float(x))


def traces_to_csv(traces) -> str:
    lines = [CSV_HEADER]
    for tr in traces:
        px, py = float(tr.local[0]), float(tr.local[1])
        for t, x, y in tr.samples:
            lines.append(
                f"{_fmt(t)},{_fmt(x)},{_fmt(y)},{tr.link},{_fmt(px)},{_fmt(py)}")
    return "\n".join(lines) + "\n"


def write_csv(path, traces) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(traces_to_csv(traces))


def _as_mechanisms(mech):
    if mech is None:
        return []
    if hasattr(mech, "link_anchor_map"):
        return [mech]
    return list(mech)


def _skeleton_segments(mechs):
    """Build-pose link segments: consecutive anchors on each link."""
    segments = []
    for mech in mechs:
        for lid, anchors in mech.link_anchor_map().items():
            # local frames are identity at build, so local anchors are world points
            for i in range(len(anchors) - 1):
                segments.append((anchors[i], anchors[i + 1]))
    return segments


def _joint_markers(mechs):
    return [j.anchor_a for mech in mechs for j in mech.joints()]


def traces_to_svg(traces, mech=None) -> str:
    """Render traces (and optionally mechanism skeletons) as an SVG.

    ``mech`` may be one mechanism instance or a sequence of them.
    """
    pts = []
    for tr in traces:
        pts.extend((x, y) for _, x, y in tr.samples)
    mechs = _as_mechanisms(mech)
    segments = _skeleton_segments(mechs)
    markers = _joint_markers(mechs)
    for a, b in segments:
        pts.append(tuple(a))
        pts.append(tuple(b))
    pts.extend(tuple(m) for m in markers)
    if not pts:
        lo = np.array([0.0, 0.0])
        hi = np.array([1.0, 1.0])
    else:
        arr = np.asarray(pts, dtype=np.float64)
        lo, hi = arr.min(axis=0), arr.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    scale = (SVG_WIDTH - 2 * SVG_MARGIN) / float(max(span))
    width = float(span[0]) * scale + 2 * SVG_MARGIN
    height = float(span[1]) * scale + 2 * SVG_MARGIN

    def to_px(p):
        x = (float(p[0]) - float(lo[0])) * scale + SVG_MARGIN
        y = height - ((float(p[1]) - float(lo[1])) * scale + SVG_MARGIN)
        return x, y

    out = io.StringIO()
    out.write(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(width)}" '
        f'height="{_fmt(height)}" viewBox="0 0 {_fmt(width)} {_fmt(height)}">\n')
    out.write('  <g stroke="#b0b0b0" stroke-width="2" fill="none">\n')
    for a, b in segments:
        (x1, y1), (x2, y2) = to_px(a), to_px(b)
        out.write(f'    <line x1="{_fmt(x1)}" y1="{_fmt(y1)}" '
                  f'x2="{_fmt(x2)}" y2="{_fmt(y2)}"/>\n')
    out.write("  </g>\n")
    out.write('  <g fill="#606060">\n')
    for m in markers:
        x, y = to_px(m)
        out.write(f'    <circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="3"/>\n')
    out.write("  </g>\n")
    for i, tr in enumerate(traces):
        color = TRACE_COLORS[i % len(TRACE_COLORS)]
        coords = " ".join(
            f"{_fmt(px)},{_fmt(py)}"
            for px, py in (to_px((x, y)) for _, x, y in tr.samples))
        out.write(f'  <polyline fill="none" stroke="{color}" stroke-width="1.5" '
                  f'points="{coords}"/>\n')
    out.write("</svg>\n")
    return out.getvalue()


def write_svg(path, traces, mech=None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(traces_to_svg(traces, mech))
