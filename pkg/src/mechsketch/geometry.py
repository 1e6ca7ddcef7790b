"""Planar geometry helpers used by sketching, recognition and export.

All polylines are (n, 2) float64 arrays.  Distances are Euclidean; nothing
here assumes a unit system.
"""

from __future__ import annotations

import numpy as np


def as_points(points) -> np.ndarray:
    """Coerce a point sequence to an (n, 2) float64 array (copying)."""
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"expected an (n, 2) point array, got shape {arr.shape}")
    return np.array(arr, dtype=np.float64)


def segment_lengths(points: np.ndarray) -> np.ndarray:
    return np.linalg.norm(np.diff(points, axis=0), axis=1)


def path_length(points: np.ndarray) -> float:
    """Total arc length of a polyline."""
    if len(points) < 2:
        return 0.0
    return float(segment_lengths(points).sum())


def resample_polyline(points: np.ndarray, n: int) -> np.ndarray:
    """Resample a polyline to ``n`` points equally spaced by arc length.

    Endpoints are preserved exactly.  Zero-length polylines are rejected by
    callers; repeated interior points are tolerated.
    """
    if n < 2:
        raise ValueError("resampling needs at least 2 output points")
    pts = np.asarray(points, dtype=np.float64)
    seg = segment_lengths(pts)
    total = seg.sum()
    if total <= 0.0:
        raise ValueError("cannot resample a zero-length polyline")
    cum = np.concatenate(([0.0], np.cumsum(seg)))
    targets = np.linspace(0.0, total, n)
    out = np.empty((n, 2), dtype=np.float64)
    out[:, 0] = np.interp(targets, cum, pts[:, 0])
    out[:, 1] = np.interp(targets, cum, pts[:, 1])
    # pin endpoints against interpolation round-off
    out[0] = pts[0]
    out[-1] = pts[-1]
    return out


def _segment_pair_distance(a0, a1, b0, b1) -> np.ndarray:
    """Distance between every segment of A and every segment of B.

    a0/a1: (na, 2) segment endpoints;  b0/b1: (nb, 2).  Returns (na, nb).
    Uses the standard closest-point parameterization clamped to [0, 1].
    """
    d1 = (a1 - a0)[:, None, :]          # (na, 1, 2)
    d2 = (b1 - b0)[None, :, :]          # (1, nb, 2)
    r = a0[:, None, :] - b0[None, :, :]  # (na, nb, 2)

    a = np.einsum("ijk,ijk->ij", d1, d1)
    e = np.einsum("ijk,ijk->ij", d2, d2)
    f = np.einsum("ijk,ijk->ij", d2, r)
    c = np.einsum("ijk,ijk->ij", d1, r)
    b = np.einsum("ijk,ijk->ij", d1, d2)

    denom = a * e - b * b
    s = np.where(denom > 0.0, np.clip((b * f - c * e) / np.where(denom == 0.0, 1.0, denom), 0.0, 1.0), 0.0)
    # clamp s where segments are degenerate
    a_safe = np.where(a > 0.0, a, 1.0)
    e_safe = np.where(e > 0.0, e, 1.0)
    t = (b * s + f) / e_safe
    t_clamped = np.clip(t, 0.0, 1.0)
    s = np.clip((b * t_clamped - c) / a_safe, 0.0, 1.0)
    closest_a = a0[:, None, :] + s[..., None] * d1
    closest_b = b0[None, :, :] + t_clamped[..., None] * d2
    return np.linalg.norm(closest_a - closest_b, axis=-1)


def polyline_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Minimum Euclidean distance between two polylines."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if len(a) == 1 and len(b) == 1:
        return float(np.linalg.norm(a[0] - b[0]))
    if len(a) == 1:
        a = np.vstack([a, a])
    if len(b) == 1:
        b = np.vstack([b, b])
    d = _segment_pair_distance(a[:-1], a[1:], b[:-1], b[1:])
    return float(d.min())


def point_polyline_distance(p, poly: np.ndarray) -> float:
    p = np.asarray(p, dtype=np.float64).reshape(1, 2)
    return polyline_distance(np.vstack([p, p]), poly)


def fit_line(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Total-least-squares line through a point cloud.

    Returns (point_on_line, unit_direction).  The direction is the principal
    axis of the centered points and is canonicalized so its first nonzero
    component is positive (direction is only meaningful up to sign).
    """
    pts = np.asarray(points, dtype=np.float64)
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    cov = centered.T @ centered
    evals, evecs = np.linalg.eigh(cov)
    direction = evecs[:, int(np.argmax(evals))]
    if direction[0] < 0 or (direction[0] == 0 and direction[1] < 0):
        direction = -direction
    return centroid, direction


def max_line_deviation(points: np.ndarray) -> float:
    """Largest perpendicular distance of any point from its TLS line."""
    centroid, direction = fit_line(points)
    rel = np.asarray(points, dtype=np.float64) - centroid
    perp = rel[:, 0] * (-direction[1]) + rel[:, 1] * direction[0]
    return float(np.abs(perp).max())


def bounds(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pts = np.asarray(points, dtype=np.float64)
    return pts.min(axis=0), pts.max(axis=0)


def bounds_union(point_arrays) -> tuple[np.ndarray, np.ndarray] | None:
    """Axis-aligned bounds over several point arrays; None when all empty."""
    lows, highs = [], []
    for arr in point_arrays:
        if len(arr):
            lo, hi = bounds(arr)
            lows.append(lo)
            highs.append(hi)
    if not lows:
        return None
    return np.min(lows, axis=0), np.max(highs, axis=0)


def diagonal(point_arrays) -> float:
    """Diagonal of the united bounding box; 0.0 for an empty scene."""
    bu = bounds_union(point_arrays)
    if bu is None:
        return 0.0
    return float(np.linalg.norm(bu[1] - bu[0]))


def rot(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def transform_point(pose, p) -> np.ndarray:
    """Apply a rigid pose (x, y, theta) to a local point."""
    x, y, theta = pose
    c, s = np.cos(theta), np.sin(theta)
    px, py = p
    return np.array([x + c * px - s * py, y + s * px + c * py])


def untransform_point(pose, world) -> np.ndarray:
    """Inverse of :func:`transform_point`: world coordinates to link-local."""
    x, y, theta = pose
    c, s = np.cos(theta), np.sin(theta)
    dx, dy = world[0] - x, world[1] - y
    return np.array([c * dx + s * dy, -s * dx + c * dy])
