"""Planar geometry primitives: polylines, distances, intersections, simplification.

All coordinates are world meters on a planar CRS. Polyline vertices are kept as
float64 (n, 2) arrays; exact bitwise equality of shared endpoints is relied on
by the topology code, so functions that introduce new points always reuse one
point object for every line that receives it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, UndefinedMeasureError

_EPS_T = 1e-9


@dataclass
class Polyline:
    """Ordered vertex chain in world meters."""

    coords: np.ndarray
    id: str | None = None

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise ParameterError("polyline coordinates must be an (n, 2) array")
        if coords.shape[0] < 2:
            raise ParameterError("polyline needs at least 2 vertices")
        if np.any(np.all(coords[1:] == coords[:-1], axis=1)):
            raise ParameterError("polyline has two identical consecutive vertices")
        self.coords = coords

    @property
    def length(self) -> float:
        return polyline_length(self.coords)

    def as_lists(self) -> list[list[float]]:
        return [[float(x), float(y)] for x, y in self.coords]


def polyline_length(coords: np.ndarray) -> float:
    deltas = np.diff(np.asarray(coords, dtype=np.float64), axis=0)
    return float(np.sqrt((deltas ** 2).sum(axis=1)).sum())


def dedupe_consecutive(coords: np.ndarray) -> np.ndarray:
    """Drop repeated consecutive vertices (exact equality)."""
    coords = np.asarray(coords, dtype=np.float64)
    if len(coords) < 2:
        return coords
    keep = np.ones(len(coords), dtype=bool)
    keep[1:] = np.any(coords[1:] != coords[:-1], axis=1)
    return coords[keep]


def snap_to_lattice(coords: np.ndarray, tol: float) -> np.ndarray:
    """Round vertices to the tol lattice; tol 0 leaves them untouched."""
    coords = np.asarray(coords, dtype=np.float64)
    if tol <= 0:
        return coords.copy()
    return np.round(coords / tol) * tol


def point_segment_distance(p, a, b) -> float:
    """Euclidean distance from point p to segment [a, b]."""
    px, py = float(p[0]), float(p[1])
    ax, ay = float(a[0]), float(a[1])
    bx, by = float(b[0]), float(b[1])
    dx, dy = bx - ax, by - ay
    ll = dx * dx + dy * dy
    if ll == 0.0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / ll
    t = min(1.0, max(0.0, t))
    return math.hypot(px - ax - t * dx, py - ay - t * dy)


def points_segment_distance(points: np.ndarray, a, b) -> np.ndarray:
    """Vectorized distance from many points to one segment."""
    points = np.asarray(points, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    d = b - a
    ll = float(d @ d)
    if ll == 0.0:
        return np.hypot(points[:, 0] - a[0], points[:, 1] - a[1])
    t = np.clip(((points - a) @ d) / ll, 0.0, 1.0)
    proj = a + t[:, None] * d
    return np.hypot(points[:, 0] - proj[:, 0], points[:, 1] - proj[:, 1])


# --- Douglas-Peucker -------------------------------------------------------

def douglas_peucker(coords: np.ndarray, tolerance: float) -> np.ndarray:
    """Simplify a vertex chain.

    Output vertices are a subsequence of the input including both endpoints;
    every removed vertex lies within `tolerance` of the output chain.
    Tolerance 0 returns the input unchanged.
    """
    if tolerance < 0:
        raise ParameterError("simplification tolerance must be >= 0")
    coords = np.asarray(coords, dtype=np.float64)
    n = len(coords)
    if tolerance == 0 or n <= 2:
        return coords.copy()
    keep = np.zeros(n, dtype=bool)
    keep[0] = keep[-1] = True
    stack = [(0, n - 1)]
    while stack:
        i, j = stack.pop()
        if j <= i + 1:
            continue
        d = points_segment_distance(coords[i + 1:j], coords[i], coords[j])
        k = int(np.argmax(d))
        if d[k] > tolerance:
            k += i + 1
            keep[k] = True
            stack.append((i, k))
            stack.append((k, j))
    return coords[keep]


# --- Sinuosity -------------------------------------------------------------

def sinuosity(coords: np.ndarray) -> float:
    """Endpoint Euclidean distance divided by path length, in [0, 1]."""
    coords = np.asarray(coords, dtype=np.float64)
    length = polyline_length(coords)
    if length <= 0.0:
        raise UndefinedMeasureError("sinuosity undefined for zero-length polyline")
    chord = math.hypot(coords[-1, 0] - coords[0, 0], coords[-1, 1] - coords[0, 1])
    return min(1.0, chord / length)


# --- Segment intersection (noding support) ---------------------------------

def segment_split_points(p1, p2, q1, q2):
    """Mutual split points of two segments.

    Returns (splits_p, splits_q): lists of (t, point) with t strictly inside
    (0, 1) on the respective segment. A point produced for both segments is
    the same array object, so downstream vertex matching stays exact. Shared
    endpoints (t and u both at 0/1) produce no splits. Collinear overlaps
    split each segment at the other's interior endpoints.
    """
    p1 = np.asarray(p1, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    q1 = np.asarray(q1, dtype=np.float64)
    q2 = np.asarray(q2, dtype=np.float64)
    d1 = p2 - p1
    d2 = q2 - q1
    denom = d1[0] * d2[1] - d1[1] * d2[0]
    scale = (math.hypot(*d1) * math.hypot(*d2)) or 1.0
    splits_p: list[tuple[float, np.ndarray]] = []
    splits_q: list[tuple[float, np.ndarray]] = []

    if abs(denom) > 1e-12 * scale:
        r = q1 - p1
        t = (r[0] * d2[1] - r[1] * d2[0]) / denom
        u = (r[0] * d1[1] - r[1] * d1[0]) / denom
        if -_EPS_T <= t <= 1 + _EPS_T and -_EPS_T <= u <= 1 + _EPS_T:
            t_interior = _EPS_T < t < 1 - _EPS_T
            u_interior = _EPS_T < u < 1 - _EPS_T
            if t_interior or u_interior:
                if not u_interior:
                    point = q1.copy() if u < 0.5 else q2.copy()
                elif not t_interior:
                    point = p1.copy() if t < 0.5 else p2.copy()
                else:
                    point = p1 + t * d1
                if t_interior:
                    splits_p.append((t, point))
                if u_interior:
                    splits_q.append((u, point))
        return splits_p, splits_q

    # Parallel. Collinear only if q1 sits on the p support line.
    r = q1 - p1
    if abs(r[0] * d1[1] - r[1] * d1[0]) > 1e-12 * (scale + math.hypot(*r) or 1.0):
        return splits_p, splits_q
    ll1 = float(d1 @ d1)
    ll2 = float(d2 @ d2)
    if ll1 > 0:
        for q in (q1, q2):
            t = float((q - p1) @ d1) / ll1
            if _EPS_T < t < 1 - _EPS_T:
                splits_p.append((t, q.copy()))
    if ll2 > 0:
        for p in (p1, p2):
            u = float((p - q1) @ d2) / ll2
            if _EPS_T < u < 1 - _EPS_T:
                splits_q.append((u, p.copy()))
    return splits_p, splits_q


# --- Buffer interval math ---------------------------------------------------

def _quadratic_leq_zero(a: float, b: float, c: float, lo: float, hi: float):
    """Solutions of a t^2 + b t + c <= 0 within [lo, hi], a >= 0."""
    if lo >= hi:
        return []
    if a < 1e-300:
        if abs(b) < 1e-300:
            return [(lo, hi)] if c <= 0 else []
        root = -c / b
        if b > 0:
            t0, t1 = lo, min(hi, root)
        else:
            t0, t1 = max(lo, root), hi
        return [(t0, t1)] if t0 < t1 else []
    disc = b * b - 4 * a * c
    if disc < 0:
        return []
    sq = math.sqrt(disc)
    r0 = (-b - sq) / (2 * a)
    r1 = (-b + sq) / (2 * a)
    t0, t1 = max(lo, r0), min(hi, r1)
    return [(t0, t1)] if t0 < t1 else []


def segment_buffer_intervals(p1, p2, a, b, radius: float):
    """Parameter intervals of segment [p1,p2] lying within `radius` of [a,b].

    Exact: the distance regimes (near endpoint a, perpendicular to the
    segment, near endpoint b) each reduce to a quadratic inequality in the
    parameter t.
    """
    p1 = np.asarray(p1, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    d = p2 - p1
    u = b - a
    r2 = radius * radius
    ll = float(u @ u)

    def endpoint_intervals(e, lo, hi):
        w = p1 - e
        return _quadratic_leq_zero(float(d @ d), 2 * float(w @ d), float(w @ w) - r2, lo, hi)

    if ll == 0.0:
        return endpoint_intervals(a, 0.0, 1.0)

    # Projection parameter of the moving point onto [a,b] is linear in t.
    s0 = float((p1 - a) @ u) / ll
    s1 = float(d @ u) / ll
    # Sub-intervals of [0,1] by regime.
    cuts = [0.0, 1.0]
    if abs(s1) > 0:
        for target in (0.0, 1.0):
            t = (target - s0) / s1
            if 0.0 < t < 1.0:
                cuts.append(t)
    cuts = sorted(set(cuts))
    out = []
    norm = math.sqrt(ll)
    ux, uy = u[0] / norm, u[1] / norm
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (lo + hi)
        s_mid = s0 + s1 * mid
        if s_mid < 0:
            out.extend(endpoint_intervals(a, lo, hi))
        elif s_mid > 1:
            out.extend(endpoint_intervals(b, lo, hi))
        else:
            # Perpendicular distance: |cross(X(t)-a, u_hat)|
            c0 = (p1[0] - a[0]) * uy - (p1[1] - a[1]) * ux
            c1 = d[0] * uy - d[1] * ux
            out.extend(_quadratic_leq_zero(c1 * c1, 2 * c0 * c1, c0 * c0 - r2, lo, hi))
    return out


def merge_intervals(intervals, join_tol: float = 1e-12):
    """Union of [lo, hi] intervals, merging ones that touch within join_tol."""
    if not intervals:
        return []
    intervals = sorted(intervals)
    merged = [list(intervals[0])]
    for lo, hi in intervals[1:]:
        if lo <= merged[-1][1] + join_tol:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return [(lo, hi) for lo, hi in merged]


def slice_polyline(coords: np.ndarray, g0: float, g1: float) -> np.ndarray:
    """Extract the sub-chain between global parameters g0 and g1.

    The global parameter of segment i at local t is i + t.
    """
    coords = np.asarray(coords, dtype=np.float64)
    n_seg = len(coords) - 1
    g0 = max(0.0, min(float(n_seg), g0))
    g1 = max(0.0, min(float(n_seg), g1))
    if g1 <= g0:
        return coords[:0]

    def interp(g):
        i = min(int(math.floor(g)), n_seg - 1)
        t = g - i
        if t <= _EPS_T:
            return coords[i].copy()
        if t >= 1 - _EPS_T:
            return coords[i + 1].copy()
        return coords[i] + t * (coords[i + 1] - coords[i])

    first = interp(g0)
    last = interp(g1)
    first_k = int(math.floor(g0 + _EPS_T)) + 1   # first original vertex strictly after g0
    last_k = int(math.ceil(g1 - _EPS_T)) - 1     # last original vertex strictly before g1
    middle = coords[first_k:last_k + 1] if last_k >= first_k else coords[:0]
    stacked = np.vstack([first[None, :], middle, last[None, :]])
    return dedupe_consecutive(stacked)
