"""Geometry primitives: simplification, sinuosity, intersections, buffer intervals."""
from __future__ import annotations

import math

import numpy as np
import pytest

from boundline.errors import ParameterError, UndefinedMeasureError
from boundline.geometry import (
    Polyline,
    dedupe_consecutive,
    douglas_peucker,
    merge_intervals,
    point_segment_distance,
    polyline_length,
    segment_buffer_intervals,
    segment_split_points,
    sinuosity,
    slice_polyline,
    snap_to_lattice,
)


class TestPolyline:
    def test_rejects_single_vertex(self):
        with pytest.raises(ParameterError):
            Polyline(np.array([[0.0, 0.0]]))

    def test_rejects_consecutive_duplicates(self):
        with pytest.raises(ParameterError):
            Polyline(np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]]))

    def test_length(self):
        p = Polyline(np.array([[0.0, 0.0], [3.0, 0.0], [3.0, 4.0]]))
        assert p.length == pytest.approx(7.0)


class TestDouglasPeucker:
    def test_flat_midpoint_dropped(self):
        coords = np.array([[0.0, 0.0], [5.0, 0.01], [10.0, 0.0]])
        out = douglas_peucker(coords, 0.1)
        assert out.tolist() == [[0.0, 0.0], [10.0, 0.0]]

    def test_tight_tolerance_keeps_all(self):
        coords = np.array([[0.0, 0.0], [5.0, 0.01], [10.0, 0.0]])
        out = douglas_peucker(coords, 0.001)
        assert out.tolist() == coords.tolist()

    def test_zero_tolerance_identity(self):
        coords = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
        out = douglas_peucker(coords, 0.0)
        assert out.tolist() == coords.tolist()

    def test_negative_tolerance_rejected(self):
        with pytest.raises(ParameterError):
            douglas_peucker(np.array([[0.0, 0.0], [1.0, 1.0]]), -0.5)


class TestSinuosity:
    def test_straight(self):
        assert sinuosity(np.array([[0.0, 0.0], [10.0, 0.0]])) == 1.0

    def test_right_angle(self):
        s = sinuosity(np.array([[0.0, 0.0], [3.0, 0.0], [3.0, 4.0]]))
        assert s == pytest.approx(5.0 / 7.0)

    def test_closed_loop_is_zero(self):
        s = sinuosity(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 0.0]]))
        assert s == 0.0

    def test_zero_length_undefined(self):
        with pytest.raises(UndefinedMeasureError):
            sinuosity(np.array([[1.0, 1.0], [1.0, 1.0]]))


class TestSegmentSplitPoints:
    def test_proper_crossing(self):
        sp, sq = segment_split_points((0, 0), (2, 2), (0, 2), (2, 0))
        assert len(sp) == 1 and len(sq) == 1
        t, point = sp[0]
        assert t == pytest.approx(0.5)
        assert point.tolist() == [1.0, 1.0]
        assert sq[0][1] is point  # the exact same object, bitwise-safe joins

    def test_shared_endpoint_no_split(self):
        sp, sq = segment_split_points((0, 0), (1, 0), (1, 0), (1, 1))
        assert sp == [] and sq == []

    def test_t_junction_splits_through_line_only(self):
        sp, sq = segment_split_points((0, 0), (2, 0), (1, 0), (1, 5))
        assert len(sp) == 1 and sq == []
        t, point = sp[0]
        assert t == pytest.approx(0.5)
        assert point.tolist() == [1.0, 0.0]

    def test_collinear_overlap(self):
        sp, sq = segment_split_points((0, 0), (10, 0), (5, 0), (15, 0))
        assert [round(t, 9) for t, _ in sp] == [0.5]
        assert sp[0][1].tolist() == [5.0, 0.0]
        assert [round(u, 9) for u, _ in sq] == [0.5]
        assert sq[0][1].tolist() == [10.0, 0.0]

    def test_disjoint_parallel(self):
        sp, sq = segment_split_points((0, 0), (1, 0), (0, 1), (1, 1))
        assert sp == [] and sq == []


def oracle_within(coords, a, b, radius, step=0.001):
    """Dense-sampling oracle: fraction of [0,1] params within radius."""
    ts = np.arange(0.0, 1.0 + step, step)
    pts = np.asarray(coords[0]) + ts[:, None] * (np.asarray(coords[1]) - np.asarray(coords[0]))
    return np.array([point_segment_distance(p, a, b) <= radius for p in pts]), ts


class TestBufferIntervals:
    def test_perpendicular_clip(self):
        # moving along y=0 from x=0 to x=10; target segment is x=0, y in [-1, 1]
        intervals = segment_buffer_intervals((0, 0), (10, 0), (0, -1), (0, 1), 5.0)
        assert len(intervals) == 1
        lo, hi = intervals[0]
        assert lo == pytest.approx(0.0, abs=1e-12)
        assert hi == pytest.approx(0.5, abs=1e-12)

    def test_matches_dense_sampling(self, rng):
        for _ in range(200):
            p1, p2, a, b = rng.uniform(-10, 10, size=(4, 2))
            radius = rng.uniform(0.5, 8.0)
            intervals = merge_intervals(segment_buffer_intervals(p1, p2, a, b, radius))
            inside, ts = oracle_within((p1, p2), a, b, radius)
            for t, ok in zip(ts, inside):
                predicted = any(lo - 1e-6 <= t <= hi + 1e-6 for lo, hi in intervals)
                if ok != predicted:
                    # disagreement allowed only within a hair of a boundary
                    d = point_segment_distance(p1 + t * (p2 - p1), a, b)
                    assert abs(d - radius) < 1e-3

    def test_point_target(self):
        intervals = segment_buffer_intervals((-2, 0), (2, 0), (0, 0), (0, 0), 1.0)
        assert len(intervals) == 1
        lo, hi = intervals[0]
        assert lo == pytest.approx(0.25, abs=1e-9)
        assert hi == pytest.approx(0.75, abs=1e-9)


class TestHelpers:
    def test_merge_intervals(self):
        assert merge_intervals([(0.0, 0.3), (0.2, 0.5), (0.8, 0.9)]) == [(0.0, 0.5), (0.8, 0.9)]

    def test_snap_lattice(self):
        snapped = snap_to_lattice(np.array([[0.026, 0.074]]), 0.05)
        assert snapped.tolist() == [[0.05, 0.05]]
        same = snap_to_lattice(np.array([[0.026, 0.074]]), 0.0)
        assert same.tolist() == [[0.026, 0.074]]

    def test_dedupe_consecutive(self):
        coords = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [1.0, 0.0]])
        assert dedupe_consecutive(coords).tolist() == [[0.0, 0.0], [1.0, 0.0]]

    def test_slice_polyline_interior(self):
        coords = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
        part = slice_polyline(coords, 0.5, 2.5)
        assert part.tolist() == [[0.5, 0.0], [1.0, 0.0], [2.0, 0.0], [2.5, 0.0]]

    def test_slice_polyline_exact_vertices(self):
        coords = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
        part = slice_polyline(coords, 1.0, 2.0)
        assert part.tolist() == [[1.0, 0.0], [2.0, 0.0]]

    def test_polyline_length(self):
        assert polyline_length(np.array([[0.0, 0.0], [0.0, 2.5], [1.0, 2.5]])) == pytest.approx(3.5)
