"""Superpixel clustering, connectivity enforcement, and outline tracing."""

import numpy as np
import pytest
from scipy import ndimage

from conftest import make_transform

from boundline.errors import ParameterError
from boundline.geometry import polyline_length
from boundline.raster import LabGrid, LabelMap
from boundline.superpixels import (
    SlicParams,
    enforce_connectivity,
    slic,
    superpixel_outlines,
)


def make_lab(l_plane, a_plane=None, b_plane=None, gsd=0.05):
    l_plane = np.asarray(l_plane, dtype=np.float64)
    if a_plane is None:
        a_plane = np.zeros_like(l_plane)
    if b_plane is None:
        b_plane = np.zeros_like(l_plane)
    values = np.stack([l_plane, np.asarray(a_plane, dtype=np.float64),
                       np.asarray(b_plane, dtype=np.float64)], axis=-1)
    return LabGrid(values=values.astype(np.float32),
                   transform=make_transform(gsd))


def make_labels(labels, gsd=0.05):
    return LabelMap(labels=np.asarray(labels, dtype=np.int32),
                    transform=make_transform(gsd))


def noise_lab(rng, shape=(60, 60)):
    return make_lab(rng.uniform(20.0, 80.0, shape),
                    rng.uniform(-30.0, 30.0, shape),
                    rng.uniform(-30.0, 30.0, shape))


def smooth_noise_lab(rng, shape=(60, 60)):
    """Spatially correlated color noise, so region shapes track compactness."""
    def plane(lo, hi):
        raw = ndimage.gaussian_filter(rng.uniform(size=shape), 4.0,
                                      mode="reflect")
        raw = (raw - raw.min()) / (raw.max() - raw.min())
        return lo + raw * (hi - lo)

    return make_lab(plane(20.0, 80.0), plane(-30.0, 30.0), plane(-30.0, 30.0))


class TestSlicParams:
    def test_requires_exactly_one_size(self):
        with pytest.raises(ParameterError, match="exactly one"):
            SlicParams()
        with pytest.raises(ParameterError, match="exactly one"):
            SlicParams(region_size=10, target_count=5)

    def test_region_size_lower_bound(self):
        with pytest.raises(ParameterError, match="region_size"):
            SlicParams(region_size=1)
        assert SlicParams(region_size=2).region_size == 2

    def test_target_count_lower_bound(self):
        with pytest.raises(ParameterError, match="target_count"):
            SlicParams(target_count=0)

    def test_compactness_positive(self):
        with pytest.raises(ParameterError, match="compactness"):
            SlicParams(region_size=10, compactness=0.0)
        with pytest.raises(ParameterError, match="compactness"):
            SlicParams(region_size=10, compactness=-3.0)

    def test_iterations_minimum(self):
        with pytest.raises(ParameterError, match="iterations"):
            SlicParams(region_size=10, iterations=0)

    def test_min_region_size_not_negative(self):
        with pytest.raises(ParameterError, match="min_region_size"):
            SlicParams(region_size=10, min_region_size=-1)

    def test_spacing_from_target_count(self):
        assert SlicParams(target_count=25).spacing(100, 100) == 20
        assert SlicParams(region_size=13).spacing(100, 100) == 13

    def test_min_size_default_quarter_cell(self):
        assert SlicParams(region_size=20).min_size(20) == 100
        assert SlicParams(region_size=20, min_region_size=7).min_size(20) == 7


class TestSlic:
    def test_constant_image_grid_voronoi(self):
        lab = make_lab(np.full((100, 100), 50.0))
        out = slic(lab, SlicParams(region_size=20))

        # flat color makes the distance purely spatial, so the result is the
        # Voronoi partition of the 5x5 seed grid with low-index tie wins
        seeds = np.array([10, 30, 50, 70, 90])
        assign = np.argmin(np.abs(np.arange(100)[:, None] - seeds), axis=1)
        expected = assign[:, None] * 5 + assign[None, :]
        assert np.array_equal(out.labels, expected)
        assert np.bincount(assign).tolist() == [21, 20, 20, 20, 19]

    def test_target_count_matches_equivalent_spacing(self):
        lab = make_lab(np.full((100, 100), 50.0))
        by_spacing = slic(lab, SlicParams(region_size=20))
        by_count = slic(lab, SlicParams(target_count=25))
        assert np.array_equal(by_spacing.labels, by_count.labels)

    def test_region_size_must_fit_grid(self):
        lab = make_lab(np.full((40, 60), 50.0))
        with pytest.raises(ParameterError, match="region size"):
            slic(lab, SlicParams(region_size=40))

    def test_two_color_split_adheres_to_edge(self):
        a_plane = np.where(np.arange(100) < 50, -20.0, 20.0)
        a_plane = np.broadcast_to(a_plane, (100, 100))
        lab = make_lab(np.full((100, 100), 50.0), a_plane)
        out = slic(lab, SlicParams(region_size=10))

        # for nearly every row a label change must fall within one pixel of
        # the true edge between columns 49 and 50
        hits = 0
        changes = out.labels[:, :-1] != out.labels[:, 1:]
        for row in range(100):
            cols = np.nonzero(changes[row])[0]
            if cols.size and np.abs(cols - 49).min() <= 1:
                hits += 1
        assert hits >= 95

    def test_single_iteration_still_total(self, rng):
        lab = noise_lab(rng, (30, 30))
        out = slic(lab, SlicParams(region_size=10, iterations=1))
        assert out.labels.min() >= 0
        assert np.array_equal(np.unique(out.labels),
                              np.arange(out.labels.max() + 1))

    def test_deterministic_reruns(self, rng):
        lab = noise_lab(rng, (40, 40))
        first = slic(lab, SlicParams(region_size=10))
        second = slic(lab, SlicParams(region_size=10))
        assert first.labels.tobytes() == second.labels.tobytes()


class TestEnforceConnectivity:
    def test_connected_labels_only_renumbered(self):
        out = enforce_connectivity(make_labels([[5, 5], [3, 3]]), 1)
        assert np.array_equal(out.labels, [[0, 0], [1, 1]])

    def test_stray_pixel_absorbed(self):
        labels = np.zeros((5, 5), dtype=np.int32)
        labels[2, 2] = 1
        out = enforce_connectivity(make_labels(labels), 2)
        assert np.array_equal(out.labels, np.zeros((5, 5)))

    def test_checkerboard_collapses_to_one_label(self):
        board = np.indices((4, 4)).sum(axis=0) % 2
        out = enforce_connectivity(make_labels(board), 2)
        assert np.array_equal(out.labels, np.zeros((4, 4)))

    def test_threshold_one_keeps_single_pixels(self):
        board = np.indices((4, 4)).sum(axis=0) % 2
        out = enforce_connectivity(make_labels(board), 1)
        assert np.array_equal(out.labels, np.arange(16).reshape(4, 4))

    def test_disconnected_same_label_split(self):
        out = enforce_connectivity(make_labels([[0, 1, 0]]), 1)
        assert np.array_equal(out.labels, [[0, 1, 2]])

    def test_output_regions_connected_and_big_enough(self, rng):
        for _ in range(10):
            labels = rng.integers(0, 4, size=(12, 9))
            out = enforce_connectivity(make_labels(labels), 3)
            n = out.labels.max() + 1
            assert np.array_equal(np.unique(out.labels), np.arange(n))
            for v in range(n):
                _, parts = ndimage.label(out.labels == v)
                assert parts == 1
            if n > 1:
                assert np.bincount(out.labels.ravel()).min() >= 3


def unit_cracks(labels):
    """Brute-force crack scan: one entry per pixel edge between labels."""
    cracks = set()
    h, w = labels.shape
    for r in range(h):
        for c in range(1, w):
            if labels[r, c] != labels[r, c - 1]:
                cracks.add(("v", c, r))
    for r in range(1, h):
        for c in range(w):
            if labels[r, c] != labels[r - 1, c]:
                cracks.add(("h", c, r))
    return cracks


def cracks_from_polylines(lines, transform):
    cracks = set()
    for line in lines:
        cols, rows = transform.world_to_pixel(line.coords[:, 0],
                                              line.coords[:, 1])
        corners = np.column_stack([cols + 0.5, rows + 0.5])
        corners = np.rint(corners).astype(int)
        for (x1, y1), (x2, y2) in zip(corners[:-1], corners[1:]):
            if x1 == x2:
                for y in range(min(y1, y2), max(y1, y2)):
                    cracks.add(("v", x1, y))
            else:
                assert y1 == y2
                for x in range(min(x1, x2), max(x1, x2)):
                    cracks.add(("h", x, y1))
    return cracks


class TestSuperpixelOutlines:
    def test_single_label_no_outlines(self):
        assert superpixel_outlines(make_labels(np.zeros((6, 6)))) == []

    def test_column_split_single_vertical_line(self):
        labels = np.zeros((6, 8), dtype=np.int32)
        labels[:, 3:] = 1
        lines = superpixel_outlines(make_labels(labels))
        assert len(lines) == 1
        np.testing.assert_allclose(
            lines[0].coords, [[100.15, 200.0], [100.15, 199.7]])

    def test_four_blocks_meet_at_central_junction(self):
        labels = np.zeros((4, 4), dtype=np.int32)
        labels[:2, 2:] = 1
        labels[2:, :2] = 2
        labels[2:, 2:] = 3
        lines = superpixel_outlines(make_labels(labels))
        assert len(lines) == 4
        junction = (100.10, 199.90)
        for line in lines:
            assert line.coords.shape == (2, 2)
            ends = {tuple(np.round(p, 6)) for p in line.coords}
            assert junction in ends

    def test_island_traced_as_closed_loop(self):
        labels = np.zeros((5, 5), dtype=np.int32)
        labels[1:4, 1:4] = 1
        lines = superpixel_outlines(make_labels(labels))
        assert len(lines) == 1
        coords = lines[0].coords
        assert np.array_equal(coords[0], coords[-1])
        assert coords.shape == (5, 2)
        assert polyline_length(coords) == pytest.approx(12 * 0.05)

    def test_crack_set_matches_brute_force(self, rng):
        transform = make_transform()
        for _ in range(10):
            labels = rng.integers(0, 4, size=(9, 7))
            lines = superpixel_outlines(make_labels(labels))
            assert cracks_from_polylines(lines, transform) == \
                unit_cracks(labels)

    def test_higher_compactness_never_longer(self, rng):
        lab = smooth_noise_lab(rng)
        lengths = []
        for m in (1.0, 10.0, 40.0):
            params = SlicParams(region_size=10, compactness=m)
            labels = enforce_connectivity(slic(lab, params),
                                          params.min_size(10))
            lines = superpixel_outlines(labels)
            lengths.append(sum(polyline_length(line.coords)
                               for line in lines))
        assert lengths[2] <= lengths[1] <= lengths[0]

    def test_deterministic_reruns(self, rng):
        labels = make_labels(rng.integers(0, 5, size=(11, 13)))
        first = superpixel_outlines(labels)
        second = superpixel_outlines(labels)
        assert len(first) == len(second)
        for a, b in zip(first, second):
            assert np.array_equal(a.coords, b.coords)
