"""SLIC superpixels and crack-boundary outlines.

Clusters pixels in the joint CIELAB/position space with a locally windowed
k-means, enforces 4-connected regions, and traces the cracks between
differing labels into world-coordinate polylines.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import ParameterError
from .geometry import Polyline
from .raster import LabGrid, LabelMap

__all__ = [
    "SlicParams",
    "slic",
    "enforce_connectivity",
    "superpixel_outlines",
]


@dataclass(frozen=True)
class SlicParams:
    """Settings for the superpixel clustering.

    Exactly one of `region_size` (seed spacing S in pixels) and
    `target_count` (approximate number of superpixels) must be given.
    `min_region_size` defaults to S*S/4 when left unset.
    """

    region_size: int | None = None
    target_count: int | None = None
    compactness: float = 10.0
    iterations: int = 10
    min_region_size: int | None = None

    def __post_init__(self):
        if (self.region_size is None) == (self.target_count is None):
            raise ParameterError(
                "exactly one of region_size and target_count is required")
        if self.region_size is not None and self.region_size < 2:
            raise ParameterError(
                f"region_size must be >= 2, got {self.region_size}")
        if self.target_count is not None and self.target_count < 1:
            raise ParameterError(
                f"target_count must be >= 1, got {self.target_count}")
        if not self.compactness > 0:
            raise ParameterError(
                f"compactness must be positive, got {self.compactness}")
        if self.iterations < 1:
            raise ParameterError(
                f"iterations must be >= 1, got {self.iterations}")
        if self.min_region_size is not None and self.min_region_size < 0:
            raise ParameterError(
                f"min_region_size must be >= 0, got {self.min_region_size}")

    def spacing(self, width: int, height: int) -> int:
        """Seed spacing in pixels for a grid of the given size."""
        if self.region_size is not None:
            return self.region_size
        return max(2, int(round(math.sqrt(
            width * height / self.target_count))))

    def min_size(self, spacing: int) -> int:
        """Smallest region kept by connectivity enforcement."""
        if self.min_region_size is not None:
            return self.min_region_size
        return max(1, spacing * spacing // 4)


def _seed_axis(extent: int, spacing: int) -> np.ndarray:
    """Seed positions along one axis, centered in the leftover margin."""
    n = max(1, int(round(extent / spacing)))
    start = (extent - (n - 1) * spacing) / 2.0
    return np.floor(start + spacing * np.arange(n) + 0.5).astype(np.int64)


def _gradient_map(values: np.ndarray) -> np.ndarray:
    # squared color gradient with replicated edges, for seed perturbation
    padded = np.pad(values, ((1, 1), (1, 1), (0, 0)), mode="edge")
    dx = padded[1:-1, 2:] - padded[1:-1, :-2]
    dy = padded[2:, 1:-1] - padded[:-2, 1:-1]
    return (dx * dx).sum(axis=-1) + (dy * dy).sum(axis=-1)


def _perturb_seeds(rows: np.ndarray, cols: np.ndarray,
                   grad: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Move each seed to the lowest-gradient pixel in its 3x3 neighborhood.

    Ties prefer the seed itself, then the nearest offset in a fixed order,
    so a flat image leaves the grid untouched.
    """
    h, w = grad.shape
    out_r = []
    out_c = []
    for sr, sc in zip(rows.tolist(), cols.tolist()):
        best = None
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                r, c = sr + dr, sc + dc
                if not (0 <= r < h and 0 <= c < w):
                    continue
                key = (grad[r, c], abs(dr) + abs(dc), dr, dc)
                if best is None or key < best[0]:
                    best = (key, r, c)
        out_r.append(best[1])
        out_c.append(best[2])
    return np.array(out_r, dtype=np.int64), np.array(out_c, dtype=np.int64)


def slic(lab: LabGrid, params: SlicParams) -> LabelMap:
    """Cluster a Lab grid into superpixels.

    Seeds start on a regular grid with spacing S, nudged off local color
    edges. Each round assigns pixels within a 2S window of every center by
    the combined distance sqrt(d_lab^2 + (m * d_xy / S)^2) and then recenters
    each cluster on its mean. Runs exactly `params.iterations` rounds and is
    fully deterministic.
    """
    values = np.asarray(lab.values, dtype=np.float64)
    h, w = values.shape[:2]
    spacing = params.spacing(w, h)
    if spacing >= min(w, h):
        raise ParameterError(
            f"region size {spacing} must be smaller than the grid's short "
            f"side {min(w, h)}")

    seed_rows = _seed_axis(h, spacing)
    seed_cols = _seed_axis(w, spacing)
    grid_r, grid_c = np.meshgrid(seed_rows, seed_cols, indexing="ij")
    rows, cols = _perturb_seeds(grid_r.ravel(), grid_c.ravel(),
                                _gradient_map(values))
    k = rows.size

    # center state: L, a, b, col, row
    centers = np.empty((k, 5), dtype=np.float64)
    centers[:, :3] = values[rows, cols]
    centers[:, 3] = cols
    centers[:, 4] = rows

    ratio = (params.compactness / spacing) ** 2
    col_coord = np.arange(w, dtype=np.float64)
    row_coord = np.arange(h, dtype=np.float64)
    col_grid, row_grid = np.meshgrid(col_coord, row_coord)
    channel_weights = np.array([1.0, 1.0, 1.0, ratio, ratio])

    labels = np.empty((h, w), dtype=np.int64)
    for _ in range(params.iterations):
        dist = np.full((h, w), np.inf)
        labels.fill(-1)
        for ci in range(k):
            cx, cy = centers[ci, 3], centers[ci, 4]
            r0 = max(0, int(math.floor(cy)) - spacing)
            r1 = min(h, int(math.floor(cy)) + spacing + 1)
            c0 = max(0, int(math.floor(cx)) - spacing)
            c1 = min(w, int(math.floor(cx)) + spacing + 1)
            win = values[r0:r1, c0:c1]
            d = ((win - centers[ci, :3]) ** 2).sum(axis=-1)
            d = d + ratio * (
                ((col_coord[c0:c1] - cx) ** 2)[None, :]
                + ((row_coord[r0:r1] - cy) ** 2)[:, None])
            patch = dist[r0:r1, c0:c1]
            better = d < patch  # strict: ties keep the lower cluster id
            patch[better] = d[better]
            labels[r0:r1, c0:c1][better] = ci

        missed = labels < 0
        if missed.any():
            # moved centers can leave window gaps; fall back to a global
            # nearest-center assignment for the stragglers
            rr, cc = np.nonzero(missed)
            pts = np.column_stack([
                values[rr, cc],
                cc.astype(np.float64),
                rr.astype(np.float64),
            ])
            diffs = pts[:, None, :] - centers[None, :, :]
            full = (diffs * diffs * channel_weights).sum(axis=-1)
            labels[rr, cc] = np.argmin(full, axis=1)

        flat = labels.ravel()
        counts = np.bincount(flat, minlength=k).astype(np.float64)
        filled = counts > 0
        new_centers = centers.copy()  # empty clusters keep their center
        planes = [values[..., 0], values[..., 1], values[..., 2],
                  col_grid, row_grid]
        for j, plane in enumerate(planes):
            sums = np.bincount(flat, weights=plane.ravel(), minlength=k)
            np.divide(sums, counts, out=new_centers[:, j], where=filled)
        centers = new_centers

    _, dense = np.unique(labels, return_inverse=True)
    return LabelMap(labels=dense.reshape(h, w).astype(np.int32),
                    transform=lab.transform)


def _components(labels: np.ndarray) -> np.ndarray:
    """4-connected components of equal label, numbered by first raster pixel."""
    h, w = labels.shape
    idx = np.arange(h * w).reshape(h, w)
    right = labels[:, :-1] == labels[:, 1:]
    down = labels[:-1, :] == labels[1:, :]
    src = np.concatenate([idx[:, :-1][right], idx[:-1, :][down]])
    dst = np.concatenate([idx[:, 1:][right], idx[1:, :][down]])
    graph = sparse.coo_matrix(
        (np.ones(src.size, dtype=np.int8), (src, dst)), shape=(h * w, h * w))
    _, comp = csgraph.connected_components(graph, directed=False)
    _, first, inverse = np.unique(comp, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(first.size)
    return rank[inverse].reshape(h, w)


def enforce_connectivity(label_map: LabelMap,
                         min_region_size: int) -> LabelMap:
    """Absorb small fragments into their largest neighboring region.

    Components of equal label smaller than `min_region_size` are merged one
    at a time, lowest component id first, each into the adjacent component
    with the most pixels (ties to the lowest id). The result is re-labeled
    so ids are dense in raster order and every label is one 4-connected
    region.
    """
    labels = np.asarray(label_map.labels)
    h, w = labels.shape
    comp = _components(labels)
    n = int(comp.max()) + 1
    flat = comp.ravel()
    sizes = np.bincount(flat, minlength=n).astype(np.int64)
    comp_label = np.empty(n, dtype=np.int64)
    comp_label[flat] = labels.ravel()

    adjacency: list[set[int]] = [set() for _ in range(n)]
    left, right = comp[:, :-1], comp[:, 1:]
    upper, lower = comp[:-1, :], comp[1:, :]
    hdiff = left != right
    vdiff = upper != lower
    pairs = np.concatenate([
        np.column_stack([left[hdiff], right[hdiff]]),
        np.column_stack([upper[vdiff], lower[vdiff]]),
    ])
    if pairs.size:
        for a, b in np.unique(pairs, axis=0).tolist():
            adjacency[a].add(b)
            adjacency[b].add(a)

    parent = np.arange(n, dtype=np.int64)

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return int(x)

    heap = [c for c in range(n) if sizes[c] < min_region_size]
    heapq.heapify(heap)
    while heap:
        c = heapq.heappop(heap)
        if find(c) != c or sizes[c] >= min_region_size:
            continue  # already absorbed, or grown past the threshold
        neighbors = {find(x) for x in adjacency[c]} - {c}
        if not neighbors:
            continue  # single-region map, nothing to merge into
        target = max(neighbors, key=lambda r: (sizes[r], -r))
        parent[c] = target
        sizes[target] += sizes[c]
        adjacency[target] = (
            {find(x) for x in adjacency[target] | adjacency[c]}
            - {target})
        if sizes[target] < min_region_size:
            heapq.heappush(heap, target)

    roots = np.array([find(i) for i in range(n)], dtype=np.int64)
    merged = comp_label[roots][flat].reshape(h, w)
    # merging can fuse neighbors of equal label; rebuilding components also
    # splits any same-label regions that were never connected
    final = _components(merged)
    return LabelMap(labels=final.astype(np.int32),
                    transform=label_map.transform)


def _crack_edges(labels: np.ndarray):
    """Crack segments between differing labels, as corner-lattice pairs.

    Corners are (col, row) lattice points; corner (0, 0) sits at the
    top-left of pixel (0, 0). The image border separates nothing and is
    never a crack.
    """
    edges = []
    vd = labels[:, 1:] != labels[:, :-1]
    for r, i in zip(*(x.tolist() for x in np.nonzero(vd))):
        edges.append(((i + 1, r), (i + 1, r + 1)))
    hd = labels[1:, :] != labels[:-1, :]
    for j, c in zip(*(x.tolist() for x in np.nonzero(hd))):
        edges.append(((c, j + 1), (c + 1, j + 1)))
    return edges


def superpixel_outlines(label_map: LabelMap) -> list[Polyline]:
    """Trace cracks between differing labels into world polylines.

    Boundaries follow pixel edges on the corner lattice, so every outline is
    shared by exactly two regions and appears once. Corners where three or
    more regions meet split the output, straight runs are compressed to
    their endpoints, and closed loops repeat their first vertex at the end.
    The image border itself is not an outline.
    """
    labels = np.asarray(label_map.labels)
    edges = _crack_edges(labels)
    if not edges:
        return []

    adjacency: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for a, b in edges:
        adjacency.setdefault(a, []).append(b)
        adjacency.setdefault(b, []).append(a)
    for corner in adjacency:
        adjacency[corner].sort()

    visited: set[tuple[tuple[int, int], tuple[int, int]]] = set()

    def edge_key(a, b):
        return (a, b) if a <= b else (b, a)

    def walk(start, first):
        path = [start, first]
        visited.add(edge_key(start, first))
        while len(adjacency[path[-1]]) == 2 and path[-1] != start:
            a, b = adjacency[path[-1]]
            nxt = b if a == path[-2] else a
            if edge_key(path[-1], nxt) in visited:
                break
            visited.add(edge_key(path[-1], nxt))
            path.append(nxt)
        return path

    chains = []
    for corner in sorted(adjacency):
        if len(adjacency[corner]) == 2:
            continue
        for neighbor in adjacency[corner]:
            if edge_key(corner, neighbor) not in visited:
                chains.append(walk(corner, neighbor))
    for corner in sorted(adjacency):
        for neighbor in adjacency[corner]:
            if edge_key(corner, neighbor) not in visited:
                chains.append(walk(corner, neighbor))

    transform = label_map.transform
    out = []
    for path in chains:
        kept = [path[0]]
        for i in range(1, len(path) - 1):
            before = path[i - 1]
            here = path[i]
            after = path[i + 1]
            if (here[0] - before[0], here[1] - before[1]) != \
                    (after[0] - here[0], after[1] - here[1]):
                kept.append(here)
        kept.append(path[-1])
        corner_cols = np.array([p[0] for p in kept], dtype=np.float64)
        corner_rows = np.array([p[1] for p in kept], dtype=np.float64)
        x, y = transform.corner_to_world(corner_cols, corner_rows)
        out.append(Polyline(coords=np.column_stack([x, y])))
    return out
