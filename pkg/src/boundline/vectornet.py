"""Combine raster-derived outline layers into a clean line network.

The pipeline here is purely vector: keep superpixel outlines near detected
contours (buffer_filter), repair the resulting soup into a noded arrangement
(clean_topology), and index it as a node/edge graph (build_network).
"""
from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, TopologyError
from .geometry import (
    Polyline,
    dedupe_consecutive,
    merge_intervals,
    polyline_length,
    segment_buffer_intervals,
    segment_split_points,
    slice_polyline,
    snap_to_lattice,
)

logger = logging.getLogger(__name__)

_EPS = 1e-9


# ---------------------------------------------------------------------------
# buffer filter


def _segment_array(lines) -> np.ndarray:
    rows = []
    for line in lines:
        c = line.coords
        for j in range(len(c) - 1):
            rows.append((c[j, 0], c[j, 1], c[j + 1, 0], c[j + 1, 1]))
    if not rows:
        return np.zeros((0, 4), dtype=np.float64)
    return np.asarray(rows, dtype=np.float64)


def buffer_filter(lines, guide_lines, radius: float) -> list[Polyline]:
    """Keep the parts of ``lines`` within ``radius`` of any guide line.

    Splits each input polyline into the maximal sub-polylines whose every
    point lies within the buffer; pieces that degenerate to a single point
    are dropped. radius=0 keeps only exact overlap, radius=inf keeps all.
    """
    if radius < 0 or math.isnan(radius):
        raise ParameterError(f"buffer radius must be >= 0, got {radius}")
    if not guide_lines:
        logger.warning("buffer filter: guide layer is empty, every line is dropped")
        return []
    if math.isinf(radius):
        return [Polyline(line.coords.copy(), id=line.id) for line in lines]

    guide = _segment_array(guide_lines)
    glo = np.minimum(guide[:, 0:2], guide[:, 2:4]) - radius
    ghi = np.maximum(guide[:, 0:2], guide[:, 2:4]) + radius

    out: list[Polyline] = []
    for idx, line in enumerate(lines):
        coords = line.coords
        global_intervals: list[tuple[float, float]] = []
        for j in range(len(coords) - 1):
            a, b = coords[j], coords[j + 1]
            slo = np.minimum(a, b)
            shi = np.maximum(a, b)
            near = np.nonzero(np.all(slo <= ghi, axis=1) & np.all(shi >= glo, axis=1))[0]
            if near.size == 0:
                continue
            intervals = []
            for g in near:
                g1 = (guide[g, 0], guide[g, 1])
                g2 = (guide[g, 2], guide[g, 3])
                intervals.extend(segment_buffer_intervals(a, b, g1, g2, radius))
            for lo, hi in merge_intervals(intervals):
                global_intervals.append((j + lo, j + hi))
        base = line.id if line.id is not None else f"l{idx}"
        for k, (g0, g1) in enumerate(merge_intervals(global_intervals, join_tol=1e-9)):
            sub = slice_polyline(coords, g0, g1)
            sub = dedupe_consecutive(sub)
            if len(sub) >= 2:
                out.append(Polyline(sub, id=f"{base}.{k}"))
    return out


# ---------------------------------------------------------------------------
# noding helpers


def _bbox_pairs(segments: list[tuple[int, int, np.ndarray, np.ndarray]]):
    """Candidate index pairs whose segment bounding boxes overlap.

    Uniform grid hash; the cell size follows the median segment extent so
    crack-scale input stays near O(n).
    """
    n = len(segments)
    if n < 2:
        return
    boxes = np.empty((n, 4), dtype=np.float64)
    for i, (_, _, a, b) in enumerate(segments):
        boxes[i, 0] = min(a[0], b[0])
        boxes[i, 1] = min(a[1], b[1])
        boxes[i, 2] = max(a[0], b[0])
        boxes[i, 3] = max(a[1], b[1])
    spans = np.maximum(boxes[:, 2] - boxes[:, 0], boxes[:, 3] - boxes[:, 1])
    cell = max(float(np.median(spans)) * 2.0, 1e-9)
    total = max(boxes[:, 2].max() - boxes[:, 0].min(), boxes[:, 3].max() - boxes[:, 1].min())
    cell = max(cell, total / 512.0)

    buckets: dict[tuple[int, int], list[int]] = defaultdict(list)
    for i in range(n):
        x0 = int(math.floor(boxes[i, 0] / cell))
        x1 = int(math.floor(boxes[i, 2] / cell))
        y0 = int(math.floor(boxes[i, 1] / cell))
        y1 = int(math.floor(boxes[i, 3] / cell))
        for cx in range(x0, x1 + 1):
            for cy in range(y0, y1 + 1):
                buckets[(cx, cy)].append(i)
    seen = set()
    for members in buckets.values():
        m = len(members)
        for u in range(m):
            i = members[u]
            for v in range(u + 1, m):
                j = members[v]
                key = (i, j) if i < j else (j, i)
                if key in seen:
                    continue
                seen.add(key)
                if (boxes[key[0], 0] <= boxes[key[1], 2] + _EPS
                        and boxes[key[1], 0] <= boxes[key[0], 2] + _EPS
                        and boxes[key[0], 1] <= boxes[key[1], 3] + _EPS
                        and boxes[key[1], 1] <= boxes[key[0], 3] + _EPS):
                    yield key


def _node_lines(lines: list[np.ndarray]) -> list[np.ndarray]:
    """Split polylines so intersections occur only at shared endpoints."""
    segments = []  # (line index, segment index, a, b)
    for i, coords in enumerate(lines):
        for j in range(len(coords) - 1):
            segments.append((i, j, coords[j], coords[j + 1]))

    splits: dict[tuple[int, int], list[tuple[float, tuple[float, float]]]] = defaultdict(list)
    for u, v in _bbox_pairs(segments):
        li, si, a1, b1 = segments[u]
        lj, sj, a2, b2 = segments[v]
        if li == lj and si == sj:
            continue
        sp, sq = segment_split_points((a1[0], a1[1]), (b1[0], b1[1]),
                                      (a2[0], a2[1]), (b2[0], b2[1]))
        if sp:
            splits[(li, si)].extend(sp)
        if sq:
            splits[(lj, sj)].extend(sq)

    # Rebuild each line with split vertices inserted, remembering cut indices.
    pieces: list[np.ndarray] = []
    vertex_use: dict[tuple[float, float], set[int]] = defaultdict(set)
    expanded: list[tuple[list[tuple[float, float]], set[int]]] = []
    for i, coords in enumerate(lines):
        chain: list[tuple[float, float]] = [(coords[0, 0], coords[0, 1])]
        cuts: set[int] = set()
        for j in range(len(coords) - 1):
            events = sorted(splits.get((i, j), ()), key=lambda e: e[0])
            last_t = -1.0
            for t, pt in events:
                if t - last_t < 1e-12:
                    continue
                last_t = t
                key = (float(pt[0]), float(pt[1]))
                if key == chain[-1]:
                    cuts.add(len(chain) - 1)
                    continue
                chain.append(key)
                cuts.add(len(chain) - 1)
            end = (coords[j + 1, 0], coords[j + 1, 1])
            if end != chain[-1]:
                chain.append(end)
        expanded.append((chain, cuts))
        for pos, pt in enumerate(chain):
            vertex_use[pt].add(i)

    # Interior vertices shared between lines (or revisited within one line)
    # are junctions too: segment intersection math never reports them because
    # the segments meet at existing endpoints.
    for i, (chain, cuts) in enumerate(expanded):
        counts = defaultdict(int)
        for pt in chain:
            counts[pt] += 1
        for pos in range(1, len(chain) - 1):
            pt = chain[pos]
            if len(vertex_use[pt]) > 1 or counts[pt] > 1:
                cuts.add(pos)
        cuts.discard(0)
        cuts.discard(len(chain) - 1)
        bounds = [0] + sorted(cuts) + [len(chain) - 1]
        for a, b in zip(bounds[:-1], bounds[1:]):
            part = dedupe_consecutive(np.asarray(chain[a:b + 1], dtype=np.float64))
            if len(part) >= 2:
                pieces.append(part)
    return pieces


def _endpoint_degrees(pieces: list[np.ndarray]) -> dict[tuple[float, float], int]:
    deg: dict[tuple[float, float], int] = defaultdict(int)
    for coords in pieces:
        deg[(coords[0, 0], coords[0, 1])] += 1
        deg[(coords[-1, 0], coords[-1, 1])] += 1
    return deg


def _merge_degree2(pieces: list[np.ndarray]) -> list[np.ndarray]:
    """Join polylines end-to-end wherever exactly two meet."""
    deg = _endpoint_degrees(pieces)
    incident: dict[tuple[float, float], list[tuple[int, int]]] = defaultdict(list)
    for i, coords in enumerate(pieces):
        incident[(coords[0, 0], coords[0, 1])].append((i, 0))
        incident[(coords[-1, 0], coords[-1, 1])].append((i, 1))

    used = [False] * len(pieces)
    out: list[np.ndarray] = []

    def other_end(i: int, end: int) -> tuple[float, float]:
        c = pieces[i]
        return (c[0, 0], c[0, 1]) if end == 0 else (c[-1, 0], c[-1, 1])

    for start in range(len(pieces)):
        if used[start]:
            continue
        used[start] = True
        chain = [np.array(pieces[start], copy=True)]
        # extend forward from the tail, then backward from the head
        for direction in (1, 0):
            cur, cur_end = start, direction
            while True:
                pt = other_end(cur, cur_end)
                here = [(i, e) for i, e in incident[pt] if not (i == cur and e == cur_end)]
                if deg[pt] != 2 or len(here) != 1:
                    break
                nxt, nend = here[0]
                if used[nxt]:
                    break
                used[nxt] = True
                seg = pieces[nxt] if nend == 0 else pieces[nxt][::-1]
                if direction == 1:
                    chain.append(seg[1:])
                else:
                    chain.insert(0, seg[::-1][:-1])
                cur, cur_end = nxt, 1 - nend
        merged = np.concatenate(chain, axis=0)
        out.append(dedupe_consecutive(merged))
    return out


def _canonical(coords: np.ndarray) -> np.ndarray:
    """Orient deterministically: open lines low-end first, rings rotated."""
    if (coords[0, 0], coords[0, 1]) == (coords[-1, 0], coords[-1, 1]) and len(coords) > 3:
        body = coords[:-1]
        k = int(np.lexsort((body[:, 1], body[:, 0]))[0])
        ring = np.concatenate([body[k:], body[:k], body[k:k + 1]], axis=0)
        nxt = (ring[1, 0], ring[1, 1])
        prv = (ring[-2, 0], ring[-2, 1])
        if prv < nxt:
            ring = ring[::-1].copy()
        return ring
    first = (coords[0, 0], coords[0, 1])
    last = (coords[-1, 0], coords[-1, 1])
    if last < first:
        return coords[::-1].copy()
    return coords


def clean_topology(lines, snap_tol: float = 0.05, min_dangle: float = 0.5) -> list[Polyline]:
    """Repair a line soup into a noded, deduplicated, dangle-free layer.

    Steps: snap vertices to a snap_tol lattice, split lines at every mutual
    intersection, drop zero-length leftovers, repeatedly remove free-hanging
    pieces shorter than min_dangle, remove exact duplicates, and absorb
    degree-2 joins. Output ordering and orientation are canonical, so running
    the cleanup on its own output changes nothing.
    """
    if snap_tol < 0:
        raise ParameterError(f"snap_tol must be >= 0, got {snap_tol}")
    if min_dangle < 0:
        raise ParameterError(f"min_dangle must be >= 0, got {min_dangle}")

    pieces = [np.asarray(line.coords, dtype=np.float64) for line in lines]

    # Noding creates intersection vertices that land off the snap lattice, and
    # deduplication can expose new dangles, so a single pass is not stable.
    # Iterate the snap/node/dangle/dedupe cycle until nothing changes; real
    # layers settle in two or three rounds.
    prev_state = None
    for _ in range(100):
        work: list[np.ndarray] = []
        for coords in pieces:
            coords = dedupe_consecutive(snap_to_lattice(coords, snap_tol))
            if len(coords) >= 2:
                work.append(coords)

        pieces = _node_lines(work)

        while True:
            deg = _endpoint_degrees(pieces)
            keep = []
            removed = False
            for coords in pieces:
                e0 = (coords[0, 0], coords[0, 1])
                e1 = (coords[-1, 0], coords[-1, 1])
                is_dangle = ((deg[e0] == 1 or deg[e1] == 1)
                             and polyline_length(coords) < min_dangle)
                if is_dangle:
                    removed = True
                else:
                    keep.append(coords)
            pieces = keep
            if not removed:
                break

        seen: set[bytes] = set()
        unique = []
        for coords in pieces:
            fwd = coords.tobytes()
            rev = coords[::-1].copy().tobytes()
            key = min(fwd, rev)
            if key in seen:
                continue
            seen.add(key)
            unique.append(coords)
        pieces = unique

        state = sorted(min(c.tobytes(), c[::-1].copy().tobytes()) for c in pieces)
        if state == prev_state:
            break
        prev_state = state
    else:
        logger.warning("topology cleanup did not reach a fixpoint after 100 rounds")

    merged = _merge_degree2(pieces)
    canon = [_canonical(c) for c in merged]
    canon.sort(key=lambda c: c.tobytes())
    return [Polyline(c, id=f"c{i}") for i, c in enumerate(canon)]


# ---------------------------------------------------------------------------
# network


@dataclass
class NetworkEdge:
    node_a: str
    node_b: str
    coords: np.ndarray
    length: float


@dataclass
class LineNetwork:
    nodes: dict[str, tuple[float, float]] = field(default_factory=dict)
    edges: dict[str, NetworkEdge] = field(default_factory=dict)

    def adjacency(self) -> dict[str, list[tuple[str, str]]]:
        """node id -> list of (edge id, opposite node id)."""
        adj: dict[str, list[tuple[str, str]]] = {n: [] for n in self.nodes}
        for edge_id in sorted(self.edges):
            edge = self.edges[edge_id]
            adj[edge.node_a].append((edge_id, edge.node_b))
            if edge.node_b != edge.node_a:
                adj[edge.node_b].append((edge_id, edge.node_a))
        return adj

    def degree(self, node_id: str) -> int:
        d = 0
        for edge in self.edges.values():
            if edge.node_a == node_id:
                d += 1
            if edge.node_b == node_id:
                d += 1
        return d

    def total_length(self) -> float:
        return sum(edge.length for edge in self.edges.values())


def _check_noded(work: list[np.ndarray]) -> None:
    segments = []
    for i, coords in enumerate(work):
        for j in range(len(coords) - 1):
            segments.append((i, j, coords[j], coords[j + 1]))
    for u, v in _bbox_pairs(segments):
        li, si, a1, b1 = segments[u]
        lj, sj, a2, b2 = segments[v]
        if li == lj and si == sj:
            continue
        sp, sq = segment_split_points((a1[0], a1[1]), (b1[0], b1[1]),
                                      (a2[0], a2[1]), (b2[0], b2[1]))
        found = sp or sq
        if found:
            pt = (float(found[0][1][0]), float(found[0][1][1]))
            raise TopologyError(
                f"lines intersect away from their endpoints near "
                f"({pt[0]:.6g}, {pt[1]:.6g}); run clean_topology first", point=pt)
    vertex_use: dict[tuple[float, float], set[int]] = defaultdict(set)
    for i, coords in enumerate(work):
        for x, y in coords:
            vertex_use[(x, y)].add(i)
    for i, coords in enumerate(work):
        counts = defaultdict(int)
        for x, y in coords:
            counts[(x, y)] += 1
        ring_closure = (coords[0, 0], coords[0, 1]) == (coords[-1, 0], coords[-1, 1])
        for x, y in coords[1:-1]:
            pt = (x, y)
            # A ring's closure coordinate legitimately appears twice (at both
            # ends); any other repeat means the line touches itself.
            limit = 2 if ring_closure and pt == (coords[0, 0], coords[0, 1]) else 1
            if len(vertex_use[pt]) > 1 or counts[pt] > limit:
                raise TopologyError(
                    f"interior vertex ({x:.6g}, {y:.6g}) is shared with another "
                    f"line; run clean_topology first", point=pt)


def build_network(lines) -> LineNetwork:
    """Index noded polylines as an undirected multigraph.

    Every input polyline becomes one edge; nodes sit at the endpoint
    coordinates, so both junctions and dead ends are routable. Degree-2
    joins are NOT absorbed here: an endpoint present in the input marks an
    intentional break (clean_topology already merged the accidental ones).
    A closed ring with no junction gets its node at the lowest (x, y)
    vertex. Raises TopologyError if the input contains un-noded crossings.
    """
    work = [np.asarray(line.coords, dtype=np.float64) for line in lines]
    work = [dedupe_consecutive(c) for c in work if len(c) >= 2]
    work = [c for c in work if len(c) >= 2]
    _check_noded(work)

    # Rings that never met a junction close on an arbitrary vertex; re-anchor
    # them on their lowest vertex so ids do not depend on input order.
    deg = _endpoint_degrees(work)
    merged = []
    for coords in work:
        e0 = (coords[0, 0], coords[0, 1])
        e1 = (coords[-1, 0], coords[-1, 1])
        if e0 == e1 and deg[e0] == 2 and len(coords) > 3:
            merged.append(_canonical(coords))
        else:
            merged.append(coords)

    endpoint_coords = sorted({(c[0, 0], c[0, 1]) for c in merged}
                             | {(c[-1, 0], c[-1, 1]) for c in merged})
    node_ids = {pt: f"n{k}" for k, pt in enumerate(endpoint_coords)}

    keyed = []
    for coords in merged:
        a = node_ids[(coords[0, 0], coords[0, 1])]
        b = node_ids[(coords[-1, 0], coords[-1, 1])]
        geom = coords
        if b < a:
            a, b = b, a
            geom = coords[::-1].copy()
        elif a == b:
            # self-loop: rotation is anchored at the node, but the travel
            # direction depends on input order unless we pick one
            rev = coords[::-1].copy()
            if rev.tobytes() < geom.tobytes():
                geom = rev
        keyed.append((a, b, geom.tobytes(), geom))
    keyed.sort(key=lambda item: item[:3])

    net = LineNetwork()
    for pt, node_id in node_ids.items():
        net.nodes[node_id] = pt
    net.nodes = {k: net.nodes[k] for k in sorted(net.nodes, key=lambda s: int(s[1:]))}
    for k, (a, b, _, geom) in enumerate(keyed):
        net.edges[f"e{k}"] = NetworkEdge(node_a=a, node_b=b, coords=geom,
                                         length=polyline_length(geom))
    return net
