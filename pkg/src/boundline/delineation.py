"""Interactive boundary delineation over a line network.

Connects user-picked nodes with shortest paths (Steiner-style tree for more
than two picks), scores candidates by sinuosity with a traffic-light color,
and tracks accepted boundaries in a session that can be snapshotted to JSON.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .errors import (
    NoPathError,
    ParameterError,
    SessionStateError,
    UndefinedMeasureError,
    UnknownNodeError,
)
from .geometry import Polyline, polyline_length
from .vectornet import LineNetwork

RED = "Red"
YELLOW = "Yellow"
GREEN = "Green"


def sinuosity(line: Polyline) -> float:
    return geometry.sinuosity(line.coords)


def classify_sinuosity(s: float) -> str:
    """Traffic light: straight lines (s near 1) are the trustworthy ones."""
    if not 0.0 <= s <= 1.0:
        raise ParameterError(f"sinuosity must be in [0, 1], got {s}")
    if s <= 1.0 / 3.0:
        return RED
    if s <= 2.0 / 3.0:
        return YELLOW
    return GREEN


def simplify_line(line: Polyline, tolerance: float) -> Polyline:
    return Polyline(geometry.douglas_peucker(line.coords, tolerance), id=line.id)


@dataclass
class CandidateLine:
    geometry: Polyline
    terminals: list[str]
    sinuosity: float
    color: str
    simplified: bool = False
    # extra tree edges when the connection branches instead of forming a path
    branch_parts: list[Polyline] = field(default_factory=list)


def _shortest_paths(net: LineNetwork, source: str):
    """Dijkstra from source. Returns (dist, parent) with parent[v] = (u, edge_id)."""
    adjacency = net.adjacency()
    dist = {source: 0.0}
    parent: dict[str, tuple[str, str]] = {}
    heap = [(0.0, source)]
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for edge_id, v in adjacency[u]:
            nd = d + net.edges[edge_id].length
            if v not in dist or nd < dist[v] - 1e-15 or (
                    abs(nd - dist[v]) <= 1e-15 and (u, edge_id) < parent.get(v, (u, edge_id))):
                if v in done:
                    continue
                dist[v] = nd
                parent[v] = (u, edge_id)
                heapq.heappush(heap, (nd, v))
    return dist, parent


def _edge_path(parent, source: str, target: str) -> list[str]:
    edges = []
    v = target
    while v != source:
        u, edge_id = parent[v]
        edges.append(edge_id)
        v = u
    edges.reverse()
    return edges


def _walk_geometry(net: LineNetwork, node_seq: list[str], edge_seq: list[str]) -> np.ndarray:
    """Concatenate edge geometries oriented along the node sequence."""
    coords = [np.array([net.nodes[node_seq[0]]], dtype=np.float64)]
    for k, edge_id in enumerate(edge_seq):
        edge = net.edges[edge_id]
        c = edge.coords
        if edge.node_a == node_seq[k] and tuple(c[0]) == net.nodes[node_seq[k]]:
            seg = c
        else:
            seg = c[::-1]
        coords.append(seg[1:])
    return geometry.dedupe_consecutive(np.concatenate(coords, axis=0))


def _edge_endpoints(net: LineNetwork, edge_id: str) -> tuple[str, str]:
    edge = net.edges[edge_id]
    return edge.node_a, edge.node_b


def connect_nodes(net: LineNetwork, terminals) -> CandidateLine:
    """Connect picked nodes along the network.

    Two terminals: shortest path. More: minimum spanning tree over the
    pairwise shortest-path metric, expanded back to network edges (the
    classic Steiner tree approximation). If the union is a simple path the
    candidate geometry runs from the first listed terminal that is a path
    end; a branching result keeps the longest terminal-to-terminal path as
    the scored geometry and returns the rest as branch parts.
    """
    terminals = list(terminals)
    if len(terminals) < 2:
        raise ParameterError("need at least 2 terminal nodes")
    if len(set(terminals)) != len(terminals):
        raise ParameterError("terminal node ids must be distinct")
    for t in terminals:
        if t not in net.nodes:
            raise UnknownNodeError(f"unknown node id: {t}")

    sssp = {}
    for t in terminals:
        sssp[t] = _shortest_paths(net, t)
    unreachable = [(a, b) for i, a in enumerate(terminals) for b in terminals[i + 1:]
                   if b not in sssp[a][0]]
    if unreachable:
        pairs = ", ".join(f"{a}-{b}" for a, b in unreachable)
        raise NoPathError(f"no path between terminal pairs: {pairs}",
                          unreachable_pairs=tuple(unreachable))

    if len(terminals) == 2:
        a, b = terminals
        edge_seq = _edge_path(sssp[a][1], a, b)
        tree_edges = list(dict.fromkeys(edge_seq))
    else:
        # Prim over the terminal metric, then expand each MST link.
        in_tree = {terminals[0]}
        links: list[tuple[str, str]] = []
        while len(in_tree) < len(terminals):
            best = None
            for a in sorted(in_tree):
                for b in terminals:
                    if b in in_tree:
                        continue
                    d = sssp[a][0][b]
                    if best is None or (d, a, b) < best:
                        best = (d, a, b)
            _, a, b = best
            in_tree.add(b)
            links.append((a, b))
        tree_edges = []
        for a, b in links:
            for edge_id in _edge_path(sssp[a][1], a, b):
                if edge_id not in tree_edges:
                    tree_edges.append(edge_id)

    # Node degrees within the selected edge set decide path vs branching tree.
    degree: dict[str, int] = {}
    for edge_id in tree_edges:
        na, nb = _edge_endpoints(net, edge_id)
        degree[na] = degree.get(na, 0) + 1
        degree[nb] = degree.get(nb, 0) + 1

    if all(d <= 2 for d in degree.values()):
        ends = sorted(n for n, d in degree.items() if d == 1)
        start = next((t for t in terminals if t in ends), ends[0] if ends else terminals[0])
        node_seq, edge_seq = _order_path(net, tree_edges, start)
        coords = _walk_geometry(net, node_seq, edge_seq)
        line = Polyline(coords)
        s = geometry.sinuosity(coords)
        return CandidateLine(geometry=line, terminals=terminals,
                             sinuosity=s, color=classify_sinuosity(s))

    main_edges = _longest_terminal_path(net, tree_edges, terminals, sssp)
    start = next(t for t in terminals if t in _path_end_nodes(net, main_edges))
    node_seq, edge_seq = _order_path(net, main_edges, start)
    coords = _walk_geometry(net, node_seq, edge_seq)
    s = geometry.sinuosity(coords)
    branches = [Polyline(net.edges[e].coords.copy())
                for e in tree_edges if e not in main_edges]
    return CandidateLine(geometry=Polyline(coords), terminals=terminals,
                         sinuosity=s, color=classify_sinuosity(s),
                         branch_parts=branches)


def _order_path(net: LineNetwork, edge_ids: list[str], start: str):
    """Arrange a degree-<=2 edge set into a node/edge walk from start."""
    remaining = set(edge_ids)
    node_seq = [start]
    edge_seq = []
    cur = start
    while remaining:
        nxt = None
        for edge_id in sorted(remaining):
            na, nb = _edge_endpoints(net, edge_id)
            if na == cur:
                nxt = (edge_id, nb)
                break
            if nb == cur:
                nxt = (edge_id, na)
                break
        if nxt is None:
            raise NoPathError("selected edges do not form a connected path")
        remaining.discard(nxt[0])
        edge_seq.append(nxt[0])
        node_seq.append(nxt[1])
        cur = nxt[1]
    return node_seq, edge_seq


def _path_end_nodes(net: LineNetwork, edge_ids: list[str]) -> set[str]:
    degree: dict[str, int] = {}
    for edge_id in edge_ids:
        na, nb = _edge_endpoints(net, edge_id)
        degree[na] = degree.get(na, 0) + 1
        degree[nb] = degree.get(nb, 0) + 1
    return {n for n, d in degree.items() if d == 1}


def _longest_terminal_path(net, tree_edges, terminals, sssp):
    """Longest terminal-to-terminal path within the tree's edge set."""
    allowed = set(tree_edges)
    adjacency: dict[str, list[tuple[str, str]]] = {}
    for edge_id in tree_edges:
        na, nb = _edge_endpoints(net, edge_id)
        adjacency.setdefault(na, []).append((edge_id, nb))
        adjacency.setdefault(nb, []).append((edge_id, na))

    def tree_path(a, b):
        # DFS within the tree (unique path)
        stack = [(a, [])]
        seen = {a}
        while stack:
            node, path = stack.pop()
            if node == b:
                return path
            for edge_id, other in sorted(adjacency.get(node, ())):
                if other in seen:
                    continue
                seen.add(other)
                stack.append((other, path + [edge_id]))
        return None

    best = None
    for i, a in enumerate(terminals):
        for b in terminals[i + 1:]:
            path = tree_path(a, b)
            if path is None:
                continue
            length = sum(net.edges[e].length for e in path)
            if best is None or length > best[0] + 1e-15:
                best = (length, path)
    return best[1]


@dataclass
class AcceptedLine:
    geometry: Polyline
    sinuosity: float
    color: str
    simplified: bool
    accepted_order: int


@dataclass
class DelineationSession:
    network: LineNetwork
    candidate: CandidateLine | None = None
    accepted: list[AcceptedLine] = field(default_factory=list)
    suggested_next_node: str | None = None

    def start_candidate(self, terminals, replace: bool = False) -> CandidateLine:
        if self.candidate is not None and not replace:
            raise SessionStateError("a candidate line is already pending")
        self.candidate = connect_nodes(self.network, terminals)
        return self.candidate

    def _require_candidate(self) -> CandidateLine:
        if self.candidate is None:
            raise SessionStateError("no candidate line to operate on")
        return self.candidate

    def simplify_candidate(self, tolerance: float) -> CandidateLine:
        cand = self._require_candidate()
        cand.geometry = simplify_line(cand.geometry, tolerance)
        cand.branch_parts = [simplify_line(p, tolerance) for p in cand.branch_parts]
        cand.simplified = tolerance > 0
        s = geometry.sinuosity(cand.geometry.coords)
        cand.sinuosity = s
        cand.color = classify_sinuosity(s)
        return cand

    def replace_candidate_geometry(self, line: Polyline) -> CandidateLine:
        cand = self._require_candidate()
        cand.geometry = line
        cand.branch_parts = []
        cand.simplified = False
        s = geometry.sinuosity(line.coords)
        cand.sinuosity = s
        cand.color = classify_sinuosity(s)
        return cand

    def accept_candidate(self) -> list[AcceptedLine]:
        cand = self._require_candidate()
        added = []
        parts = [(cand.geometry, cand.sinuosity, cand.color)]
        for p in cand.branch_parts:
            s = geometry.sinuosity(p.coords)
            parts.append((p, s, classify_sinuosity(s)))
        for line, s, color in parts:
            entry = AcceptedLine(geometry=line, sinuosity=s, color=color,
                                 simplified=cand.simplified,
                                 accepted_order=len(self.accepted))
            self.accepted.append(entry)
            added.append(entry)
        # remember where the user left off; picking up from the line's far
        # end is the natural next step when tracing a parcel perimeter
        self.suggested_next_node = cand.terminals[-1]
        self.candidate = None
        return added

    def delete_candidate(self) -> None:
        self._require_candidate()
        self.candidate = None

    def export_boundaries(self) -> dict:
        features = []
        for entry in self.accepted:
            features.append({
                "type": "Feature",
                "geometry": {"type": "LineString",
                             "coordinates": entry.geometry.as_lists()},
                "properties": {
                    "sinuosity": entry.sinuosity,
                    "color": entry.color,
                    "simplified": entry.simplified,
                    "accepted_order": entry.accepted_order,
                },
            })
        features.sort(key=lambda f: f["properties"]["accepted_order"])
        return {"type": "FeatureCollection", "features": features}

    def to_snapshot(self) -> dict:
        from . import geojson_io

        doc = {
            "network": geojson_io.network_to_feature_collection(self.network),
            "accepted": self.export_boundaries(),
            "suggested_next_node": self.suggested_next_node,
            "candidate": None,
        }
        if self.candidate is not None:
            cand = self.candidate
            doc["candidate"] = {
                "geometry": cand.geometry.as_lists(),
                "terminals": list(cand.terminals),
                "sinuosity": cand.sinuosity,
                "color": cand.color,
                "simplified": cand.simplified,
                "branch_parts": [p.as_lists() for p in cand.branch_parts],
            }
        return doc

    @classmethod
    def from_snapshot(cls, doc: dict) -> "DelineationSession":
        from . import geojson_io

        session = cls(network=geojson_io.feature_collection_to_network(doc["network"]))
        for feature in doc.get("accepted", {}).get("features", []):
            props = feature["properties"]
            session.accepted.append(AcceptedLine(
                geometry=Polyline(np.asarray(feature["geometry"]["coordinates"],
                                             dtype=np.float64)),
                sinuosity=float(props["sinuosity"]),
                color=str(props["color"]),
                simplified=bool(props["simplified"]),
                accepted_order=int(props["accepted_order"]),
            ))
        session.accepted.sort(key=lambda e: e.accepted_order)
        session.suggested_next_node = doc.get("suggested_next_node")
        raw = doc.get("candidate")
        if raw is not None:
            session.candidate = CandidateLine(
                geometry=Polyline(np.asarray(raw["geometry"], dtype=np.float64)),
                terminals=list(raw["terminals"]),
                sinuosity=float(raw["sinuosity"]),
                color=str(raw["color"]),
                simplified=bool(raw["simplified"]),
                branch_parts=[Polyline(np.asarray(c, dtype=np.float64))
                              for c in raw.get("branch_parts", [])],
            )
        return session
