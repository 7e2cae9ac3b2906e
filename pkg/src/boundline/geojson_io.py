"""GeoJSON serialization for polyline layers and line networks.

Output is deterministic: sorted object keys, stable feature ordering, and
repr-exact floats so a rerun produces byte-identical files.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ParameterError
from .geometry import Polyline


def polylines_to_feature_collection(lines, properties=None) -> dict:
    """Wrap polylines as LineString features.

    Args:
        lines: iterable of Polyline.
        properties: optional callable line -> dict of feature properties.
    """
    features = []
    for i, line in enumerate(lines):
        props = {"id": line.id if line.id is not None else f"l{i}"}
        if properties is not None:
            props.update(properties(line))
        features.append({
            "type": "Feature",
            "geometry": {"type": "LineString", "coordinates": line.as_lists()},
            "properties": props,
        })
    return {"type": "FeatureCollection", "features": features}


def feature_collection_to_polylines(doc: dict, skip_non_exact: bool = False) -> list[Polyline]:
    """Read LineString features back into polylines.

    Features carrying the property exact=false are reference outlines that
    cannot be localized precisely; skip_non_exact drops them.
    """
    if doc.get("type") != "FeatureCollection":
        raise ParameterError("expected a GeoJSON FeatureCollection")
    lines = []
    for feature in doc.get("features", []):
        geometry = feature.get("geometry") or {}
        props = feature.get("properties") or {}
        if skip_non_exact and props.get("exact") is False:
            continue
        gtype = geometry.get("type")
        if gtype == "LineString":
            parts = [geometry.get("coordinates", [])]
        elif gtype == "MultiLineString":
            parts = geometry.get("coordinates", [])
        else:
            continue
        for j, coordinates in enumerate(parts):
            if len(coordinates) < 2:
                continue
            base = props.get("id", f"f{len(lines)}")
            line_id = str(base) if gtype == "LineString" else f"{base}.{j}"
            lines.append(Polyline(np.asarray(coordinates, dtype=np.float64), id=line_id))
    return lines


def network_to_feature_collection(net) -> dict:
    """Nodes as Point features, edges as LineString features."""
    features = []
    for node_id in sorted(net.nodes):
        x, y = net.nodes[node_id]
        features.append({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [float(x), float(y)]},
            "properties": {"node_id": node_id},
        })
    for edge_id in sorted(net.edges):
        edge = net.edges[edge_id]
        features.append({
            "type": "Feature",
            "geometry": {"type": "LineString",
                         "coordinates": [[float(x), float(y)] for x, y in edge.coords]},
            "properties": {"edge_id": edge_id, "node_a": edge.node_a,
                           "node_b": edge.node_b, "length_m": float(edge.length)},
        })
    return {"type": "FeatureCollection", "features": features}


def feature_collection_to_network(doc: dict):
    """Rebuild a LineNetwork from its exported FeatureCollection."""
    from .vectornet import LineNetwork, NetworkEdge

    if doc.get("type") != "FeatureCollection":
        raise ParameterError("expected a GeoJSON FeatureCollection")
    nodes: dict[str, tuple[float, float]] = {}
    edges: dict[str, NetworkEdge] = {}
    for feature in doc.get("features", []):
        geometry = feature.get("geometry") or {}
        props = feature.get("properties") or {}
        if geometry.get("type") == "Point" and "node_id" in props:
            x, y = geometry["coordinates"]
            nodes[str(props["node_id"])] = (float(x), float(y))
        elif geometry.get("type") == "LineString" and "edge_id" in props:
            coords = np.asarray(geometry["coordinates"], dtype=np.float64)
            edges[str(props["edge_id"])] = NetworkEdge(
                node_a=str(props["node_a"]), node_b=str(props["node_b"]),
                coords=coords, length=float(props["length_m"]))
    return LineNetwork(nodes=nodes, edges=edges)


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def dump(doc: dict, path) -> None:
    Path(path).write_text(dumps(doc) + "\n")


def load(path) -> dict:
    return json.loads(Path(path).read_text())
