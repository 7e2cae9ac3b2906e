"""HTTP JSON API for automatic extraction and interactive delineation.

Sessions are created from a georeferenced image, processed in a background
worker (the automatic stage takes a while on real orthoimages), and then
edited through candidate-line endpoints. Every mutation is serialized per
session and snapshotted to disk, so a restarted service picks up where it
left off.
"""

from __future__ import annotations

import json
import os
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from fastapi import Body, FastAPI, HTTPException
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .assessment import (
    AssessmentConfig,
    confusion_series,
    grid_for_layers,
    rasterize_lines,
    report_json,
)
from .contours import CueParams
from .delineation import DelineationSession
from .errors import (
    BoundlineError,
    NoPathError,
    ParameterError,
    SessionStateError,
    UnknownNodeError,
)
from .geojson_io import (
    feature_collection_to_polylines,
    network_to_feature_collection,
)
from .geometry import Polyline
from .pipeline import StepOneParams, run_step_one
from .raster import GeoTransform, load_image
from .superpixels import SlicParams

__all__ = ["create_app"]

_STEP_KEYS = {"cue", "slic", "threshold", "spectral", "max_dim",
              "buffer_radius_m", "snap_tol_m", "min_dangle_m"}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class SessionEntry:
    """In-memory session state plus its exclusive mutation guard."""

    def __init__(self, session_id: str, image: str, worldfile: str,
                 params_raw: dict):
        self.session_id = session_id
        self.image = image
        self.worldfile = worldfile
        self.params_raw = params_raw
        self.status = "processing"
        self.error: str | None = None
        self.session: DelineationSession | None = None
        self.lock = threading.Lock()
        self.created = _now()
        self.updated = self.created


def _persist(data_dir: Path, entry: SessionEntry) -> None:
    doc = {
        "session_id": entry.session_id,
        "status": entry.status,
        "error": entry.error,
        "created": entry.created,
        "updated": entry.updated,
        "image": entry.image,
        "worldfile": entry.worldfile,
        "params": entry.params_raw,
        "session": (entry.session.to_snapshot()
                    if entry.session is not None else None),
    }
    path = data_dir / f"{entry.session_id}.json"
    tmp = path.with_suffix(".json.tmp")
    tmp.write_text(json.dumps(doc, sort_keys=True) + "\n", encoding="utf-8")
    tmp.replace(path)


def _load_sessions(data_dir: Path) -> dict[str, SessionEntry]:
    sessions: dict[str, SessionEntry] = {}
    for path in sorted(data_dir.glob("*.json")):
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            continue
        session_id = doc.get("session_id") or path.stem
        entry = SessionEntry(session_id, doc.get("image", ""),
                             doc.get("worldfile", ""),
                             doc.get("params") or {})
        entry.status = doc.get("status", "failed")
        entry.error = doc.get("error")
        entry.created = doc.get("created", entry.created)
        entry.updated = doc.get("updated", entry.updated)
        if doc.get("session") is not None:
            entry.session = DelineationSession.from_snapshot(doc["session"])
        if entry.status == "processing":
            # a snapshot mid-processing means the worker died with it
            entry.status = "failed"
            entry.error = "processing interrupted by service restart"
        sessions[session_id] = entry
    return sessions


def _cue_params(raw: dict) -> CueParams:
    data = dict(raw)
    for key in ("radii", "global_weights"):
        if isinstance(data.get(key), list):
            data[key] = tuple(data[key])
    if isinstance(data.get("channel_weights"), list):
        data["channel_weights"] = tuple(
            tuple(row) for row in data["channel_weights"])
    try:
        return CueParams(**data)
    except TypeError as err:
        raise ParameterError(f"bad contour parameters: {err}") from err


def _slic_params(raw: dict) -> SlicParams:
    try:
        return SlicParams(**raw)
    except TypeError as err:
        raise ParameterError(f"bad superpixel parameters: {err}") from err


def _step_params(raw) -> StepOneParams:
    if not isinstance(raw, dict):
        raise ParameterError("params must be a JSON object")
    unknown = set(raw) - _STEP_KEYS
    if unknown:
        raise ParameterError(
            f"unknown parameter(s): {', '.join(sorted(unknown))}")
    kwargs = {k: v for k, v in raw.items() if k not in ("cue", "slic")}
    try:
        return StepOneParams(
            cue=_cue_params(raw["cue"]) if "cue" in raw else None,
            slic_params=_slic_params(raw["slic"]) if "slic" in raw else None,
            **kwargs)
    except TypeError as err:
        raise ParameterError(f"bad parameters: {err}") from err


def _candidate_json(cand) -> dict:
    return {
        "geometry": {"type": "LineString",
                     "coordinates": cand.geometry.as_lists()},
        "terminals": list(cand.terminals),
        "sinuosity": float(cand.sinuosity),
        "color": cand.color.lower(),
        "simplified": bool(cand.simplified),
        "branch_parts": [p.as_lists() for p in cand.branch_parts],
    }


def _session_summary(entry: SessionEntry) -> dict:
    doc = {
        "session_id": entry.session_id,
        "status": entry.status,
        "error": entry.error,
        "created": entry.created,
        "updated": entry.updated,
    }
    if entry.session is not None:
        doc["accepted_count"] = len(entry.session.accepted)
        doc["suggested_next_node"] = entry.session.suggested_next_node
        doc["has_candidate"] = entry.session.candidate is not None
    return doc


def _line_string(payload) -> Polyline:
    geometry = payload.get("geometry", payload) if isinstance(payload, dict) \
        else None
    if not isinstance(geometry, dict) or \
            geometry.get("type") != "LineString":
        raise ParameterError("geometry must be a GeoJSON LineString")
    try:
        coords = np.asarray(geometry.get("coordinates"), dtype=np.float64)
    except (TypeError, ValueError) as err:
        raise ParameterError(f"bad LineString coordinates: {err}") from err
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise ParameterError("LineString coordinates must be [x, y] pairs")
    return Polyline(coords)


def _assess_grid(spec: dict, gsd: float) -> AssessmentConfig:
    try:
        transform = GeoTransform(origin_x=float(spec["origin_x"]),
                                 origin_y=float(spec["origin_y"]),
                                 pixel_size_x=gsd, pixel_size_y=-gsd)
        width = int(spec["width"])
        height = int(spec["height"])
    except (KeyError, TypeError, ValueError) as err:
        raise ParameterError(f"bad grid spec: {err}") from err
    return AssessmentConfig(transform=transform, width=width, height=height)


def create_app(data_dir=None) -> FastAPI:
    """Build the service around a session storage directory.

    The directory defaults to $BOUNDLINE_DATA_DIR, then ./boundline_data.
    Existing session snapshots are loaded on startup.
    """
    root = Path(data_dir or os.environ.get("BOUNDLINE_DATA_DIR")
                or "boundline_data")
    root.mkdir(parents=True, exist_ok=True)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        app.state.executor.shutdown(wait=False, cancel_futures=True)

    app = FastAPI(title="boundline", lifespan=lifespan)
    # the browser client may be served from any static host
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    app.state.data_dir = root
    app.state.sessions = _load_sessions(root)
    app.state.executor = ThreadPoolExecutor(max_workers=2)

    def _error_response(status: int):
        def handler(request, exc):
            return JSONResponse({"detail": str(exc)}, status_code=status)
        return handler

    app.add_exception_handler(ParameterError, _error_response(400))
    app.add_exception_handler(UnknownNodeError, _error_response(404))
    app.add_exception_handler(NoPathError, _error_response(422))
    app.add_exception_handler(SessionStateError, _error_response(409))
    app.add_exception_handler(BoundlineError, _error_response(400))
    app.add_exception_handler(RequestValidationError, _error_response(400))

    def _entry(session_id: str) -> SessionEntry:
        entry = app.state.sessions.get(session_id)
        if entry is None:
            raise HTTPException(404, detail=f"unknown session: {session_id}")
        return entry

    def _ready_entry(session_id: str) -> SessionEntry:
        entry = _entry(session_id)
        if entry.status == "processing":
            raise HTTPException(409, detail="session is still processing")
        if entry.status != "ready":
            raise HTTPException(409, detail=f"session failed: {entry.error}")
        return entry

    def _run_pipeline(session_id: str, params: StepOneParams) -> None:
        entry = app.state.sessions[session_id]
        try:
            grid = load_image(entry.image, entry.worldfile)
            result = run_step_one(grid, params)
            with entry.lock:
                entry.session = DelineationSession(network=result.network)
                entry.status = "ready"
                entry.updated = _now()
                _persist(root, entry)
        except Exception as err:  # noqa: BLE001 - reported via status
            with entry.lock:
                entry.status = "failed"
                entry.error = str(err)
                entry.updated = _now()
                _persist(root, entry)

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/sessions", status_code=202)
    def create_session(payload: dict = Body(...)):
        image = payload.get("image")
        if not isinstance(image, str) or not image:
            raise ParameterError("an image path is required")
        image_path = Path(image)
        if not image_path.exists():
            raise HTTPException(404, detail=f"image not found: {image}")
        worldfile = payload.get("worldfile")
        if worldfile is None:
            worldfile = str(image_path.with_suffix(".pgw"))
        if not Path(worldfile).exists():
            raise HTTPException(404, detail=f"world file not found: {worldfile}")
        params_raw = payload.get("params") or {}
        params = _step_params(params_raw)

        session_id = uuid.uuid4().hex
        entry = SessionEntry(session_id, str(image_path), str(worldfile),
                             params_raw)
        app.state.sessions[session_id] = entry
        _persist(root, entry)
        app.state.executor.submit(_run_pipeline, session_id, params)
        return {"session_id": session_id, "status": "processing",
                "status_url": f"/sessions/{session_id}"}

    @app.get("/sessions/{session_id}")
    def session_status(session_id: str):
        return _session_summary(_entry(session_id))

    @app.get("/sessions/{session_id}/network")
    def session_network(session_id: str):
        entry = _ready_entry(session_id)
        with entry.lock:
            return network_to_feature_collection(entry.session.network)

    @app.post("/sessions/{session_id}/candidate")
    def start_candidate(session_id: str, payload: dict = Body(...)):
        node_ids = payload.get("node_ids")
        if not isinstance(node_ids, list) or len(node_ids) < 2 or \
                not all(isinstance(n, str) for n in node_ids):
            raise ParameterError("node_ids must list at least 2 node ids")
        replace = bool(payload.get("replace", False))
        entry = _ready_entry(session_id)
        with entry.lock:
            cand = entry.session.start_candidate(node_ids, replace=replace)
            entry.updated = _now()
            _persist(root, entry)
            return _candidate_json(cand)

    @app.post("/sessions/{session_id}/candidate/simplify")
    def simplify_candidate(session_id: str, payload: dict = Body(...)):
        tolerance = payload.get("tolerance_m")
        if not isinstance(tolerance, (int, float)) or \
                isinstance(tolerance, bool):
            raise ParameterError("tolerance_m must be a number")
        entry = _ready_entry(session_id)
        with entry.lock:
            cand = entry.session.simplify_candidate(float(tolerance))
            entry.updated = _now()
            _persist(root, entry)
            return _candidate_json(cand)

    @app.put("/sessions/{session_id}/candidate/geometry")
    def replace_candidate_geometry(session_id: str, payload: dict = Body(...)):
        line = _line_string(payload)
        entry = _ready_entry(session_id)
        with entry.lock:
            cand = entry.session.replace_candidate_geometry(line)
            entry.updated = _now()
            _persist(root, entry)
            return _candidate_json(cand)

    @app.post("/sessions/{session_id}/candidate/accept")
    def accept_candidate(session_id: str):
        entry = _ready_entry(session_id)
        with entry.lock:
            added = entry.session.accept_candidate()
            entry.updated = _now()
            _persist(root, entry)
            return {
                "accepted_count": len(entry.session.accepted),
                "added": len(added),
                "suggested_next_node": entry.session.suggested_next_node,
            }

    @app.delete("/sessions/{session_id}/candidate")
    def delete_candidate(session_id: str):
        entry = _ready_entry(session_id)
        with entry.lock:
            entry.session.delete_candidate()
            entry.updated = _now()
            _persist(root, entry)
            return _session_summary(entry)

    @app.get("/sessions/{session_id}/boundaries")
    def session_boundaries(session_id: str):
        entry = _ready_entry(session_id)
        with entry.lock:
            doc = entry.session.export_boundaries()
        for feature in doc["features"]:
            feature["properties"]["color"] = \
                feature["properties"]["color"].lower()
        return doc

    @app.post("/assess")
    def assess(payload: dict = Body(...)):
        for key in ("delineated", "reference"):
            if not isinstance(payload.get(key), dict):
                raise ParameterError(f"{key} must be a GeoJSON "
                                     "FeatureCollection")
        gsd = payload.get("gsd")
        if not isinstance(gsd, (int, float)) or isinstance(gsd, bool) or \
                gsd <= 0:
            raise ParameterError("gsd must be a positive number")
        gsd = float(gsd)

        delineated = feature_collection_to_polylines(payload["delineated"])
        reference = feature_collection_to_polylines(payload["reference"],
                                                    skip_non_exact=True)
        del_grid = payload.get("delineated_grid")
        ref_grid = payload.get("reference_grid")
        if del_grid is not None and ref_grid is not None and \
                del_grid != ref_grid:
            raise ParameterError(
                "delineated and reference grids differ; assessment needs "
                "one shared grid")
        distances = payload.get("bands")
        extra = {}
        if distances is not None:
            if not isinstance(distances, list):
                raise ParameterError("bands must be a list of distances")
            extra["distances"] = tuple(distances)

        spec = del_grid if del_grid is not None else ref_grid
        if spec is not None:
            base = _assess_grid(spec, gsd)
            cfg = AssessmentConfig(transform=base.transform, width=base.width,
                                   height=base.height, **extra)
        else:
            transform, width, height = grid_for_layers(
                [delineated, reference], gsd)
            cfg = AssessmentConfig(transform=transform, width=width,
                                   height=height, **extra)

        del_raster = rasterize_lines(delineated, cfg.transform, cfg.width,
                                     cfg.height)
        ref_raster = rasterize_lines(reference, cfg.transform, cfg.width,
                                     cfg.height)
        series = confusion_series(del_raster, ref_raster, cfg)
        return report_json(series)

    return app
