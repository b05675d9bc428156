"""HTTP/JSON session service for the workbench UI and scripts.

Sessions are in-memory; each one serializes its events under a lock, appends
accepted events to a JSON-lines log (replayable via session.replay), and
exposes full state snapshots for polling. Rejected events map to 409 with the
reason, malformed events to 422, unknown ids to 404. MarkerUpdate posts are
capped at 30 events/s per session (429 beyond).

Besides the canonical session events, the service accepts an `acquire_aim`
event carrying a view ray: the server runs the scenario's noise-model
acquisition at the ray's surface hit and dispatches the resulting canonical
Acquire, so browser clicks and scripted sessions share one code path and the
log stays replayable.
"""

from __future__ import annotations

import itertools
import secrets
import tempfile
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse, Response

from .acquisition import acquire_landmark
from .errors import NotVisible, RejectedEvent, VentronavError
from .geometry import Ray, look_at_pose, ray_mesh_intersect
from .io.phantom import generate_phantom
from .io.scenario import Scenario
from .session import (
    Acquire,
    EffectReport,
    Phase,
    SessionContext,
    SessionState,
    dispatch,
    event_from_dict,
    log_to_jsonl,
    new_session,
)

MARKER_RATE_LIMIT_PER_S = 30


@dataclass
class _SessionRecord:
    id: str
    scenario_id: str
    scenario: Scenario
    ctx: SessionContext
    state: SessionState
    rng: np.random.Generator
    created_at: str
    log: list = field(default_factory=list)
    event_counter: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)
    marker_times: deque = field(default_factory=deque)


class _Registry:
    def __init__(self, scenarios: dict[str, Scenario]):
        self.scenarios = scenarios
        self.contexts: dict[str, SessionContext] = {}
        self.sessions: dict[str, _SessionRecord] = {}
        self.lock = threading.Lock()
        self.session_counter = itertools.count()

    def context_for(self, scenario_id: str) -> SessionContext:
        # scenes are expensive to build; share one per scenario
        if scenario_id not in self.contexts:
            self.contexts[scenario_id] = self.scenarios[scenario_id].build_context()
        return self.contexts[scenario_id]


def _snapshot(rec: _SessionRecord) -> dict:
    state = rec.state
    ctx = rec.ctx
    reg = state.registration
    tre = None
    target_world = None
    if reg is not None and ctx.planned_entry_model is not None:
        from .guidance import compute_tre

        tre = compute_tre(reg, ctx.planned_entry_model, ctx.true_entry_world())
    if reg is not None and ctx.planned_target_model is not None:
        target_world = reg.transform.apply(ctx.planned_target_model).tolist()
    return {
        "id": rec.id,
        "scenario": rec.scenario_id,
        "created_at": rec.created_at,
        "event_counter": rec.event_counter,
        "phase": state.phase.value,
        "current_landmark": state.current.value if state.phase is Phase.LANDMARKING else None,
        "current_landmark_display": (state.current.display_name
                                     if state.phase is Phase.LANDMARKING else None),
        "pick_counts": {lid.value: n for lid, n in state.pick_counts().items()},
        "picks": {lid.value: [p.tolist() for p in pts]
                  for lid, pts in state.picks.items()},
        "rmse_mm": None if reg is None else reg.rmse,
        "scale": None if reg is None else reg.transform.scale,
        "residuals_mm": None if reg is None else
        {lid.value: r for lid, r in reg.residuals.items()},
        "condition": None if reg is None or reg.condition is None else reg.condition.to_dict(),
        "registration": None if reg is None else reg.transform.to_dict(),
        "tre_mm": tre,
        "planned_target_world": target_world,
        "entry": None if state.entry is None else state.entry.to_dict(),
        "tip_feedback": None if state.last_tip_feedback is None
        else state.last_tip_feedback.to_dict(),
    }


def _mesh_payload(mesh, space: str) -> dict:
    return {
        "space": space,
        "positions": np.asarray(mesh.vertices, dtype=float).ravel().tolist(),
        "indices": np.asarray(mesh.triangles).ravel().tolist(),
    }


def _translate_acquire_aim(rec: _SessionRecord, body: dict) -> Acquire:
    """Server-side acquisition for a workbench view ray."""
    if rec.state.phase is not Phase.LANDMARKING:
        raise RejectedEvent("acquire is only available while landmarking")
    ray = Ray.from_dict(body["ray"])
    scene = rec.ctx.scene
    hit = ray_mesh_intersect(ray, scene.head_mesh)
    if hit is None:
        raise RejectedEvent("aim ray misses the head surface")
    pose = look_at_pose(eye=ray.origin, target=hit.point)
    sample = acquire_landmark(scene, pose, rec.scenario.camera, rec.state.current,
                              rec.scenario.noise, rec.rng)
    return Acquire(point=sample.point)


def create_app(scenarios: dict[str, Scenario]) -> FastAPI:
    app = FastAPI(title="ventronav session service")
    registry = _Registry(scenarios)
    app.state.registry = registry

    def _not_found(what: str) -> JSONResponse:
        return JSONResponse({"detail": f"unknown {what}"}, status_code=404)

    @app.get("/scenarios")
    def list_scenarios():
        out = []
        for sid, sc in registry.scenarios.items():
            ctx = registry.context_for(sid)
            out.append({
                "id": sid,
                "name": sc.name,
                "landmarks": [lid.value for lid in sc.model_landmarks.ids()],
                "landmark_display_names": [lid.display_name
                                           for lid in sc.model_landmarks.ids()],
                # guide positions on the simulated patient: the workbench shows
                # these the way a clinician sees the phantom's anatomy
                "true_world_landmarks": {
                    lid.value: p.tolist()
                    for lid, p in ctx.scene.true_world_landmarks.points.items()},
                "catheter_offset": sc.catheter_offset.tolist(),
                "has_planned_entry": sc.planned_entry_model is not None,
                "metadata": sc.metadata,
            })
        return out

    @app.get("/scenarios/{scenario_id}/meshes/{which}")
    def get_mesh(scenario_id: str, which: str):
        if scenario_id not in registry.scenarios:
            return _not_found("scenario")
        if which not in ("head", "ventricles"):
            return _not_found("mesh")
        ctx = registry.context_for(scenario_id)
        if which == "head":
            return _mesh_payload(ctx.scene.head_mesh, "world")
        return _mesh_payload(ctx.scene.ventricle_mesh, "model")

    @app.post("/sessions", status_code=201)
    def create_session(request: Request, body: dict):
        scenario_id = body.get("scenario")
        if scenario_id not in registry.scenarios:
            return _not_found("scenario")
        with registry.lock:
            index = next(registry.session_counter)
            sid = f"s{index}-{secrets.token_hex(4)}"
            scenario = registry.scenarios[scenario_id]
            ctx = registry.context_for(scenario_id)
            rec = _SessionRecord(
                id=sid,
                scenario_id=scenario_id,
                scenario=scenario,
                ctx=ctx,
                state=new_session(ctx),
                rng=np.random.default_rng(np.random.SeedSequence((scenario.seed, index))),
                created_at=datetime.now(timezone.utc).isoformat(),
            )
            registry.sessions[sid] = rec
        return _snapshot(rec)

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        rec = registry.sessions.get(sid)
        if rec is None:
            return _not_found("session")
        with rec.lock:
            return _snapshot(rec)

    @app.post("/sessions/{sid}/events")
    def post_event(sid: str, body: dict):
        rec = registry.sessions.get(sid)
        if rec is None:
            return _not_found("session")
        kind = body.get("type")
        if not isinstance(kind, str):
            return JSONResponse({"detail": "event needs a string 'type'"}, status_code=422)

        with rec.lock:
            if kind == "marker_update":
                now = time.monotonic()
                while rec.marker_times and now - rec.marker_times[0] > 1.0:
                    rec.marker_times.popleft()
                if len(rec.marker_times) >= MARKER_RATE_LIMIT_PER_S:
                    return JSONResponse(
                        {"detail": f"marker updates capped at {MARKER_RATE_LIMIT_PER_S}/s"},
                        status_code=429)
                rec.marker_times.append(now)
            try:
                if kind == "acquire_aim":
                    event = _translate_acquire_aim(rec, body)
                else:
                    event = event_from_dict(body)
            except RejectedEvent as exc:
                return JSONResponse({"detail": exc.reason}, status_code=409)
            except NotVisible as exc:
                return JSONResponse({"detail": str(exc)}, status_code=409)
            except (KeyError, ValueError, TypeError) as exc:
                return JSONResponse({"detail": f"malformed event: {exc}"}, status_code=422)

            try:
                new_state, report = dispatch(rec.ctx, rec.state, event)
            except RejectedEvent as exc:
                return JSONResponse({"detail": exc.reason}, status_code=409)
            except VentronavError as exc:  # defensive: reject rather than 500
                return JSONResponse({"detail": str(exc)}, status_code=409)
            rec.state = new_state
            rec.log.append(event)
            rec.event_counter += 1
            return {"snapshot": _snapshot(rec), "report": _report_dict(report)}

    @app.get("/sessions/{sid}/log")
    def get_log(sid: str):
        rec = registry.sessions.get(sid)
        if rec is None:
            return _not_found("session")
        with rec.lock:
            return PlainTextResponse(log_to_jsonl(rec.log),
                                     media_type="application/x-ndjson")

    @app.delete("/sessions/{sid}", status_code=204)
    def delete_session(sid: str):
        with registry.lock:
            if registry.sessions.pop(sid, None) is None:
                return _not_found("session")
        return Response(status_code=204)

    return app


def _report_dict(report: EffectReport) -> dict:
    return report.to_dict()


_DEFAULT_DIR: Path | None = None


def default_scenarios() -> dict[str, Scenario]:
    """The shipped synthetic phantom, generated deterministically on demand."""
    global _DEFAULT_DIR
    if _DEFAULT_DIR is None:
        _DEFAULT_DIR = Path(tempfile.mkdtemp(prefix="ventronav-default-"))
        generate_phantom(_DEFAULT_DIR)
    return {"default": Scenario.load(_DEFAULT_DIR / "scenario.json")}


def create_default_app(extra_scenarios=()) -> FastAPI:
    scenarios = default_scenarios()
    for path in extra_scenarios:
        sc = Scenario.load(path)
        scenarios[Path(path).stem] = sc
    return create_app(scenarios)
