"""Workflow state machine for the guided clinical session.

Phases mirror the app flow: guided landmark placement (acquire / delete /
next / back), a registration preview that can be re-done before confirming,
entry-point placement, then catheter tracking with live tip feedback. Reset
returns to the initial state from anywhere. Every event either performs a
legal transition or raises RejectedEvent leaving the state untouched.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .acquisition import VirtualScene
from .errors import (
    DegenerateConfiguration,
    IncompleteCorrespondence,
    NoSurfaceHit,
    RejectedEvent,
    ScaleOutOfBounds,
    WrongPhase,
)
from .geometry import MarkerPose, Ray, TriangleMesh
from .guidance import (
    CatheterModel,
    EntryPoint,
    TipFeedback,
    TrajectoryPlan,
    catheter_tip,
    compute_tre,
    place_entry_point,
    tip_feedback,
)
from .landmarks import LANDMARK_ORDER, LandmarkId, LandmarkSet
from .registration import RegistrationResult, aggregate_repeated_picks, estimate_similarity


class Phase(str, Enum):
    LANDMARKING = "landmarking"
    REGISTERED = "registered"  # preview: re-selection still possible
    ENTRY_POINT = "entry_point"
    CATHETER_TRACKING = "catheter_tracking"


# events

@dataclass(frozen=True)
class Acquire:
    point: np.ndarray
    type: str = field(default="acquire", init=False)


@dataclass(frozen=True)
class Delete:
    type: str = field(default="delete", init=False)


@dataclass(frozen=True)
class Next:
    type: str = field(default="next", init=False)


@dataclass(frozen=True)
class Back:
    type: str = field(default="back", init=False)


@dataclass(frozen=True)
class Register:
    type: str = field(default="register", init=False)


@dataclass(frozen=True)
class Confirm:
    type: str = field(default="confirm", init=False)


@dataclass(frozen=True)
class PlaceEntry:
    ray: Ray
    type: str = field(default="place_entry", init=False)


@dataclass(frozen=True)
class DeleteEntry:
    type: str = field(default="delete_entry", init=False)


@dataclass(frozen=True)
class MarkerUpdate:
    pose: MarkerPose
    type: str = field(default="marker_update", init=False)


@dataclass(frozen=True)
class Reset:
    type: str = field(default="reset", init=False)


SessionEvent = (Acquire | Delete | Next | Back | Register | Confirm
                | PlaceEntry | DeleteEntry | MarkerUpdate | Reset)


def event_to_dict(event: SessionEvent) -> dict:
    d: dict = {"type": event.type}
    if isinstance(event, Acquire):
        d["point"] = np.asarray(event.point, dtype=float).tolist()
    elif isinstance(event, PlaceEntry):
        d["ray"] = event.ray.to_dict()
    elif isinstance(event, MarkerUpdate):
        d["pose"] = event.pose.to_dict()
    return d


def event_from_dict(d: dict) -> SessionEvent:
    kind = d.get("type")
    if kind == "acquire":
        return Acquire(point=np.asarray(d["point"], dtype=float))
    if kind == "delete":
        return Delete()
    if kind == "next":
        return Next()
    if kind == "back":
        return Back()
    if kind == "register":
        return Register()
    if kind == "confirm":
        return Confirm()
    if kind == "place_entry":
        return PlaceEntry(ray=Ray.from_dict(d["ray"]))
    if kind == "delete_entry":
        return DeleteEntry()
    if kind == "marker_update":
        return MarkerUpdate(pose=MarkerPose.from_dict(d["pose"]))
    if kind == "reset":
        return Reset()
    raise ValueError(f"unknown event type {kind!r}")


@dataclass
class SessionContext:
    """Scenario-derived data the state machine needs; immutable in use."""

    scene: VirtualScene
    planned_entry_model: np.ndarray | None = None
    planned_target_model: np.ndarray | None = None
    catheter: CatheterModel | None = None
    scale_mode: str = "estimated"
    scale_bounds: tuple[float, float] = (0.9, 1.1)

    def __post_init__(self):
        self._ventricle_memo: tuple[int, TriangleMesh] | None = None

    def registered_ventricles(self, reg: RegistrationResult) -> TriangleMesh:
        """Ventricle mesh posed by the fitted transform, memoized per result."""
        key = id(reg.transform)
        if self._ventricle_memo is None or self._ventricle_memo[0] != key:
            mesh = self.scene.ventricle_mesh.transformed(reg.transform)
            self._ventricle_memo = (key, mesh)
        return self._ventricle_memo[1]

    def true_entry_world(self) -> np.ndarray | None:
        if self.planned_entry_model is None:
            return None
        return self.scene.model_to_world_truth.apply(self.planned_entry_model)


@dataclass(frozen=True)
class SessionState:
    phase: Phase = Phase.LANDMARKING
    current: LandmarkId = LANDMARK_ORDER[0]
    picks: dict[LandmarkId, tuple[np.ndarray, ...]] = field(default_factory=dict)
    registration: RegistrationResult | None = None
    entry: EntryPoint | None = None
    last_tip_feedback: TipFeedback | None = None

    def pick_counts(self) -> dict[LandmarkId, int]:
        return {lid: len(self.picks.get(lid, ())) for lid in LANDMARK_ORDER}

    def all_landmarks_picked(self) -> bool:
        return all(len(self.picks.get(lid, ())) >= 1 for lid in LANDMARK_ORDER)


@dataclass(frozen=True)
class EffectReport:
    """What an accepted event changed, for display and logging."""

    event: str
    phase: Phase
    current: LandmarkId | None = None
    rmse: float | None = None
    scale: float | None = None
    tre: float | None = None
    feedback: TipFeedback | None = None
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "event": self.event,
            "phase": self.phase.value,
            "current_landmark": self.current.value if self.current else None,
            "rmse_mm": self.rmse,
            "scale": self.scale,
            "tre_mm": self.tre,
            "tip_feedback": self.feedback.to_dict() if self.feedback else None,
            "message": self.message,
        }


def new_session(ctx: SessionContext) -> SessionState:
    """Fresh session: landmarking at the first landmark, the right tragus."""
    del ctx  # scenario is referenced at dispatch time only
    return SessionState()


def _session_tre(ctx: SessionContext, reg: RegistrationResult | None) -> float | None:
    true_world = ctx.true_entry_world()
    if reg is None or true_world is None:
        return None
    return compute_tre(reg, ctx.planned_entry_model, true_world)


def dispatch(ctx: SessionContext, state: SessionState,
             event: SessionEvent) -> tuple[SessionState, EffectReport]:
    """Apply one event. Raises RejectedEvent (state unchanged) when the event
    is not applicable in the current phase."""
    if isinstance(event, Reset):
        fresh = SessionState()
        return fresh, EffectReport(event.type, fresh.phase, fresh.current,
                                   message="session reset")

    phase = state.phase

    if isinstance(event, Acquire):
        if phase is not Phase.LANDMARKING:
            raise RejectedEvent("acquire is only available while landmarking")
        point = np.asarray(event.point, dtype=float)
        if point.shape != (3,) or not np.all(np.isfinite(point)):
            raise RejectedEvent("acquire needs a finite 3D point")
        picks = dict(state.picks)
        picks[state.current] = picks.get(state.current, ()) + (point,)
        new = replace(state, picks=picks)
        return new, EffectReport(event.type, new.phase, new.current,
                                 message=f"pick {len(picks[state.current])} for "
                                         f"{state.current.display_name}")

    if isinstance(event, Delete):
        if phase is not Phase.LANDMARKING:
            raise RejectedEvent("delete is only available while landmarking")
        picks = dict(state.picks)
        picks.pop(state.current, None)
        new = replace(state, picks=picks)
        return new, EffectReport(event.type, new.phase, new.current,
                                 message=f"cleared picks for {state.current.display_name}")

    if isinstance(event, Next):
        if phase is Phase.LANDMARKING:
            idx = LANDMARK_ORDER.index(state.current)
            nxt = LANDMARK_ORDER[min(idx + 1, len(LANDMARK_ORDER) - 1)]  # saturate
            new = replace(state, current=nxt)
            return new, EffectReport(event.type, new.phase, new.current)
        if phase is Phase.ENTRY_POINT:
            if state.entry is None:
                raise RejectedEvent("place an entry point before moving on")
            new = replace(state, phase=Phase.CATHETER_TRACKING)
            return new, EffectReport(event.type, new.phase,
                                     tre=_session_tre(ctx, state.registration),
                                     message="catheter tracking")
        raise RejectedEvent(f"next is not available in phase {phase.value}")

    if isinstance(event, Back):
        if phase is Phase.LANDMARKING:
            idx = LANDMARK_ORDER.index(state.current)
            prev = LANDMARK_ORDER[max(idx - 1, 0)]  # saturate
            new = replace(state, current=prev)
            return new, EffectReport(event.type, new.phase, new.current)
        if phase is Phase.REGISTERED:
            # navigate back into landmarking to re-select picks
            new = re_register(ctx, state)
            return new, EffectReport(event.type, new.phase, new.current,
                                     message="re-selecting landmarks")
        if phase is Phase.CATHETER_TRACKING:
            new = replace(state, phase=Phase.ENTRY_POINT, last_tip_feedback=None)
            return new, EffectReport(event.type, new.phase,
                                     tre=_session_tre(ctx, state.registration))
        raise RejectedEvent("registration is confirmed; use reset to start over")

    if isinstance(event, Register):
        if phase is not Phase.LANDMARKING:
            raise RejectedEvent("register is only available while landmarking")
        if not state.all_landmarks_picked():
            missing = [lid.display_name for lid in LANDMARK_ORDER
                       if not state.picks.get(lid)]
            raise RejectedEvent(f"all seven landmarks need picks; missing {missing}")
        centroids = {lid: aggregate_repeated_picks(state.picks[lid])[0]
                     for lid in LANDMARK_ORDER}
        world = LandmarkSet(space="world", points=centroids)
        try:
            reg = estimate_similarity(ctx.scene.model_landmarks, world,
                                      ctx.scale_mode, ctx.scale_bounds)
        except (DegenerateConfiguration, ScaleOutOfBounds, IncompleteCorrespondence) as exc:
            raise RejectedEvent(f"registration failed: {exc}") from exc
        new = replace(state, phase=Phase.REGISTERED, registration=reg)
        return new, EffectReport(event.type, new.phase, rmse=reg.rmse,
                                 scale=reg.transform.scale,
                                 message=f"registered, RMSE {reg.rmse:.2f} mm")

    if isinstance(event, Confirm):
        if phase is not Phase.REGISTERED:
            raise RejectedEvent("confirm is only available in the registration preview")
        new = replace(state, phase=Phase.ENTRY_POINT)
        return new, EffectReport(event.type, new.phase,
                                 rmse=state.registration.rmse,
                                 message="registration confirmed")

    if isinstance(event, PlaceEntry):
        if phase is not Phase.ENTRY_POINT:
            raise RejectedEvent("entry placement is only available in the entry-point phase")
        try:
            entry = place_entry_point(event.ray, ctx.scene.head_mesh,
                                      planned_model=ctx.planned_entry_model)
        except NoSurfaceHit as exc:
            raise RejectedEvent(str(exc)) from exc
        new = replace(state, entry=entry)
        return new, EffectReport(event.type, new.phase,
                                 tre=_session_tre(ctx, state.registration),
                                 message="entry point placed")

    if isinstance(event, DeleteEntry):
        if phase is not Phase.ENTRY_POINT:
            raise RejectedEvent("no entry point to delete in this phase")
        new = replace(state, entry=None)
        return new, EffectReport(event.type, new.phase, message="entry point removed")

    if isinstance(event, MarkerUpdate):
        if phase is not Phase.CATHETER_TRACKING:
            raise RejectedEvent("marker updates are only consumed while tracking the catheter")
        if ctx.catheter is None:
            raise RejectedEvent("scenario has no catheter model")
        tip, _segment = catheter_tip(event.pose, ctx.catheter)
        ventricles = ctx.registered_ventricles(state.registration)
        plan = None
        if state.entry is not None and ctx.planned_target_model is not None:
            plan = TrajectoryPlan(
                entry=state.entry,
                target_world=state.registration.transform.apply(ctx.planned_target_model),
            )
        fb = tip_feedback(tip, ventricles, plan)
        new = replace(state, last_tip_feedback=fb)
        return new, EffectReport(event.type, new.phase, feedback=fb)

    raise RejectedEvent(f"unsupported event {type(event).__name__}")


def re_register(ctx: SessionContext, state: SessionState) -> SessionState:
    """Leave the registration preview and return to landmarking without
    clearing picks; resumes at the first landmark lacking picks."""
    del ctx
    if state.phase is not Phase.REGISTERED:
        raise WrongPhase("re-registration is only possible from the preview")
    current = next((lid for lid in LANDMARK_ORDER if not state.picks.get(lid)),
                   LANDMARK_ORDER[0])
    return replace(state, phase=Phase.LANDMARKING, current=current, registration=None)


def replay(ctx: SessionContext, events) -> SessionState:
    """Fold an event log over a fresh session; logs contain accepted events only."""
    state = new_session(ctx)
    for event in events:
        state, _ = dispatch(ctx, state, event)
    return state


def log_to_jsonl(events) -> str:
    return "".join(json.dumps(event_to_dict(e), separators=(",", ":")) + "\n"
                   for e in events)


def log_from_jsonl(text: str) -> list[SessionEvent]:
    return [event_from_dict(json.loads(line))
            for line in text.splitlines() if line.strip()]
