"""FastAPI application wrapping the simulator for labeling and teleop."""

from __future__ import annotations

import os

from fastapi import FastAPI, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .. import __version__
from ..config import RunConfig
from ..policy.actions import NUM_CLASSES, ActionClass, decode_action
from ..policy.dataset import save_dataset
from ..sensor import CameraModel
from ..simulate import load_episode_log
from ..world import ScenarioSpec, generate_scenario, load_world
from .schemas import (ActionRequest, CreateSessionRequest, ExportRequest,
                      ExportSummary, FramePayload, LabelRequest, PoseBody,
                      ServiceConfig, SessionCreated, SessionStats)
from .sessions import MODES, Session, SessionError, SessionStore


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"code": code, "message": message})


def _frame_payload(session: Session) -> FramePayload:
    return FramePayload(
        session_id=session.session_id, step=session.step,
        png_base64=session.png_base64(),
        pose=PoseBody(**session.pose.to_dict()),
        scenario_id=session.scenario_id, mode=session.mode,
        finished=session.finished)


def _check_classes(c_yaw: int, c_pitch: int) -> None:
    if not (0 <= c_yaw < NUM_CLASSES and 0 <= c_pitch < NUM_CLASSES):
        raise SessionError(400, "bad_class",
                           f"classes must be in 0..{NUM_CLASSES - 1}, "
                           f"got ({c_yaw}, {c_pitch})")


def _check_step(session: Session, step: int | None) -> None:
    if step is not None and step != session.step:
        raise SessionError(409, "step_conflict",
                           f"frame {step} is not current (now at "
                           f"{session.step}); each step is labeled once")


def create_app(config: RunConfig | None = None,
               ui_dir: str | None = None,
               action_interval_ms: int = 250) -> FastAPI:
    config = config or RunConfig()
    store = SessionStore(action_interval_ms=action_interval_ms)
    app = FastAPI(title="reefsurvey session service")
    app.state.store = store
    app.state.config = config

    @app.exception_handler(SessionError)
    async def _session_error(request, exc: SessionError):
        return _error(exc.status, exc.code, exc.message)

    @app.get("/config", response_model=ServiceConfig)
    def get_config():
        d_yaw = config.expert.delta_yaw
        d_pitch = config.expert.delta_pitch
        return ServiceConfig(
            delta_yaw=d_yaw, delta_pitch=d_pitch, num_classes=NUM_CLASSES,
            yaw_degrees=[decode_action(c, d_yaw) for c in range(NUM_CLASSES)],
            pitch_degrees=[decode_action(c, d_pitch) for c in range(NUM_CLASSES)],
            action_interval_ms=store.action_interval_ms)

    @app.post("/sessions", response_model=SessionCreated, status_code=200)
    def create_session(req: CreateSessionRequest):
        if req.mode not in MODES:
            raise SessionError(400, "bad_mode",
                               f"mode must be one of {MODES}, got {req.mode!r}")
        try:
            if req.world_file:
                world = load_world(req.world_file)
                scenario_id = os.path.basename(req.world_file)
            else:
                world = generate_scenario(ScenarioSpec(
                    req.scenario, seed=req.seed, params=req.params))
                scenario_id = req.scenario
        except Exception as exc:
            raise SessionError(400, "bad_scenario", str(exc)) from exc
        replay_poses = []
        if req.mode == "replay":
            if not req.log_file:
                raise SessionError(400, "bad_replay",
                                   "replay mode needs log_file")
            try:
                log = load_episode_log(req.log_file)
            except Exception as exc:
                raise SessionError(400, "bad_replay", str(exc)) from exc
            replay_poses = [r.pose for r in log.records]
            if not replay_poses:
                raise SessionError(400, "bad_replay", "log has no steps")
        cam = CameraModel(hfov=config.camera.hfov, vfov=config.camera.vfov,
                          image_w=config.camera.image_w,
                          image_h=config.camera.image_h,
                          boresight_tilt=config.camera.boresight_tilt,
                          max_range=config.camera.max_range)
        session = Session(
            session_id=store.new_id(), mode=req.mode, world=world, cam=cam,
            sim=config.sim,
            pose=replay_poses[0] if replay_poses else world.spawn_pose,
            scenario_id=scenario_id, record=req.record,
            replay_poses=replay_poses)
        session.render_current()
        store.add(session)
        return SessionCreated(
            session_id=session.session_id, mode=session.mode,
            step=session.step, scenario_id=session.scenario_id,
            delta_yaw=config.expert.delta_yaw,
            delta_pitch=config.expert.delta_pitch)

    @app.get("/sessions/{session_id}/frame", response_model=FramePayload)
    def get_frame(session_id: str):
        session = store.get(session_id)
        with session.lock:
            return _frame_payload(session)

    @app.get("/sessions/{session_id}/frame.png")
    def get_frame_png(session_id: str):
        session = store.get(session_id)
        with session.lock:
            return Response(content=session.frame_png, media_type="image/png")

    @app.post("/sessions/{session_id}/label", response_model=FramePayload)
    def post_label(session_id: str, req: LabelRequest):
        session = store.get(session_id)
        with session.lock:
            if session.mode not in ("label", "replay"):
                raise SessionError(409, "wrong_mode",
                                   f"session mode is {session.mode}, not label")
            _check_classes(req.c_yaw, req.c_pitch)
            _check_step(session, req.step)
            if session.finished:
                raise SessionError(409, "finished",
                                   "session has terminated; export instead")
            session.store_label(req.c_yaw, req.c_pitch, provenance="human")
            session.advance(ActionClass(req.c_yaw, req.c_pitch))
            return _frame_payload(session)

    @app.post("/sessions/{session_id}/action", response_model=FramePayload)
    def post_action(session_id: str, req: ActionRequest):
        session = store.get(session_id)
        with session.lock:
            if session.mode != "teleop":
                raise SessionError(409, "wrong_mode",
                                   f"session mode is {session.mode}, not teleop")
            _check_classes(req.c_yaw, req.c_pitch)
            _check_step(session, req.step)
            if session.finished:
                raise SessionError(409, "finished", "session has terminated")
            store.enforce_rate_limit(session)
            if session.record:
                session.store_label(req.c_yaw, req.c_pitch, provenance="human")
            session.advance(ActionClass(req.c_yaw, req.c_pitch))
            return _frame_payload(session)

    @app.post("/sessions/{session_id}/export", response_model=ExportSummary)
    def export_dataset(session_id: str, req: ExportRequest):
        session = store.get(session_id)
        with session.lock:
            if not session.labels:
                raise SessionError(409, "empty_session",
                                   "no labels to export")
            summary = save_dataset(session.labels, req.path,
                                   meta={"config_hash": config.hash(),
                                         "tool_version": __version__,
                                         "scenario_id": session.scenario_id})
            return ExportSummary(count=summary.count,
                                 yaw_histogram=summary.yaw_histogram,
                                 pitch_histogram=summary.pitch_histogram,
                                 path=str(req.path))

    @app.get("/sessions/{session_id}/stats", response_model=SessionStats)
    def get_stats(session_id: str):
        session = store.get(session_id)
        with session.lock:
            yaw_hist = [0] * NUM_CLASSES
            pitch_hist = [0] * NUM_CLASSES
            for sample in session.labels:
                yaw_hist[sample.c_yaw] += 1
                pitch_hist[sample.c_pitch] += 1
            return SessionStats(
                session_id=session.session_id, mode=session.mode,
                step=session.step, label_count=len(session.labels),
                yaw_histogram=yaw_hist, pitch_histogram=pitch_hist,
                finished=session.finished)

    if ui_dir and os.path.isdir(ui_dir):
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
