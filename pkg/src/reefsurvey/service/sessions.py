"""In-memory session store: one simulated robot per session.

Sessions are independent; requests within one session serialize on its
lock. In label mode the submitted label steers the simulator (the labeler
drives, as the diver does); replay mode walks a recorded pose sequence
instead so frames can be labeled off-policy.
"""

from __future__ import annotations

import base64
import io
import secrets
import threading
import time
from dataclasses import dataclass, field

from PIL import Image

from .. import ir
from ..policy.actions import ActionClass
from ..policy.dataset import LabeledSample
from ..policy.net import INPUT_H, INPUT_W
from ..sensor import CameraModel, render_with_footprint
from ..simulate import SimParams, check_collision, step_dynamics
from ..world import RobotPose, WorldMap

MODES = ("label", "teleop", "replay")


class SessionError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


@dataclass
class Session:
    session_id: str
    mode: str
    world: WorldMap
    cam: CameraModel
    sim: SimParams
    pose: RobotPose
    scenario_id: str
    record: bool = False
    replay_poses: list[RobotPose] = field(default_factory=list)
    step: int = 0
    finished: bool = False
    labels: list[LabeledSample] = field(default_factory=list)
    frame_png: bytes = b""
    segdepth_small = None
    last_action_time: float = 0.0
    lock: threading.Lock = field(default_factory=threading.Lock)

    def render_current(self) -> None:
        frame, _ = render_with_footprint(self.world, self.pose, self.cam)
        segdepth = ir.compose_segdepth(frame.seg, frame.depth)
        self.segdepth_small = ir.downsample(segdepth, INPUT_W, INPUT_H)
        buf = io.BytesIO()
        Image.fromarray(segdepth, mode="RGB").save(buf, format="PNG")
        self.frame_png = buf.getvalue()

    def png_base64(self) -> str:
        return base64.b64encode(self.frame_png).decode("ascii")

    def advance(self, action: ActionClass) -> None:
        """Move to the next frame; marks the session finished on violation."""
        if self.mode == "replay":
            nxt = self.step + 1
            if nxt >= len(self.replay_poses):
                self.finished = True
                return
            self.pose = self.replay_poses[nxt]
        else:
            new_pose = step_dynamics(self.pose, action, self.sim)
            if not (0.0 <= new_pose.x < self.world.width_m
                    and 0.0 <= new_pose.y < self.world.height_m):
                self.finished = True
                return
            if check_collision(self.world, new_pose, self.sim):
                self.finished = True
                return
            self.pose = new_pose
        self.step += 1
        self.render_current()

    def store_label(self, c_yaw: int, c_pitch: int, provenance: str) -> None:
        self.labels.append(LabeledSample(
            image=self.segdepth_small.copy(), c_yaw=c_yaw, c_pitch=c_pitch,
            provenance=provenance, scenario_id=self.scenario_id,
            step=self.step))


class SessionStore:
    def __init__(self, action_interval_ms: int = 250):
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        self.action_interval_ms = action_interval_ms

    def add(self, session: Session) -> None:
        with self._lock:
            self._sessions[session.session_id] = session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise SessionError(404, "unknown_session",
                               f"no session {session_id!r}")
        return session

    def new_id(self) -> str:
        return secrets.token_hex(8)

    def enforce_rate_limit(self, session: Session) -> None:
        if self.action_interval_ms <= 0:
            return
        now = time.monotonic()
        elapsed_ms = (now - session.last_action_time) * 1000.0
        if session.last_action_time and elapsed_ms < self.action_interval_ms:
            raise SessionError(429, "rate_limited",
                               f"one action per {self.action_interval_ms} ms")
        session.last_action_time = now
