"""Request/response bodies for the session API. All fields snake_case."""

from __future__ import annotations

from pydantic import BaseModel, Field


class CreateSessionRequest(BaseModel):
    scenario: str = "gridworld"
    seed: int = 0
    mode: str = "label"                      # label | teleop | replay
    params: dict = Field(default_factory=dict)
    world_file: str | None = None            # load instead of generating
    log_file: str | None = None              # replay mode: recorded episode
    record: bool = False                     # teleop: persist actions as labels


class PoseBody(BaseModel):
    x: float
    y: float
    z: float
    yaw: float
    pitch: float


class SessionCreated(BaseModel):
    session_id: str
    mode: str
    step: int
    scenario_id: str
    delta_yaw: float
    delta_pitch: float


class FramePayload(BaseModel):
    session_id: str
    step: int
    png_base64: str
    pose: PoseBody
    scenario_id: str
    mode: str
    finished: bool


class LabelRequest(BaseModel):
    c_yaw: int
    c_pitch: int
    step: int | None = None                  # guards against double submission


class ActionRequest(BaseModel):
    c_yaw: int
    c_pitch: int
    step: int | None = None


class ExportRequest(BaseModel):
    path: str


class ExportSummary(BaseModel):
    count: int
    yaw_histogram: list[int]
    pitch_histogram: list[int]
    path: str


class SessionStats(BaseModel):
    session_id: str
    mode: str
    step: int
    label_count: int
    yaw_histogram: list[int]
    pitch_histogram: list[int]
    finished: bool


class ServiceConfig(BaseModel):
    delta_yaw: float
    delta_pitch: float
    num_classes: int
    yaw_degrees: list[float]
    pitch_degrees: list[float]
    action_interval_ms: int


class ErrorBody(BaseModel):
    code: str
    message: str
