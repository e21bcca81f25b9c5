"""Closed-loop episode engine: sense, compose the IR, act, move.

One episode is strictly sequential. The engine renders ground truth,
fills in the SegDepth plane, asks the controller for a 7-class action
pair, applies the kinematics, and logs per-step metrics. Out-of-bounds
and collision steps terminate the episode and are excluded from the log.
"""

from __future__ import annotations

import base64
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import ir
from .baselines import PlannedPath
from .policy.actions import ActionClass
from .policy.expert import ExpertConfig, expert_policy
from .policy.net import INPUT_H, INPUT_W, PolicyModel, predict
from .sensor import CameraModel, Frame, render_with_footprint
from .world import RobotPose, WorldMap, normalize_yaw

LOG_FORMAT_VERSION = "1.0"

PITCH_MIN = -30.0
PITCH_MAX = 30.0


@dataclass(frozen=True)
class SimParams:
    """Kinematic and episode limits; control_dt 2 s gives the 0.5 Hz loop."""

    speed: float = 1.0
    control_dt: float = 2.0
    z_min: float = 3.0
    z_max: float = 12.0
    collision_radius: float = 0.3
    max_steps: int = 500

    def __post_init__(self):
        if self.speed <= 0 or self.control_dt <= 0:
            raise ValueError("speed and control_dt must be positive")
        if self.z_min >= self.z_max:
            raise ValueError("z_min must be below z_max")


@dataclass
class StepRecord:
    step: int
    pose: RobotPose
    action: ActionClass
    over_ooi: bool
    newly_seen_cells: int
    cumulative_distance: float


@dataclass
class EpisodeLog:
    records: list[StepRecord] = field(default_factory=list)
    status: str = "budget_exhausted"
    seen_mask: np.ndarray | None = None

    @property
    def distance_traveled(self) -> float:
        return self.records[-1].cumulative_distance if self.records else 0.0


def step_dynamics(pose: RobotPose, action: ActionClass,
                  params: SimParams) -> RobotPose:
    """Apply the decoded heading changes, then advance one control tick.

    Altitude is clamped to the band; the clamp only zeroes the vertical
    component, horizontal motion is preserved.
    """
    yaw = normalize_yaw(pose.yaw + action.yaw_change)
    pitch = min(PITCH_MAX, max(PITCH_MIN, pose.pitch + action.pitch_change))
    dist = params.speed * params.control_dt
    yaw_rad = math.radians(yaw)
    pitch_rad = math.radians(pitch)
    x = pose.x + dist * math.cos(pitch_rad) * math.cos(yaw_rad)
    y = pose.y - dist * math.cos(pitch_rad) * math.sin(yaw_rad)
    z = min(params.z_max, max(params.z_min, pose.z + dist * math.sin(pitch_rad)))
    return RobotPose(x=x, y=y, z=z, yaw=yaw, pitch=pitch)


def check_collision(world: WorldMap, pose: RobotPose,
                    params: SimParams) -> bool:
    """True iff terrain within the horizontal radius reaches within the
    vertical radius of the robot (boundary counts as collision)."""
    r = params.collision_radius
    c = world.cell_size
    # one extra ring so cells whose edge sits exactly at distance r count
    i_lo = max(0, int((pose.x - r) / c) - 1)
    i_hi = min(world.nx - 1, int((pose.x + r) / c) + 1)
    j_lo = max(0, int((pose.y - r) / c) - 1)
    j_hi = min(world.ny - 1, int((pose.y + r) / c) + 1)
    for j in range(j_lo, j_hi + 1):
        y0, y1 = j * c, (j + 1) * c
        dy = max(y0 - pose.y, 0.0, pose.y - y1)
        for i in range(i_lo, i_hi + 1):
            x0, x1 = i * c, (i + 1) * c
            dx = max(x0 - pose.x, 0.0, pose.x - x1)
            if math.hypot(dx, dy) <= r:
                if pose.z - float(world.height_grid[j, i]) <= r:
                    return True
    return False


class ExpertController:
    """Scores the raw seg/depth planes with the expert rule."""

    def __init__(self, config: ExpertConfig = ExpertConfig()):
        self.config = config

    def act(self, frame: Frame, pose: RobotPose) -> ActionClass:
        return expert_policy(frame.seg, frame.depth, self.config)


class PolicyController:
    """Runs the cloned policy; consumes nothing but the SegDepth plane."""

    def __init__(self, model: PolicyModel):
        self.model = model

    def act(self, frame: Frame, pose: RobotPose) -> ActionClass:
        if frame.segdepth is None:
            raise ValueError("frame has no segdepth plane")
        small = ir.downsample(frame.segdepth, INPUT_W, INPUT_H)
        _, _, action = predict(self.model, small)
        return action


class PathFollowController:
    """Pure pursuit over a PlannedPath, quantized to the 7-class actions.

    Progress along the polyline is monotone so serpentine lanes cannot be
    skipped; lookahead is 1.5 * speed * control_dt. Pitch regulates toward
    the plan's nominal altitude.
    """

    ALTITUDE_GAIN = 5.0       # degrees of target pitch per meter of error
    TARGET_PITCH_CAP = 10.0

    def __init__(self, plan: PlannedPath, params: SimParams,
                 delta_yaw: float = 5.0, delta_pitch: float = 5.0):
        self.points = np.asarray(plan.waypoints, dtype=np.float64)
        if len(self.points) < 2:
            raise ValueError("plan needs at least two waypoints")
        self.z_nominal = plan.nominal_altitude
        self.delta_yaw = delta_yaw
        self.delta_pitch = delta_pitch
        seg = np.diff(self.points, axis=0)
        self.seg_len = np.linalg.norm(seg, axis=1)
        self.cum = np.concatenate([[0.0], np.cumsum(self.seg_len)])
        self.total = float(self.cum[-1])
        self.lookahead = 1.5 * params.speed * params.control_dt
        self.progress = 0.0
        self.finished = False

    def _point_at(self, s: float) -> np.ndarray:
        s = min(max(s, 0.0), self.total)
        k = int(np.searchsorted(self.cum, s, side="right")) - 1
        k = min(k, len(self.seg_len) - 1)
        if self.seg_len[k] == 0:
            return self.points[k]
        t = (s - self.cum[k]) / self.seg_len[k]
        return self.points[k] + t * (self.points[k + 1] - self.points[k])

    def _advance_progress(self, x: float, y: float) -> None:
        window = self.progress + 4.0 * self.lookahead
        best_s = self.progress
        best_d = None
        k0 = max(0, int(np.searchsorted(self.cum, self.progress, side="right")) - 1)
        p = np.array([x, y])
        for k in range(k0, len(self.seg_len)):
            if self.cum[k] > window:
                break
            a = self.points[k]
            d = self.points[k + 1] - a
            L = self.seg_len[k]
            if L == 0:
                continue
            t = float(np.clip(np.dot(p - a, d) / (L * L), 0.0, 1.0))
            s = self.cum[k] + t * L
            if s < self.progress:
                continue
            dist = float(np.linalg.norm(a + t * d - p))
            if best_d is None or dist < best_d:
                best_d = dist
                best_s = s
        self.progress = best_s

    def _quantize(self, desired: float, delta: float) -> int:
        steps = int(math.floor(abs(desired) / delta + 0.5))
        steps = min(steps, 3)
        if desired < 0:
            steps = -steps
        return 3 - steps

    def act(self, frame: Frame, pose: RobotPose) -> ActionClass:
        self._advance_progress(pose.x, pose.y)
        end = self.points[-1]
        if self.total - self.progress <= self.lookahead \
                and math.dist((pose.x, pose.y), tuple(end)) <= self.lookahead:
            self.finished = True
            return ActionClass(3, 3, self.delta_yaw, self.delta_pitch)
        target = self._point_at(self.progress + self.lookahead)
        dx = float(target[0] - pose.x)
        dy = float(target[1] - pose.y)
        if dx == 0.0 and dy == 0.0:
            yaw_err = 0.0
        else:
            bearing = -math.degrees(math.atan2(dy, dx))
            yaw_err = normalize_yaw(bearing - pose.yaw)
        c_yaw = self._quantize(yaw_err, self.delta_yaw)
        target_pitch = self.ALTITUDE_GAIN * (self.z_nominal - pose.z)
        target_pitch = min(self.TARGET_PITCH_CAP,
                           max(-self.TARGET_PITCH_CAP, target_pitch))
        c_pitch = self._quantize(target_pitch - pose.pitch, self.delta_pitch)
        return ActionClass(c_yaw, c_pitch, self.delta_yaw, self.delta_pitch)


def run_episode(world: WorldMap, controller, params: SimParams,
                seed: int = 0, cam: CameraModel = CameraModel(),
                start_pose: RobotPose | None = None,
                budget_m: float | None = None,
                frame_sink=None) -> EpisodeLog:
    """Run one sense-compose-act episode; deterministic per (controller, seed).

    ``frame_sink(step, pose, frame)`` is called per step when given, for
    frame dumps and labeling. Budget truncation stops before the step that
    would exceed ``budget_m``.
    """
    reset = getattr(controller, "reset", None)
    if callable(reset):
        reset(seed)
    pose = start_pose if start_pose is not None else world.spawn_pose
    log = EpisodeLog(seen_mask=np.zeros((world.ny, world.nx), dtype=np.bool_))
    cumulative = 0.0
    step_len = params.speed * params.control_dt
    for step in range(params.max_steps):
        if getattr(controller, "finished", False):
            log.status = "plan_complete"
            return log
        if budget_m is not None and cumulative + step_len > budget_m + 1e-9:
            log.status = "budget_exhausted"
            return log
        frame, fp = render_with_footprint(world, pose, cam)
        frame.segdepth = ir.compose_segdepth(frame.seg, frame.depth)
        newly = int(np.count_nonzero(fp & ~log.seen_mask))
        log.seen_mask |= fp
        if frame_sink is not None:
            frame_sink(step, pose, frame)
        try:
            action = controller.act(frame, pose)
        except Exception as exc:
            raise RuntimeError(f"controller failed at step {step}: {exc}") from exc
        new_pose = step_dynamics(pose, action, params)
        _, is_ooi = _ground_flag(world, pose)
        moved = math.dist((pose.x, pose.y, pose.z),
                          (new_pose.x, new_pose.y, new_pose.z))
        cumulative += moved
        log.records.append(StepRecord(
            step=step, pose=pose, action=action, over_ooi=is_ooi,
            newly_seen_cells=newly, cumulative_distance=cumulative))
        if not (0.0 <= new_pose.x < world.width_m
                and 0.0 <= new_pose.y < world.height_m):
            log.records.pop()
            log.status = "out_of_bounds"
            return log
        if check_collision(world, new_pose, params):
            log.records.pop()
            log.status = "collision"
            return log
        pose = new_pose
    log.status = "budget_exhausted"
    return log


def _ground_flag(world: WorldMap, pose: RobotPose) -> tuple[float, bool]:
    i, j = world.cell_index(pose.x, pose.y)
    return float(world.height_grid[j, i]), bool(world.ooi_grid[j, i])


def save_episode_log(log: EpisodeLog, path, meta: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        header = {"type": "episode_log", "version": LOG_FORMAT_VERSION,
                  "status": log.status}
        if log.seen_mask is not None:
            header["seen_shape"] = list(log.seen_mask.shape)
            header["seen_mask"] = base64.b64encode(
                np.packbits(log.seen_mask.reshape(-1)).tobytes()).decode("ascii")
        if meta is not None:
            header["meta"] = meta
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for r in log.records:
            fh.write(json.dumps({
                "step": r.step, "pose": r.pose.to_dict(),
                "c_yaw": r.action.c_yaw, "c_pitch": r.action.c_pitch,
                "over_ooi": r.over_ooi, "newly_seen_cells": r.newly_seen_cells,
                "cumulative_distance": r.cumulative_distance,
            }, sort_keys=True) + "\n")


def load_episode_log(path) -> EpisodeLog:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines or lines[0].get("type") != "episode_log":
        raise ValueError("not an episode_log file")
    header = lines[0]
    log = EpisodeLog(status=header["status"])
    if "seen_mask" in header:
        shape = tuple(header["seen_shape"])
        bits = np.frombuffer(base64.b64decode(header["seen_mask"]), dtype=np.uint8)
        log.seen_mask = np.unpackbits(
            bits, count=shape[0] * shape[1]).astype(bool).reshape(shape)
    for rec in lines[1:]:
        log.records.append(StepRecord(
            step=int(rec["step"]), pose=RobotPose.from_dict(rec["pose"]),
            action=ActionClass(int(rec["c_yaw"]), int(rec["c_pitch"])),
            over_ooi=bool(rec["over_ooi"]),
            newly_seen_cells=int(rec["newly_seen_cells"]),
            cumulative_distance=float(rec["cumulative_distance"])))
    return log
