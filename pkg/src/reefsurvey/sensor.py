"""Ground-truth camera: ray-cast depth and segmentation from a robot pose.

Rays are cast per pixel with equiangular offsets across the field of view,
marched against the heightfield at half-cell steps with one bisection
refinement (range error below cell_size/4). Depth pixels encode proximity:
255 at zero range, 0 at or beyond max_range.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from PIL import Image

from .world import RobotPose, WorldMap


class PoseError(ValueError):
    """Pose is outside the map or below the local terrain."""


@dataclass(frozen=True)
class CameraModel:
    """Front-facing camera intrinsics and mounting.

    boresight_tilt is relative to body pitch; the default -30 deg points the
    camera down so the floor stays in view at survey altitude.
    """

    hfov: float = 80.0
    vfov: float = 64.0
    image_w: int = 256
    image_h: int = 256
    boresight_tilt: float = -30.0
    max_range: float = 20.0

    def __post_init__(self):
        if not (0.0 < self.hfov < 180.0 and 0.0 < self.vfov < 180.0):
            raise ValueError("fov must be within (0, 180) degrees")
        if self.image_w < 16 or self.image_h < 16:
            raise ValueError("image dimensions must be at least 16")
        if self.max_range <= 0:
            raise ValueError("max_range must be positive")

    def to_dict(self) -> dict:
        return {"hfov": self.hfov, "vfov": self.vfov, "image_w": self.image_w,
                "image_h": self.image_h, "boresight_tilt": self.boresight_tilt,
                "max_range": self.max_range}

    @classmethod
    def from_dict(cls, d: dict) -> "CameraModel":
        return cls(**d)


@dataclass
class Frame:
    """Per-step sensor bundle: mask, proximity image, and fused SegDepth."""

    seg: np.ndarray
    depth: np.ndarray
    segdepth: np.ndarray | None = None

    def __post_init__(self):
        if self.seg.shape != self.depth.shape:
            raise ValueError("seg and depth must share dimensions")
        if self.segdepth is not None and self.segdepth.shape[:2] != self.seg.shape:
            raise ValueError("segdepth must share dimensions with seg/depth")


@njit(cache=True)
def _cast_all(height, ooi, nx, ny, cell, max_h,
              x0, y0, z0, yaw, pitch, tilt, hfov, vfov, w, h, max_range,
              depth_out, seg_out, fp_out):
    step = cell * 0.5
    deg = math.pi / 180.0
    width = nx * cell
    length = ny * cell
    for r in range(h):
        ang_v = (h * 0.5 - (r + 0.5)) / h * vfov
        for c in range(w):
            ang_h = ((c + 0.5) - w * 0.5) / w * hfov
            ray_yaw = (yaw + ang_h) * deg
            ray_pitch = (pitch + tilt + ang_v) * deg
            cp = math.cos(ray_pitch)
            dx = cp * math.cos(ray_yaw)
            dy = -cp * math.sin(ray_yaw)
            dz = math.sin(ray_pitch)
            t = step
            hit = False
            rhit = max_range
            ci = -1
            cj = -1
            while t <= max_range:
                px = x0 + dx * t
                py = y0 + dy * t
                pz = z0 + dz * t
                if px < 0.0 or py < 0.0 or px >= width or py >= length:
                    break
                if dz >= 0.0 and pz > max_h:
                    break
                ii = int(px / cell)
                jj = int(py / cell)
                if pz <= height[jj, ii]:
                    lo = t - step
                    hi = t
                    mid = 0.5 * (lo + hi)
                    mx = x0 + dx * mid
                    my = y0 + dy * mid
                    mz = z0 + dz * mid
                    mi = int(mx / cell)
                    mj = int(my / cell)
                    inside = 0 <= mi < nx and 0 <= mj < ny
                    if inside and mz <= height[mj, mi]:
                        rhit = 0.5 * (lo + mid)
                    else:
                        rhit = 0.5 * (mid + hi)
                    hx = x0 + dx * rhit
                    hy = y0 + dy * rhit
                    ci = int(hx / cell)
                    cj = int(hy / cell)
                    if ci < 0:
                        ci = 0
                    if cj < 0:
                        cj = 0
                    if ci > nx - 1:
                        ci = nx - 1
                    if cj > ny - 1:
                        cj = ny - 1
                    hit = True
                    break
                t += step
            if hit and rhit <= max_range:
                d = int(math.floor(255.0 * (1.0 - rhit / max_range) + 0.5))
                if d < 0:
                    d = 0
                elif d > 255:
                    d = 255
                depth_out[r, c] = d
                seg_out[r, c] = ooi[cj, ci]
                fp_out[cj, ci] = True
            else:
                depth_out[r, c] = 0
                seg_out[r, c] = False


def _check_pose(world: WorldMap, pose: RobotPose) -> None:
    if not (0.0 <= pose.x < world.width_m and 0.0 <= pose.y < world.height_m):
        raise PoseError(f"pose ({pose.x}, {pose.y}) outside bounds {world.bounds}")
    i, j = world.cell_index(pose.x, pose.y)
    terrain = float(world.height_grid[j, i])
    if pose.z <= terrain:
        raise PoseError(f"pose z={pose.z} is at or below terrain height {terrain}")


def render_with_footprint(world: WorldMap, pose: RobotPose,
                          cam: CameraModel) -> tuple[Frame, np.ndarray]:
    """Render seg/depth planes and the boolean footprint grid in one pass."""
    _check_pose(world, pose)
    depth = np.zeros((cam.image_h, cam.image_w), dtype=np.uint8)
    seg = np.zeros((cam.image_h, cam.image_w), dtype=np.bool_)
    fp = np.zeros((world.ny, world.nx), dtype=np.bool_)
    max_h = float(world.height_grid.max()) if world.height_grid.size else 0.0
    _cast_all(world.height_grid, world.ooi_grid, world.nx, world.ny,
              world.cell_size, max_h,
              float(pose.x), float(pose.y), float(pose.z),
              float(pose.yaw), float(pose.pitch), float(cam.boresight_tilt),
              float(cam.hfov), float(cam.vfov), cam.image_w, cam.image_h,
              float(cam.max_range), depth, seg, fp)
    return Frame(seg=seg, depth=depth), fp


def render(world: WorldMap, pose: RobotPose, cam: CameraModel) -> Frame:
    """Render the seg and depth planes for a pose (segdepth left unfilled)."""
    frame, _ = render_with_footprint(world, pose, cam)
    return frame


def ground_footprint(world: WorldMap, pose: RobotPose,
                     cam: CameraModel) -> set[tuple[int, int]]:
    """Grid cells (i, j) visible in the current frame."""
    _, fp = render_with_footprint(world, pose, cam)
    return {(int(i), int(j)) for j, i in np.argwhere(fp)}


def nominal_footprint_width(cam: CameraModel, altitude: float) -> float:
    """Across-track footprint width where the boresight meets flat ground.

    Used as the default survey lane spacing. If the boresight points at or
    above horizontal the intersection is unbounded; fall back to the width
    at max_range.
    """
    tilt = math.radians(cam.boresight_tilt)
    if tilt >= 0.0:
        slant = cam.max_range
    else:
        slant = min(altitude / math.sin(-tilt), cam.max_range)
    return 2.0 * slant * math.tan(math.radians(cam.hfov / 2.0))


def export_frame(frame: Frame, stem, pose: RobotPose | None = None,
                 cam: CameraModel | None = None) -> dict:
    """Write <stem>_seg.png, <stem>_depth.png, <stem>_segdepth.png plus a
    sidecar <stem>.json; returns the sidecar document."""
    stem = str(stem)
    paths = {}
    Image.fromarray(frame.seg).convert("1").save(stem + "_seg.png")
    paths["seg"] = stem + "_seg.png"
    Image.fromarray(frame.depth, mode="L").save(stem + "_depth.png")
    paths["depth"] = stem + "_depth.png"
    if frame.segdepth is not None:
        Image.fromarray(frame.segdepth, mode="RGB").save(stem + "_segdepth.png")
        paths["segdepth"] = stem + "_segdepth.png"
    sidecar = {"files": paths}
    if pose is not None:
        sidecar["pose"] = pose.to_dict()
    if cam is not None:
        sidecar["camera"] = cam.to_dict()
    with open(stem + ".json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, sort_keys=True)
        fh.write("\n")
    return sidecar
