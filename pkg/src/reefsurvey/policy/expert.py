"""Deterministic expert labeler standing in for the human operator.

The rule codifies the three labeling objectives: steer toward visible OOI,
prefer OOI that is larger and farther away, and avoid obstacles. All
thresholds live in ExpertConfig; they are workbench constants standing in
for human judgment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .actions import NUM_CLASSES, ActionClass


@dataclass(frozen=True)
class ExpertConfig:
    """Thresholds for the expert rule.

    near_threshold is the proximity value (0..255) treated as "close";
    204 corresponds to 0.8 of full scale. max_range_m must match the
    rendering camera so proximity inverts to metric range.
    """

    near_threshold: int = 204
    obstacle_beta: float = 4.0
    climb_fracs: tuple[float, float, float] = (0.05, 0.15, 0.30)
    altitude_low_m: float = 4.0
    altitude_high_m: float = 9.0
    max_range_m: float = 20.0
    delta_yaw: float = 5.0
    delta_pitch: float = 5.0


def sector_bounds(width: int) -> np.ndarray:
    """Column boundaries of the 7 vertical sectors (length 8).

    Widths are as equal as possible and symmetric under horizontal
    mirroring: leftover columns go to the center sector first, then to
    sector pairs equidistant from the center.
    """
    base = width // NUM_CLASSES
    rem = width - base * NUM_CLASSES
    widths = np.full(NUM_CLASSES, base, dtype=np.int64)
    order = [3] if rem % 2 == 1 else []
    for offset in (1, 2, 3):
        order.extend([3 - offset, 3 + offset])
    for sector in order[:rem]:
        widths[sector] += 1
    bounds = np.zeros(NUM_CLASSES + 1, dtype=np.int64)
    bounds[1:] = np.cumsum(widths)
    return bounds


def sector_scores(seg: np.ndarray, depth: np.ndarray,
                  config: ExpertConfig) -> np.ndarray:
    """Per-sector steering score: far-weighted OOI mass minus obstacle penalty."""
    depth_f = depth.astype(np.float64)
    far_weight = np.where(seg, (255.0 - depth_f) / 255.0, 0.0)
    near_obstacle = (~seg) & (depth >= config.near_threshold)
    bounds = sector_bounds(seg.shape[1])
    scores = np.zeros(NUM_CLASSES, dtype=np.float64)
    for j in range(NUM_CLASSES):
        cols = slice(bounds[j], bounds[j + 1])
        scores[j] = far_weight[:, cols].sum() \
            - config.obstacle_beta * near_obstacle[:, cols].sum()
    return scores


def _pick_sector(scores: np.ndarray) -> int:
    # quantize so mathematically equal sector sums tie exactly despite
    # summation-order noise, leaving ties to the documented preference
    q = np.round(scores, 9)
    best = q.max()
    candidates = np.flatnonzero(q == best)
    center_dist = np.abs(candidates - 3)
    candidates = candidates[center_dist == center_dist.min()]
    return int(candidates.max())


def _bottom_center_range(depth: np.ndarray, config: ExpertConfig) -> float | None:
    """Implied range under the nose; None when the ray misses entirely
    (no floor within range, so no altitude reading)."""
    h, w = depth.shape
    if w % 2 == 1:
        d = float(depth[h - 1, w // 2])
    else:
        d = 0.5 * (float(depth[h - 1, w // 2 - 1]) + float(depth[h - 1, w // 2]))
    if d == 0.0:
        return None
    return config.max_range_m * (1.0 - d / 255.0)


def expert_policy(seg: np.ndarray, depth: np.ndarray,
                  config: ExpertConfig = ExpertConfig()) -> ActionClass:
    """Label a frame with (c_yaw, c_pitch).

    Yaw: hold course unless some sector scores positive, else turn toward
    the best sector (ties prefer straight, then clockwise). Pitch: climb
    when the upper half fills with near pixels, otherwise regulate altitude
    from the bottom-center range.
    """
    if seg.shape != depth.shape:
        raise ValueError("seg and depth must share dimensions")
    scores = sector_scores(seg, depth, config)
    if scores.max() <= 0.0:
        c_yaw = 3
    else:
        c_yaw = 6 - _pick_sector(scores)

    upper = depth[: depth.shape[0] // 2, :]
    near_frac = float((upper >= config.near_threshold).mean()) if upper.size else 0.0
    f1, f2, f3 = config.climb_fracs
    if near_frac > f3:
        c_pitch = 0
    elif near_frac > f2:
        c_pitch = 1
    elif near_frac > f1:
        c_pitch = 2
    else:
        r_b = _bottom_center_range(depth, config)
        if r_b is None:
            c_pitch = 3
        elif r_b < config.altitude_low_m:
            c_pitch = 2
        elif r_b > config.altitude_high_m:
            c_pitch = 4
        else:
            c_pitch = 3
    return ActionClass(c_yaw=c_yaw, c_pitch=c_pitch,
                       delta_yaw=config.delta_yaw, delta_pitch=config.delta_pitch)
