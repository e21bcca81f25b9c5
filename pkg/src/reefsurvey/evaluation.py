"""Survey metrics and the multi-method, multi-scenario comparison harness.

Metrics per episode: distance traveled, distance traveled over OOI (nadir
accounting), and the fraction of OOI cells that entered the camera
footprint at least once. The harness runs every (method, scenario, seed)
cell at the same distance budget and aggregates mean/std per cell group.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from PIL import Image, ImageDraw

from .baselines import bcd_plan, brownian_bridge_walk
from .policy.expert import ExpertConfig
from .policy.net import PolicyModel
from .sensor import CameraModel, nominal_footprint_width, render_with_footprint
from .simulate import (EpisodeLog, ExpertController, PathFollowController,
                       PolicyController, SimParams, run_episode)
from .world import RobotPose, ScenarioSpec, WorldMap, generate_scenario

OYSTER_SCENARIOS = ("gridworld", "eshape", "disconnected_paths",
                    "branching_corridor")
ALL_SCENARIOS = OYSTER_SCENARIOS + ("rockreef",)

METHODS = ("expert", "policy", "bb", "bcd")

DEFAULT_BUDGET_M = 300.0
SPAWN_JITTER_XY_M = 1.0
SPAWN_JITTER_YAW_DEG = 10.0


@dataclass
class MetricsSummary:
    distance_m: float
    distance_over_ooi_m: float
    pct_ooi_seen: float
    efficiency_per_m: float
    status: str
    method: str = ""
    scenario: str = ""
    seed: int = 0
    distance_budget: float = 0.0


def compute_metrics(world: WorldMap, log: EpisodeLog,
                    cam: CameraModel) -> MetricsSummary:
    """Derive the three survey metrics from an episode log.

    Footprint union comes from the log's seen mask when present; otherwise
    the footprints are re-cast from the logged poses with ``cam``.
    """
    distance = log.distance_traveled
    over = 0.0
    prev_cum = 0.0
    for rec in log.records:
        step_len = rec.cumulative_distance - prev_cum
        prev_cum = rec.cumulative_distance
        if rec.over_ooi:
            over += step_len
    if log.seen_mask is not None:
        seen = log.seen_mask
        if seen.shape != (world.ny, world.nx):
            raise ValueError("log seen_mask does not match the map grid")
    else:
        seen = np.zeros((world.ny, world.nx), dtype=np.bool_)
        for rec in log.records:
            _, fp = render_with_footprint(world, rec.pose, cam)
            seen |= fp
    total_ooi = int(world.ooi_grid.sum())
    pct = float((seen & world.ooi_grid).sum() / total_ooi) if total_ooi else 0.0
    efficiency = pct / distance if distance > 0 else 0.0
    return MetricsSummary(distance_m=distance, distance_over_ooi_m=over,
                          pct_ooi_seen=pct, efficiency_per_m=efficiency,
                          status=log.status)


def jittered_spawn(world: WorldMap, seed: int,
                   xy_jitter: float = SPAWN_JITTER_XY_M,
                   yaw_jitter: float = SPAWN_JITTER_YAW_DEG) -> RobotPose:
    """Deterministic per-seed spawn perturbation kept inside free space."""
    rng = np.random.default_rng([seed, 9241])
    base = world.spawn_pose
    for _ in range(20):
        x = base.x + float(rng.uniform(-xy_jitter, xy_jitter))
        y = base.y + float(rng.uniform(-xy_jitter, xy_jitter))
        yaw = base.yaw + float(rng.uniform(-yaw_jitter, yaw_jitter))
        if not (0.0 <= x < world.width_m and 0.0 <= y < world.height_m):
            continue
        i, j = world.cell_index(x, y)
        if float(world.height_grid[j, i]) < base.z:
            return RobotPose(x=x, y=y, z=base.z, yaw=yaw, pitch=base.pitch)
    return base


@dataclass
class CompareConfig:
    budget_m: float = DEFAULT_BUDGET_M
    cam: CameraModel = field(default_factory=lambda: CameraModel(
        image_w=128, image_h=128))
    sim: SimParams = field(default_factory=SimParams)
    expert: ExpertConfig = field(default_factory=ExpertConfig)
    lane_spacing: float | None = None    # None: footprint width at spawn z
    max_steps: int | None = None         # None: derived from the budget


@dataclass
class CompareResult:
    rows: list[MetricsSummary]
    trajectories: dict = field(default_factory=dict)  # (method, scenario) -> [(x, y)]
    config: dict = field(default_factory=dict)

    def aggregates(self) -> list[dict]:
        """Mean/std of every metric per (method, scenario), sorted."""
        groups: dict[tuple[str, str], list[MetricsSummary]] = {}
        for row in self.rows:
            groups.setdefault((row.method, row.scenario), []).append(row)
        out = []
        for (method, scenario) in sorted(groups):
            rows = groups[(method, scenario)]
            entry = {"method": method, "scenario": scenario, "n": len(rows),
                     "incomplete": sum(1 for r in rows
                                       if r.status.startswith("error"))}
            for metric in ("distance_m", "distance_over_ooi_m",
                           "pct_ooi_seen", "efficiency_per_m"):
                values = [getattr(r, metric) for r in rows]
                entry[metric + "_mean"] = float(np.mean(values))
                entry[metric + "_std"] = float(np.std(values))
            out.append(entry)
        return out

    def method_means(self, scenarios=None) -> dict[str, dict[str, float]]:
        """Per-method means over the given scenarios (all when None)."""
        out: dict[str, dict[str, float]] = {}
        for method in sorted({r.method for r in self.rows}):
            rows = [r for r in self.rows if r.method == method
                    and (scenarios is None or r.scenario in scenarios)]
            if rows:
                out[method] = {
                    metric: float(np.mean([getattr(r, metric) for r in rows]))
                    for metric in ("distance_m", "distance_over_ooi_m",
                                   "pct_ooi_seen", "efficiency_per_m")}
        return out

    def summary_text(self) -> str:
        lines = ["method/scenario summary (mean over seeds):"]
        for agg in self.aggregates():
            flag = f"  [{agg['incomplete']} aborted]" if agg["incomplete"] else ""
            lines.append(
                f"  {agg['method']:8s} {agg['scenario']:20s} n={agg['n']:2d} "
                f"dist={agg['distance_m_mean']:7.1f} "
                f"over_ooi={agg['distance_over_ooi_m_mean']:6.1f} "
                f"pct_seen={agg['pct_ooi_seen_mean']:.3f}"
                f"+-{agg['pct_ooi_seen_std']:.3f} "
                f"eff={agg['efficiency_per_m_mean']:.5f}/m{flag}")
        return "\n".join(lines)


def _run_cell(method: str, scenario: str, seed: int, cfg: CompareConfig,
              model: PolicyModel | None) -> tuple[MetricsSummary, list]:
    world = generate_scenario(ScenarioSpec(scenario, seed=seed))
    spawn = jittered_spawn(world, seed)
    budget = cfg.budget_m
    step_len = cfg.sim.speed * cfg.sim.control_dt
    max_steps = cfg.max_steps or int(math.ceil(budget / step_len)) + 2
    params = SimParams(speed=cfg.sim.speed, control_dt=cfg.sim.control_dt,
                       z_min=cfg.sim.z_min, z_max=cfg.sim.z_max,
                       collision_radius=cfg.sim.collision_radius,
                       max_steps=max_steps)
    expert_cfg = ExpertConfig(
        near_threshold=cfg.expert.near_threshold,
        obstacle_beta=cfg.expert.obstacle_beta,
        climb_fracs=cfg.expert.climb_fracs,
        altitude_low_m=cfg.expert.altitude_low_m,
        altitude_high_m=cfg.expert.altitude_high_m,
        max_range_m=cfg.cam.max_range,
        delta_yaw=cfg.expert.delta_yaw, delta_pitch=cfg.expert.delta_pitch)
    if method == "expert":
        controller = ExpertController(expert_cfg)
    elif method == "policy":
        if model is None:
            raise ValueError("policy method requires a trained model")
        controller = PolicyController(model)
    elif method == "bb":
        plan = brownian_bridge_walk(world, (spawn.x, spawn.y), seed=seed)
        controller = PathFollowController(plan, params)
    elif method == "bcd":
        spacing = cfg.lane_spacing or nominal_footprint_width(cfg.cam, spawn.z)
        plan = bcd_plan(world, (spawn.x, spawn.y), lane_spacing=spacing)
        controller = PathFollowController(plan, params)
    else:
        raise ValueError(f"unknown method {method!r}")
    log = run_episode(world, controller, params, seed=seed, cam=cfg.cam,
                      start_pose=spawn, budget_m=budget)
    metrics = compute_metrics(world, log, cfg.cam)
    metrics.method = method
    metrics.scenario = scenario
    metrics.seed = seed
    metrics.distance_budget = budget
    track = [(r.pose.x, r.pose.y) for r in log.records]
    return metrics, track


def compare(methods: list[str], scenarios: list[str], seeds: int,
            distance_budget: float = DEFAULT_BUDGET_M,
            cfg: CompareConfig | None = None,
            model: PolicyModel | None = None,
            parallel: int = 1) -> CompareResult:
    """Run the full cross of (method, scenario, seed) at one budget."""
    if not methods or not scenarios or seeds < 1:
        raise ValueError("need at least one method, scenario, and seed")
    for method in methods:
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}; valid: {METHODS}")
    cfg = cfg or CompareConfig()
    cfg.budget_m = distance_budget
    cells = [(method, scenario, seed) for method in methods
             for scenario in scenarios for seed in range(seeds)]

    def work(cell):
        method, scenario, seed = cell
        try:
            return cell, _run_cell(method, scenario, seed, cfg, model)
        except Exception as exc:
            failed = MetricsSummary(
                distance_m=0.0, distance_over_ooi_m=0.0, pct_ooi_seen=0.0,
                efficiency_per_m=0.0, status=f"error: {exc}",
                method=method, scenario=scenario, seed=seed,
                distance_budget=cfg.budget_m)
            return cell, (failed, [])

    if parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            outcomes = dict(pool.map(work, cells))
    else:
        outcomes = dict(map(work, cells))
    result = CompareResult(rows=[], config={
        "budget_m": distance_budget, "seeds": seeds,
        "methods": list(methods), "scenarios": list(scenarios),
        "camera": cfg.cam.to_dict()})
    for cell in cells:     # deterministic order regardless of scheduling
        metrics, track = outcomes[cell]
        result.rows.append(metrics)
        key = (cell[0], cell[1])
        if key not in result.trajectories and track:
            result.trajectories[key] = track
    return result


CSV_COLUMNS = ["method", "scenario", "seed", "distance_m",
               "distance_over_ooi_m", "pct_ooi_seen", "efficiency_per_m",
               "status"]


def result_to_csv(result: CompareResult) -> str:
    buf = io.StringIO()
    buf.write("# meta: " + json.dumps(result.config, sort_keys=True) + "\n")
    writer = csv.writer(buf)
    writer.writerow(CSV_COLUMNS)
    for row in result.rows:
        writer.writerow([row.method, row.scenario, row.seed,
                         repr(row.distance_m), repr(row.distance_over_ooi_m),
                         repr(row.pct_ooi_seen), repr(row.efficiency_per_m),
                         row.status])
    return buf.getvalue()


def csv_to_rows(text: str) -> list[MetricsSummary]:
    lines = [line for line in text.splitlines() if not line.startswith("#")]
    reader = csv.reader(io.StringIO("\n".join(lines)))
    header = next(reader)
    if header != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {header}")
    rows = []
    for rec in reader:
        if not rec:
            continue
        rows.append(MetricsSummary(
            method=rec[0], scenario=rec[1], seed=int(rec[2]),
            distance_m=float(rec[3]), distance_over_ooi_m=float(rec[4]),
            pct_ooi_seen=float(rec[5]), efficiency_per_m=float(rec[6]),
            status=rec[7]))
    return rows


_METHOD_COLORS = {"expert": (220, 40, 40), "policy": (240, 130, 20),
                  "bb": (40, 70, 220), "bcd": (130, 40, 180)}


def render_overlay(world: WorldMap, tracks: dict[str, list],
                   scale: int = 3) -> Image.Image:
    """Trajectory polylines over the OOI/obstacle raster."""
    base = np.full((world.ny, world.nx, 3), 226, dtype=np.uint8)
    base[world.ooi_grid] = (110, 190, 110)
    base[world.obstacle_grid] = (60, 60, 60)
    img = Image.fromarray(base, mode="RGB").resize(
        (world.nx * scale, world.ny * scale), resample=Image.NEAREST)
    draw = ImageDraw.Draw(img)
    sx = scale / world.cell_size
    for method, track in sorted(tracks.items()):
        if len(track) < 2:
            continue
        color = _METHOD_COLORS.get(method, (0, 0, 0))
        pixels = [(x * sx, y * sx) for x, y in track]
        draw.line(pixels, fill=color, width=2)
    return img


def emit_report(result: CompareResult, out_dir, scale: int = 3,
                meta: dict | None = None) -> dict:
    """Write CSV + JSON renderings and per-scenario trajectory overlays."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    csv_path = os.path.join(out_dir, "results.csv")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(result_to_csv(result))
    paths["csv"] = csv_path
    doc = {"config": result.config, "rows": [asdict(r) for r in result.rows],
           "aggregates": result.aggregates()}
    if meta is not None:
        doc["meta"] = meta
    json_path = os.path.join(out_dir, "results.json")
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")
    paths["json"] = json_path
    scenarios = sorted({r.scenario for r in result.rows})
    for scenario in scenarios:
        world = generate_scenario(ScenarioSpec(scenario, seed=0))
        tracks = {m: t for (m, s), t in result.trajectories.items()
                  if s == scenario}
        img = render_overlay(world, tracks, scale=scale)
        png_path = os.path.join(out_dir, f"overlay_{scenario}.png")
        img.save(png_path)
        paths[f"overlay_{scenario}"] = png_path
    txt_path = os.path.join(out_dir, "summary.txt")
    with open(txt_path, "w", encoding="utf-8") as fh:
        fh.write(result.summary_text() + "\n")
    paths["summary"] = txt_path
    return paths
