"""Comparison planners: Brownian Bridge random walk and Boustrophedon coverage.

Both read the map (they model localization-based baselines). The bridge
walk is sampled sequentially from the exact conditional law, so endpoints
pin exactly and the unconstrained variance matches t(T-t)/T * sigma^2.
The Boustrophedon decomposition sweeps columns left to right and opens or
closes cells whenever the free-interval connectivity changes.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .world import WorldMap

DEFAULT_SIGMA = 0.5          # meters per sqrt(step)
DEFAULT_WAYPOINTS = 10
DEFAULT_TOTAL_STEPS = 1000
DEFAULT_TURN_MARGIN_M = 6.0  # lane-end inset so quantized turns stay inside
DEFAULT_CLEARANCE_M = 2.0    # extra inflation for transit routing
DEFAULT_BORDER_MARGIN_M = 10.0  # plan standoff from map edges (turn radius room)
DEFAULT_PLAN_CLEARANCE_M = 4.0  # obstacle standoff for lanes and bridge points
DEFAULT_ENDPOINT_CLEARANCE_M = 8.0  # extra standoff where bridges may reverse

PATH_FORMAT_VERSION = "1.0"


class PlanError(ValueError):
    """Planning failed (no free space, stranded cell, blocked transit)."""


@dataclass
class PlannedPath:
    """2-D waypoint polyline at a fixed nominal altitude.

    ``tags[k]`` labels the segment from waypoint k to k+1 as one of
    bridge | lane | transit.
    """

    waypoints: list[tuple[float, float]]
    tags: list[str]
    nominal_altitude: float = 6.0

    def __post_init__(self):
        if len(self.tags) != max(0, len(self.waypoints) - 1):
            raise ValueError("need one tag per segment")

    def length(self) -> float:
        pts = np.asarray(self.waypoints)
        if len(pts) < 2:
            return 0.0
        return float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())

    def validate(self, world: WorldMap) -> None:
        obstacle = world.obstacle_grid
        for k, (x, y) in enumerate(self.waypoints):
            if not (0.0 <= x < world.width_m and 0.0 <= y < world.height_m):
                raise ValueError(f"waypoint {k} ({x}, {y}) out of bounds")
            i, j = world.cell_index(x, y)
            if obstacle[j, i]:
                raise ValueError(f"waypoint {k} ({x}, {y}) inside obstacle cell")
        for k in range(len(self.waypoints) - 1):
            if self.waypoints[k] == self.waypoints[k + 1]:
                raise ValueError(f"waypoints {k} and {k + 1} coincide")


def save_path(path: PlannedPath, file, meta: dict | None = None) -> None:
    with open(file, "w", encoding="utf-8") as fh:
        header = {"type": "planned_path", "version": PATH_FORMAT_VERSION,
                  "nominal_altitude": path.nominal_altitude}
        if meta is not None:
            header["meta"] = meta
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for k, (x, y) in enumerate(path.waypoints):
            record = {"x": x, "y": y}
            if k > 0:
                record["tag"] = path.tags[k - 1]
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def load_path(file) -> PlannedPath:
    with open(file, "r", encoding="utf-8") as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if not lines or lines[0].get("type") != "planned_path":
        raise ValueError("not a planned_path file")
    header = lines[0]
    waypoints = [(float(r["x"]), float(r["y"])) for r in lines[1:]]
    tags = [str(r["tag"]) for r in lines[2:]]
    return PlannedPath(waypoints=waypoints, tags=tags,
                       nominal_altitude=float(header["nominal_altitude"]))


# ---------------------------------------------------------------- Brownian

def _cell_rect(world: WorldMap, i: int, j: int) -> tuple[float, float, float, float]:
    c = world.cell_size
    return (i * c, j * c, (i + 1) * c, (j + 1) * c)


def _point_valid(world: WorldMap, obstacle: np.ndarray, x: float, y: float,
                 margin: float = 0.0) -> bool:
    if not (margin <= x < world.width_m - margin
            and margin <= y < world.height_m - margin):
        return False
    i, j = world.cell_index(x, y)
    return not obstacle[j, i]


def _reflect_once(world: WorldMap, obstacle: np.ndarray, cur: np.ndarray,
                  prop: np.ndarray, margin: float = 0.0) -> np.ndarray:
    """Mirror a violating proposal across the boundary it crossed."""
    x, y = float(prop[0]), float(prop[1])
    x_lo, x_hi = margin, world.width_m - margin
    y_lo, y_hi = margin, world.height_m - margin
    if x < x_lo:
        x = 2.0 * x_lo - x
    elif x >= x_hi:
        x = 2.0 * x_hi - x
    if y < y_lo:
        y = 2.0 * y_lo - y
    elif y >= y_hi:
        y = 2.0 * y_hi - y
    if not (0.0 <= x < world.width_m and 0.0 <= y < world.height_m):
        return np.array([x, y])  # still outside; caller resamples
    i, j = world.cell_index(x, y)
    if obstacle[j, i]:
        x0, y0, x1, y1 = _cell_rect(world, i, j)
        cx, cy = float(cur[0]), float(cur[1])
        if cx <= x0:
            x = 2.0 * x0 - x
        elif cx >= x1:
            x = 2.0 * x1 - x
        elif cy <= y0:
            y = 2.0 * y0 - y
        elif cy >= y1:
            y = 2.0 * y1 - y
    return np.array([x, y])


def sample_bridge(a, b, steps: int, sigma: float,
                  rng: np.random.Generator) -> np.ndarray:
    """Unconstrained 2-D Brownian bridge from a to b over ``steps`` steps.

    Sequential conditional sampling: the increment toward the pinned
    endpoint has mean (b - x)/remaining and variance
    sigma^2 * (remaining - 1)/remaining per axis, which reproduces the
    bridge law with Var[B(t)] = sigma^2 * t (T - t) / T.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    points = np.empty((steps + 1, 2))
    points[0] = a
    cur = a.copy()
    for k in range(steps):
        remaining = steps - k
        if remaining == 1:
            cur = b.copy()
        else:
            mean = cur + (b - cur) / remaining
            std = sigma * math.sqrt((remaining - 1) / remaining)
            cur = mean + std * rng.standard_normal(2)
        points[k + 1] = cur
    return points


def _line_of_sight(free: np.ndarray, cell_size: float, a: np.ndarray,
                   b: np.ndarray) -> bool:
    dist = float(np.linalg.norm(b - a))
    samples = max(2, int(dist / (0.5 * cell_size)) + 1)
    ny, nx = free.shape
    for t in np.linspace(0.0, 1.0, samples):
        p = a + t * (b - a)
        i = min(max(int(p[0] / cell_size), 0), nx - 1)
        j = min(max(int(p[1] / cell_size), 0), ny - 1)
        if not free[j, i]:
            return False
    return True


def _route_pins(world: WorldMap, free: np.ndarray, a: np.ndarray,
                b: np.ndarray) -> list[np.ndarray]:
    """Endpoints plus the minimal via points needed to clear obstacles."""
    if _line_of_sight(free, world.cell_size, a, b):
        return [a, b]
    c = world.cell_size
    reach = int(30.0 / c)
    sa = _nearest_free(free, *world.cell_index(a[0], a[1]), max_radius=reach)
    sb = _nearest_free(free, *world.cell_index(b[0], b[1]), max_radius=reach)
    if sa is None or sb is None:
        raise PlanError("bridge endpoint has no free surroundings")
    grid_path = _grid_search(free, sa, sb)
    if grid_path is None:
        raise PlanError("bridge endpoints lie in disconnected free regions")
    points = [a] + [np.array([(i + 0.5) * c, (j + 0.5) * c])
                    for i, j in grid_path] + [b]
    # string pulling: keep only the corners actually needed for visibility
    pins = [points[0]]
    k = 0
    while k < len(points) - 1:
        far = k + 1
        for m in range(len(points) - 1, k, -1):
            if _line_of_sight(free, c, points[k], points[m]):
                far = m
                break
        pins.append(points[far])
        k = far
    return pins


def brownian_bridge_walk(world: WorldMap, start: tuple[float, float],
                         total_steps: int = DEFAULT_TOTAL_STEPS,
                         waypoint_count: int = DEFAULT_WAYPOINTS,
                         sigma: float = DEFAULT_SIGMA,
                         seed: int = 0,
                         border_margin: float = DEFAULT_BORDER_MARGIN_M,
                         plan_clearance: float = DEFAULT_PLAN_CLEARANCE_M) -> PlannedPath:
    """Random-walk plan: bridges between uniformly sampled free endpoints.

    When the straight line between two endpoints is blocked, the bridge is
    pinned at the obstacle corners found by grid search, so the drift term
    never drags the walk through an obstacle. Steps that still land out of
    bounds or in a blocked cell are reflected across the violated boundary
    once, then resampled (at most 100 draws). Endpoints and bridge points
    keep ``border_margin`` from the map edges and ``plan_clearance`` from
    obstacles so the turn-limited follower can track the plan.
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if waypoint_count < 1:
        raise ValueError("waypoint_count must be at least 1")
    margin = min(border_margin, 0.4 * min(world.width_m, world.height_m))
    obstacle = _inflate(world.obstacle_grid,
                        max(0, int(math.floor(plan_clearance / world.cell_size))))
    cells_j, cells_i = np.meshgrid(np.arange(world.ny), np.arange(world.nx),
                                   indexing="ij")
    cx = (cells_i + 0.5) * world.cell_size
    cy = (cells_j + 0.5) * world.cell_size
    inset = ((cx >= margin) & (cx < world.width_m - margin)
             & (cy >= margin) & (cy < world.height_m - margin))
    # endpoints are where the follower may reverse, so they need room for
    # a full turning circle away from obstacles
    endpoint_block = _inflate(world.obstacle_grid, max(0, int(math.floor(
        DEFAULT_ENDPOINT_CLEARANCE_M / world.cell_size))))
    free = np.argwhere(~endpoint_block & inset)
    if len(free) == 0:
        free = np.argwhere(~obstacle & inset)
    if len(free) == 0:
        raise PlanError("no free cell to sample endpoints from")
    rng = np.random.default_rng(seed)
    picks = free[rng.integers(0, len(free), size=waypoint_count)]
    endpoints = [np.array(start, dtype=np.float64)]
    endpoints += [np.array([(i + 0.5) * world.cell_size, (j + 0.5) * world.cell_size])
                  for j, i in picks]
    route_free = ~obstacle & inset
    steps_per = max(1, total_steps // waypoint_count)
    waypoints = [tuple(endpoints[0])]
    for a, b in zip(endpoints[:-1], endpoints[1:]):
        pins = _route_pins(world, route_free, a, b)
        lengths = [float(np.linalg.norm(q - p)) for p, q in zip(pins[:-1], pins[1:])]
        total_len = sum(lengths) or 1.0
        for (p, q), seg_len in zip(zip(pins[:-1], pins[1:]), lengths):
            seg_steps = max(1, int(round(steps_per * seg_len / total_len)))
            cur = p.copy()
            for k in range(seg_steps):
                remaining = seg_steps - k
                if remaining == 1:
                    nxt = q.copy()
                else:
                    mean = cur + (q - cur) / remaining
                    std = sigma * math.sqrt((remaining - 1) / remaining)
                    nxt = mean + std * rng.standard_normal(2)
                    if not _point_valid(world, obstacle, nxt[0], nxt[1], margin):
                        nxt = _reflect_once(world, obstacle, cur, nxt, margin)
                    tries = 0
                    while not _point_valid(world, obstacle, nxt[0], nxt[1], margin):
                        tries += 1
                        if tries > 100:
                            raise PlanError("bridge step stuck after 100 resamples")
                        nxt = mean + std * rng.standard_normal(2)
                        if not _point_valid(world, obstacle, nxt[0], nxt[1], margin):
                            nxt = _reflect_once(world, obstacle, cur, nxt, margin)
                cur = nxt
                point = (float(cur[0]), float(cur[1]))
                if point != waypoints[-1]:
                    waypoints.append(point)
    tags = ["bridge"] * (len(waypoints) - 1)
    return PlannedPath(waypoints=waypoints, tags=tags,
                       nominal_altitude=world.spawn_pose.z)


# ------------------------------------------------------------ Boustrophedon

@dataclass
class BcdCell:
    """One sweep cell: per-column free row interval, rows half-open."""

    slices: dict[int, tuple[int, int]] = field(default_factory=dict)

    @property
    def col_range(self) -> tuple[int, int]:
        cols = sorted(self.slices)
        return cols[0], cols[-1]

    def cell_count(self) -> int:
        return sum(hi - lo for lo, hi in self.slices.values())


def _free_runs(column: np.ndarray) -> list[tuple[int, int]]:
    runs = []
    j = 0
    n = len(column)
    while j < n:
        if column[j]:
            lo = j
            while j < n and column[j]:
                j += 1
            runs.append((lo, j))
        else:
            j += 1
    return runs


def bcd_decompose(world: WorldMap) -> list[BcdCell]:
    """Partition free space into sweep-connected cells (column sweep)."""
    return _decompose_mask(~world.obstacle_grid)


def _decompose_mask(free: np.ndarray) -> list[BcdCell]:
    if not free.any():
        raise PlanError("free space is empty")
    cells: list[BcdCell] = []
    # active: list of (cell index, (lo, hi)) for the previous column
    active: list[tuple[int, tuple[int, int]]] = []
    for i in range(free.shape[1]):
        runs = _free_runs(free[:, i])
        links_prev = [[] for _ in active]
        links_cur = [[] for _ in runs]
        for a, (_, (plo, phi)) in enumerate(active):
            for r, (lo, hi) in enumerate(runs):
                if lo < phi and plo < hi:
                    links_prev[a].append(r)
                    links_cur[r].append(a)
        new_active: list[tuple[int, tuple[int, int]]] = []
        for r, run in enumerate(runs):
            prevs = links_cur[r]
            if len(prevs) == 1 and len(links_prev[prevs[0]]) == 1:
                cell_idx = active[prevs[0]][0]   # simple continuation
            else:
                cell_idx = len(cells)            # IN, SPLIT, or MERGE opens new
                cells.append(BcdCell())
            cells[cell_idx].slices[i] = run
            new_active.append((cell_idx, run))
        active = new_active
    return [c for c in cells if c.slices]


def lawnmower(cell: BcdCell, lane_spacing: float, cell_size: float,
              turn_margin: float = 0.0, reverse_cols: bool = False,
              start_high: bool = False) -> PlannedPath:
    """Serpentine vertical lanes over one cell.

    Lanes start at the cell's left edge with zero inset and are spaced
    ``lane_spacing`` apart; floor(width/spacing) + 1 lanes, or a single
    centered lane when the spacing is at least the cell width. Lane ends
    are inset by ``turn_margin`` so a turn-limited follower stays inside.
    """
    if lane_spacing <= 0:
        raise ValueError("lane_spacing must be positive")
    if not cell.slices:
        raise ValueError("degenerate cell")
    i_min, i_max = cell.col_range
    x0 = i_min * cell_size
    x1 = (i_max + 1) * cell_size
    width = x1 - x0
    if lane_spacing >= width:
        lane_x = [0.5 * (x0 + x1)]
    else:
        count = int(math.floor(width / lane_spacing)) + 1
        lane_x = [x0 + k * lane_spacing for k in range(count)]
    waypoints: list[tuple[float, float]] = []
    lanes = list(enumerate(lane_x))
    if reverse_cols:
        lanes = list(enumerate(reversed(lane_x)))
    for n, x in lanes:
        col = min(i_min + int((x - x0) / cell_size), i_max)
        if col not in cell.slices:
            # column gap cannot happen inside one sweep cell, but guard anyway
            continue
        lo, hi = cell.slices[col]
        cx = (col + 0.5) * cell_size
        y_lo = lo * cell_size + turn_margin
        y_hi = hi * cell_size - turn_margin
        if y_hi - y_lo < cell_size:
            mid = 0.5 * (lo + hi) * cell_size
            y_lo = y_hi = mid
        upward = (n % 2 == 0) != start_high
        ys = (y_lo, y_hi) if upward else (y_hi, y_lo)
        for y in ys:
            point = (cx, y)
            if not waypoints or waypoints[-1] != point:
                waypoints.append(point)
    tags = ["lane"] * (len(waypoints) - 1)
    return PlannedPath(waypoints=waypoints, tags=tags)


def _inflate(obstacle: np.ndarray, radius_cells: int) -> np.ndarray:
    inflated = obstacle.copy()
    for _ in range(radius_cells):
        grown = inflated.copy()
        grown[1:, :] |= inflated[:-1, :]
        grown[:-1, :] |= inflated[1:, :]
        grown[:, 1:] |= inflated[:, :-1]
        grown[:, :-1] |= inflated[:, 1:]
        inflated = grown
    return inflated


def _grid_search(free: np.ndarray, start: tuple[int, int],
                 goal: tuple[int, int]) -> list[tuple[int, int]] | None:
    """Uniform-cost search, 8-connected without corner cutting."""
    ny, nx = free.shape
    if not free[start[1], start[0]] or not free[goal[1], goal[0]]:
        return None
    dist = np.full((ny, nx), np.inf)
    dist[start[1], start[0]] = 0.0
    parent: dict[tuple[int, int], tuple[int, int]] = {}
    counter = 0
    heap = [(0.0, counter, start)]
    moves = [(1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0),
             (1, 1, math.sqrt(2)), (1, -1, math.sqrt(2)),
             (-1, 1, math.sqrt(2)), (-1, -1, math.sqrt(2))]
    while heap:
        d, _, (ci, cj) = heapq.heappop(heap)
        if (ci, cj) == goal:
            path = [(ci, cj)]
            while path[-1] != start:
                path.append(parent[path[-1]])
            return path[::-1]
        if d > dist[cj, ci]:
            continue
        for di, dj, cost in moves:
            ni, nj = ci + di, cj + dj
            if not (0 <= ni < nx and 0 <= nj < ny) or not free[nj, ni]:
                continue
            if di != 0 and dj != 0:
                if not (free[cj, ni] and free[nj, ci]):
                    continue
            nd = d + cost
            if nd < dist[nj, ni]:
                dist[nj, ni] = nd
                parent[(ni, nj)] = (ci, cj)
                counter += 1
                heapq.heappush(heap, (nd, counter, (ni, nj)))
    return None


def _thin_collinear(points: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Drop interior points that lie on the line through their neighbors."""
    if len(points) <= 2:
        return points
    thinned = [points[0]]
    for k in range(1, len(points) - 1):
        ax, ay = thinned[-1]
        bx, by = points[k]
        cx, cy = points[k + 1]
        cross = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
        if abs(cross) > 1e-9:
            thinned.append(points[k])
    thinned.append(points[-1])
    return thinned


def _nearest_free(free: np.ndarray, i: int, j: int,
                  max_radius: int = 12) -> tuple[int, int] | None:
    ny, nx = free.shape
    if free[j, i]:
        return (i, j)
    for radius in range(1, max_radius + 1):
        best = None
        best_d = None
        for dj in range(-radius, radius + 1):
            for di in range(-radius, radius + 1):
                if max(abs(di), abs(dj)) != radius:
                    continue
                ni, nj = i + di, j + dj
                if 0 <= ni < nx and 0 <= nj < ny and free[nj, ni]:
                    d = di * di + dj * dj
                    if best_d is None or d < best_d:
                        best, best_d = (ni, nj), d
        if best is not None:
            return best
    return None


def bcd_plan(world: WorldMap, start: tuple[float, float],
             lane_spacing: float, turn_margin: float = DEFAULT_TURN_MARGIN_M,
             clearance: float = DEFAULT_CLEARANCE_M,
             border_margin: float = DEFAULT_BORDER_MARGIN_M,
             plan_clearance: float = DEFAULT_PLAN_CLEARANCE_M) -> PlannedPath:
    """Complete-coverage plan: greedy nearest-cell ordering, lawnmower per
    cell, obstacle-free grid transits in between.

    Planning treats a ``border_margin`` ring along the map edges and a
    ``plan_clearance`` band around obstacles as blocked, so the
    turn-limited follower never has to fly to the border or hug an
    obstacle; with the default camera both stay visible from the lanes.
    """
    obstacle = _inflate(world.obstacle_grid,
                        max(0, int(math.floor(plan_clearance / world.cell_size))))
    ring = max(0, int(math.floor(
        min(border_margin, 0.4 * min(world.width_m, world.height_m))
        / world.cell_size)))
    blocked = obstacle.copy()
    if ring > 0:
        blocked[:ring, :] = True
        blocked[-ring:, :] = True
        blocked[:, :ring] = True
        blocked[:, -ring:] = True
    cells = _decompose_mask(~blocked)
    radius = max(1, int(math.ceil(clearance / world.cell_size)))
    transit_free = ~_inflate(blocked, radius)
    cell_size = world.cell_size

    def to_cell(p: tuple[float, float]) -> tuple[int, int]:
        return world.cell_index(min(p[0], world.width_m - 1e-9),
                                min(p[1], world.height_m - 1e-9))

    pos = (float(start[0]), float(start[1]))
    i, j = to_cell(pos)
    if obstacle[j, i]:
        raise PlanError(f"start {pos} lies in an obstacle cell")
    waypoints: list[tuple[float, float]] = [pos]
    tags: list[str] = []
    remaining = list(range(len(cells)))
    while remaining:
        best = None
        for idx in remaining:
            for reverse_cols in (False, True):
                for start_high in (False, True):
                    mower = lawnmower(cells[idx], lane_spacing, cell_size,
                                      turn_margin=turn_margin,
                                      reverse_cols=reverse_cols,
                                      start_high=start_high)
                    if not mower.waypoints:
                        continue
                    entry = mower.waypoints[0]
                    d = math.dist(pos, entry)
                    if best is None or d < best[0]:
                        best = (d, idx, mower)
        if best is None:
            raise PlanError("no coverable cell remains")
        _, idx, mower = best
        remaining.remove(idx)
        entry = mower.waypoints[0]
        si, sj = to_cell(pos)
        gi, gj = to_cell(entry)
        reach = int(30.0 / world.cell_size)
        s_free = _nearest_free(transit_free, si, sj, max_radius=reach)
        g_free = _nearest_free(transit_free, gi, gj, max_radius=reach)
        if s_free is None or g_free is None:
            raise PlanError(f"cell {idx} entry has no clearance for transit")
        grid_path = _grid_search(transit_free, s_free, g_free)
        if grid_path is None:
            lo, hi = cells[idx].col_range
            raise PlanError(f"cell {idx} (columns {lo}..{hi}) unreachable from start")
        transit_pts = [( (ci + 0.5) * cell_size, (cj + 0.5) * cell_size)
                       for ci, cj in grid_path]
        transit_pts = _thin_collinear(transit_pts)
        for point in transit_pts + [entry]:
            if point != waypoints[-1]:
                waypoints.append(point)
                tags.append("transit")
        for point in mower.waypoints[1:]:
            if point != waypoints[-1]:
                waypoints.append(point)
                tags.append("lane")
        pos = waypoints[-1]
    return PlannedPath(waypoints=waypoints, tags=tags,
                       nominal_altitude=world.spawn_pose.z)
