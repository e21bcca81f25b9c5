"""Seafloor environments: heightfield terrain, OOI labels, scenario generators.

A world is a flat 2.5-D grid: per-cell terrain height plus a boolean
object-of-interest flag. Obstacles are raised terrain (height at or above
``obstacle_threshold``), so one ray caster serves both the floor and the
obstacles. Cells use half-open indexing: cell (i, j) covers
``[i*cell, (i+1)*cell) x [j*cell, (j+1)*cell)`` in meters.
"""

from __future__ import annotations

import base64
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

OBSTACLE_THRESHOLD_M = 5.0

SCENARIO_IDS = (
    "gridworld",
    "eshape",
    "disconnected_paths",
    "branching_corridor",
    "rockreef",
)

WORLD_FORMAT_VERSION = "1.0"


class ParameterError(ValueError):
    """A scenario parameter is unknown or outside its documented range."""


class WorldFormatError(ValueError):
    """A world file is malformed; the message names the offending field."""


def normalize_yaw(yaw: float) -> float:
    """Wrap a yaw angle in degrees to (-180, 180]."""
    wrapped = yaw - 360.0 * math.floor((yaw + 180.0) / 360.0)
    if wrapped == -180.0:
        wrapped = 180.0
    return wrapped


@dataclass(frozen=True)
class RobotPose:
    """Robot state: position in meters, yaw/pitch in degrees.

    Yaw is positive clockwise viewed from above, with yaw 0 facing +x.
    Pitch is positive upward. Yaw is normalized to (-180, 180] and pitch
    clamped to [-30, 30] on construction.
    """

    x: float
    y: float
    z: float
    yaw: float = 0.0
    pitch: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "yaw", normalize_yaw(float(self.yaw)))
        object.__setattr__(self, "pitch", float(min(30.0, max(-30.0, self.pitch))))

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "z": self.z, "yaw": self.yaw, "pitch": self.pitch}

    @classmethod
    def from_dict(cls, d: dict) -> "RobotPose":
        return cls(x=float(d["x"]), y=float(d["y"]), z=float(d["z"]),
                   yaw=float(d["yaw"]), pitch=float(d["pitch"]))


@dataclass
class WorldMap:
    """Immutable 2.5-D environment grid.

    ``height_grid`` and ``ooi_grid`` are row-major arrays of shape (ny, nx)
    where nx = ceil(width_m / cell_size) and ny = ceil(height_m / cell_size).
    Row j indexes y, column i indexes x.
    """

    width_m: float
    height_m: float
    cell_size: float
    height_grid: np.ndarray
    ooi_grid: np.ndarray
    ooi_kind: str = "oyster"
    spawn_pose: RobotPose = field(default_factory=lambda: RobotPose(1.0, 1.0, 6.0))
    obstacle_threshold: float = OBSTACLE_THRESHOLD_M

    def __post_init__(self):
        self.height_grid = np.ascontiguousarray(self.height_grid, dtype=np.float32)
        self.ooi_grid = np.ascontiguousarray(self.ooi_grid, dtype=np.bool_)
        self.validate()
        self.height_grid.flags.writeable = False
        self.ooi_grid.flags.writeable = False

    @property
    def nx(self) -> int:
        return int(math.ceil(self.width_m / self.cell_size))

    @property
    def ny(self) -> int:
        return int(math.ceil(self.height_m / self.cell_size))

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        """(x_min, y_min, x_max, y_max) of the valid query region."""
        return (0.0, 0.0, self.width_m, self.height_m)

    @property
    def obstacle_grid(self) -> np.ndarray:
        return self.height_grid >= self.obstacle_threshold

    def validate(self) -> None:
        if self.width_m <= 0 or self.height_m <= 0 or self.cell_size <= 0:
            raise WorldFormatError("width_m/height_m/cell_size must be positive")
        expected = (self.ny, self.nx)
        if self.height_grid.shape != expected:
            raise WorldFormatError(
                f"height_grid shape {self.height_grid.shape} != expected {expected}")
        if self.ooi_grid.shape != expected:
            raise WorldFormatError(
                f"ooi_grid shape {self.ooi_grid.shape} != expected {expected}")
        if not np.all(np.isfinite(self.height_grid)):
            raise WorldFormatError("height_grid contains non-finite values")
        if np.any(self.height_grid < 0):
            raise WorldFormatError("height_grid contains negative heights")
        if np.any(self.ooi_grid & (self.height_grid >= self.obstacle_threshold)):
            raise WorldFormatError("ooi_grid flags an obstacle cell")

    def __eq__(self, other) -> bool:
        if not isinstance(other, WorldMap):
            return NotImplemented
        return (
            self.width_m == other.width_m
            and self.height_m == other.height_m
            and self.cell_size == other.cell_size
            and self.ooi_kind == other.ooi_kind
            and self.obstacle_threshold == other.obstacle_threshold
            and self.spawn_pose == other.spawn_pose
            and np.array_equal(self.height_grid, other.height_grid)
            and np.array_equal(self.ooi_grid, other.ooi_grid)
        )

    def cell_index(self, x: float, y: float) -> tuple[int, int]:
        """Cell (i, j) containing world point (x, y); raises if out of bounds."""
        if not (0.0 <= x < self.width_m and 0.0 <= y < self.height_m):
            raise ValueError(f"query ({x}, {y}) outside bounds {self.bounds}")
        i = min(int(x / self.cell_size), self.nx - 1)
        j = min(int(y / self.cell_size), self.ny - 1)
        return i, j


def query_cell(world: WorldMap, x: float, y: float) -> tuple[float, bool]:
    """Terrain height and OOI flag of the cell containing (x, y)."""
    i, j = world.cell_index(x, y)
    return float(world.height_grid[j, i]), bool(world.ooi_grid[j, i])


@dataclass(frozen=True)
class ScenarioSpec:
    """Recipe for a procedurally generated world.

    ``params`` overrides the scenario's documented defaults (see
    ``scenario_defaults``). Identical (scenario_id, seed, params) always
    regenerate a bit-identical WorldMap.
    """

    scenario_id: str
    seed: int = 0
    params: dict = field(default_factory=dict)

    def resolved_params(self) -> dict:
        defaults = scenario_defaults(self.scenario_id)
        merged = dict(defaults)
        for key, value in self.params.items():
            if key not in defaults:
                raise ParameterError(
                    f"unknown parameter {key!r} for scenario {self.scenario_id!r}")
            merged[key] = float(value)
        _check_ranges(self.scenario_id, merged)
        return merged

    def to_dict(self) -> dict:
        return {"scenario_id": self.scenario_id, "seed": self.seed,
                "params": dict(self.params)}


# Dimensions and densities below are workbench constants: the reef shapes
# are parameterized approximations, with band positions jittered per seed.
_COMMON_DEFAULTS = {
    "width_m": 120.0,
    "height_m": 120.0,
    "cell_size": 0.25,
    "band_jitter_m": 2.0,
    "obstacle_size_m": 5.0,
    "spawn_z": 6.0,
}

_SCENARIO_DEFAULTS = {
    "gridworld": {"band_width_m": 3.0, "pitch_m": 24.0},
    "eshape": {"wide_band_m": 6.0, "narrow_band_m": 2.0},
    "disconnected_paths": {"band_width_m": 4.0, "gap_m": 8.0},
    "branching_corridor": {"spine_width_m": 4.0, "wide_branch_m": 6.0,
                           "narrow_branch_m": 2.0},
    "rockreef": {"wide_band_m": 6.0},
}


def scenario_defaults(scenario_id: str) -> dict:
    if scenario_id not in SCENARIO_IDS:
        raise ParameterError(f"unknown scenario_id {scenario_id!r}; "
                             f"valid ids: {', '.join(SCENARIO_IDS)}")
    merged = dict(_COMMON_DEFAULTS)
    merged.update(_SCENARIO_DEFAULTS[scenario_id])
    return merged


def _check_ranges(scenario_id: str, p: dict) -> None:
    if not (20.0 <= p["width_m"] <= 400.0 and 20.0 <= p["height_m"] <= 400.0):
        raise ParameterError("width_m/height_m must be within [20, 400] m")
    if not (0.05 <= p["cell_size"] <= 1.0):
        raise ParameterError("cell_size must be within [0.05, 1] m")
    for key, value in p.items():
        if key.endswith("_m") and value < 0:
            raise ParameterError(f"{key} must be non-negative")
    if scenario_id == "disconnected_paths" and not (1.0 <= p["gap_m"] <= 30.0):
        raise ParameterError("gap_m must be within [1, 30] m")


class _GridPainter:
    """Accumulates OOI bands and obstacle blocks on a fresh grid."""

    def __init__(self, p: dict):
        self.cell = p["cell_size"]
        self.nx = int(math.ceil(p["width_m"] / self.cell))
        self.ny = int(math.ceil(p["height_m"] / self.cell))
        self.height = np.zeros((self.ny, self.nx), dtype=np.float32)
        self.ooi = np.zeros((self.ny, self.nx), dtype=np.bool_)

    def _slice(self, lo: float, hi: float, n: int) -> slice:
        a = max(0, int(math.floor(lo / self.cell)))
        b = min(n, int(math.ceil(hi / self.cell)))
        return slice(a, b)

    def band(self, x0: float, x1: float, y0: float, y1: float) -> None:
        self.ooi[self._slice(y0, y1, self.ny), self._slice(x0, x1, self.nx)] = True

    def block(self, cx: float, cy: float, size: float, height: float) -> None:
        sx = self._slice(cx - size / 2, cx + size / 2, self.nx)
        sy = self._slice(cy - size / 2, cy + size / 2, self.ny)
        self.height[sy, sx] = height
        # raised terrain is never OOI
        self.ooi[sy, sx] = False


def generate_scenario(spec: ScenarioSpec) -> WorldMap:
    """Build the WorldMap described by ``spec`` (pure function of the spec)."""
    p = spec.resolved_params()
    rng = np.random.default_rng(spec.seed)
    painter = _GridPainter(p)
    builder = {
        "gridworld": _build_gridworld,
        "eshape": _build_eshape,
        "disconnected_paths": _build_disconnected,
        "branching_corridor": _build_branching,
        "rockreef": _build_rockreef,
    }[spec.scenario_id]
    spawn = builder(painter, p, rng)
    ooi_kind = "rock" if spec.scenario_id == "rockreef" else "oyster"
    return WorldMap(
        width_m=p["width_m"], height_m=p["height_m"], cell_size=p["cell_size"],
        height_grid=painter.height, ooi_grid=painter.ooi,
        ooi_kind=ooi_kind, spawn_pose=spawn,
    )


def _jitter(rng: np.random.Generator, amount: float) -> float:
    return float(rng.uniform(-amount, amount))


def _obstacle_height(rng: np.random.Generator) -> float:
    return float(rng.uniform(5.5, 7.5))


def _build_gridworld(g: _GridPainter, p: dict, rng: np.random.Generator) -> RobotPose:
    w, h = p["width_m"], p["height_m"]
    bw = p["band_width_m"]
    pitch = p["pitch_m"]
    jit = p["band_jitter_m"]
    count_x = int(0.5 * w / pitch) + 1
    count_y = int(0.5 * h / pitch) + 1
    lo_x0 = 0.5 * (w - (count_x - 1) * pitch)
    lo_y0 = 0.5 * (h - (count_y - 1) * pitch)
    xs = [lo_x0 + k * pitch + _jitter(rng, jit) for k in range(count_x)]
    ys = [lo_y0 + k * pitch + _jitter(rng, jit) for k in range(count_y)]
    lo_x, hi_x = xs[0] - bw / 2, xs[-1] + bw / 2
    lo_y, hi_y = ys[0] - bw / 2, ys[-1] + bw / 2
    for x in xs:
        g.band(x - bw / 2, x + bw / 2, lo_y, hi_y)
    for y in ys:
        g.band(lo_x, hi_x, y - bw / 2, y + bw / 2)
    size = p["obstacle_size_m"]
    # blocks sit inside lattice holes, clear of the bands
    for (cx, cy) in [(0.5 * (xs[0] + xs[1]), 0.5 * (ys[0] + ys[1])),
                     (0.5 * (xs[-2] + xs[-1]), 0.5 * (ys[-2] + ys[-1])),
                     (0.5 * (xs[0] + xs[1]), 0.5 * (ys[-2] + ys[-1]))]:
        g.block(cx + _jitter(rng, 1.0), cy + _jitter(rng, 1.0), size,
                _obstacle_height(rng))
    return RobotPose(xs[0], max(2.0, lo_y - 4.0), p["spawn_z"], yaw=-90.0)


def _build_eshape(g: _GridPainter, p: dict, rng: np.random.Generator) -> RobotPose:
    w, h = p["width_m"], p["height_m"]
    wide = p["wide_band_m"]
    narrow = p["narrow_band_m"]
    jit = p["band_jitter_m"]
    x_spine = 0.2 * w + _jitter(rng, jit)
    x_end = 0.75 * w + _jitter(rng, jit)
    y_bot = 0.2 * h + _jitter(rng, jit)
    y_top = 0.8 * h + _jitter(rng, jit)
    g.band(x_spine - wide / 2, x_spine + wide / 2, y_bot - wide / 2, y_top + wide / 2)
    g.band(x_spine - wide / 2, x_end, y_bot - wide / 2, y_bot + wide / 2)
    g.band(x_spine - wide / 2, x_end, y_top - wide / 2, y_top + wide / 2)
    y_mid = 0.5 * (y_bot + y_top)
    g.band(x_spine - wide / 2, x_end - 0.1 * w, y_mid - narrow / 2, y_mid + narrow / 2)
    size = p["obstacle_size_m"]
    g.block(0.55 * w + _jitter(rng, 1.0), 0.5 * (y_bot + y_mid) + _jitter(rng, 1.0),
            size, _obstacle_height(rng))
    g.block(0.55 * w + _jitter(rng, 1.0), 0.5 * (y_mid + y_top) + _jitter(rng, 1.0),
            size, _obstacle_height(rng))
    # start at the open end of the lower bar, looking back along the reef
    return RobotPose(x_end - 3.0, y_bot, p["spawn_z"], yaw=180.0)


def _build_disconnected(g: _GridPainter, p: dict, rng: np.random.Generator) -> RobotPose:
    w, h = p["width_m"], p["height_m"]
    bw = p["band_width_m"]
    gap = p["gap_m"]
    jit = p["band_jitter_m"]
    gap_lo = 0.5 * w - gap / 2 + _jitter(rng, jit)
    gap_hi = gap_lo + gap
    y_bot = 0.25 * h + _jitter(rng, jit)
    y_top = 0.7 * h + _jitter(rng, jit)
    x_left = 0.12 * w + _jitter(rng, jit)
    x_right = 0.88 * w + _jitter(rng, jit)
    # left group: C opening right; right group: C opening left
    g.band(x_left, x_left + bw, y_bot, y_top + bw)
    g.band(x_left, gap_lo, y_bot, y_bot + bw)
    g.band(x_left, gap_lo, y_top, y_top + bw)
    g.band(x_right - bw, x_right, y_bot, y_top + bw)
    g.band(gap_hi, x_right, y_bot, y_bot + bw)
    g.band(gap_hi, x_right, y_top, y_top + bw)
    size = p["obstacle_size_m"]
    g.block(0.3 * w + _jitter(rng, 1.0), 0.5 * (y_bot + y_top) + _jitter(rng, 1.0),
            size, _obstacle_height(rng))
    g.block(0.7 * w + _jitter(rng, 1.0), 0.5 * (y_bot + y_top) + _jitter(rng, 1.0),
            size, _obstacle_height(rng))
    return RobotPose(x_left + bw / 2, y_bot + bw / 2, p["spawn_z"], yaw=0.0)


def _build_branching(g: _GridPainter, p: dict, rng: np.random.Generator) -> RobotPose:
    w, h = p["width_m"], p["height_m"]
    spine = p["spine_width_m"] + 3.0
    wide = p["wide_branch_m"]
    narrow = p["narrow_branch_m"]
    jit = p["band_jitter_m"]
    y_mid = 0.42 * h + _jitter(rng, jit)
    x0, x1 = 0.14 * w, 0.86 * w
    g.band(x0, x1, y_mid - spine / 2, y_mid + spine / 2)
    # stub branches short enough to stay inside the camera frustum of a
    # robot cruising the corridor, alternating wide and narrow per side
    up_len = 11.0
    fractions = [0.2, 0.29, 0.38, 0.47, 0.56, 0.65, 0.74, 0.8]
    for n, fx in enumerate(fractions):
        bx = fx * w + _jitter(rng, jit)
        bwidth = wide if n % 2 == 0 else narrow
        direction = +1 if n % 2 == 0 else -1
        tip = y_mid + direction * up_len
        if direction > 0:
            g.band(bx - bwidth / 2, bx + bwidth / 2, y_mid, tip)
        else:
            g.band(bx - bwidth / 2, bx + bwidth / 2, tip, y_mid)
    size = p["obstacle_size_m"]
    g.block(0.40 * w + _jitter(rng, 1.0), y_mid + 0.17 * h + _jitter(rng, 1.0),
            size, _obstacle_height(rng))
    g.block(0.60 * w + _jitter(rng, 1.0), y_mid - 0.17 * h + _jitter(rng, 1.0),
            size, _obstacle_height(rng))
    return RobotPose(x0 + 2.0, y_mid, p["spawn_z"], yaw=0.0)


def _build_rockreef(g: _GridPainter, p: dict, rng: np.random.Generator) -> RobotPose:
    w, h = p["width_m"], p["height_m"]
    wide = p["wide_band_m"]
    jit = p["band_jitter_m"]
    x_spine = 0.2 * w + _jitter(rng, jit)
    x_end = 0.78 * w + _jitter(rng, jit)
    y_bot = 0.22 * h + _jitter(rng, jit)
    y_top = 0.78 * h + _jitter(rng, jit)
    g.band(x_spine - wide / 2, x_spine + wide / 2, y_bot - wide / 2, y_top + wide / 2)
    g.band(x_spine - wide / 2, x_end, y_bot - wide / 2, y_bot + wide / 2)
    g.band(x_spine - wide / 2, x_end, y_top - wide / 2, y_top + wide / 2)
    size = p["obstacle_size_m"]
    g.block(0.55 * w + _jitter(rng, 1.0), 0.5 * h + _jitter(rng, 1.0),
            size, _obstacle_height(rng))
    g.block(0.35 * w + _jitter(rng, 1.0), 0.5 * h + _jitter(rng, 1.0),
            size, _obstacle_height(rng))
    return RobotPose(x_end - 3.0, y_bot, p["spawn_z"], yaw=180.0)


def _b64_floats(grid: np.ndarray) -> str:
    return base64.b64encode(grid.astype("<f4").tobytes()).decode("ascii")


def _b64_bits(grid: np.ndarray) -> str:
    return base64.b64encode(np.packbits(grid.reshape(-1)).tobytes()).decode("ascii")


def save_world(world: WorldMap, path, meta: dict | None = None) -> None:
    """Serialize to the versioned JSON world format (bit-exact round trip)."""
    doc = {
        "version": WORLD_FORMAT_VERSION,
        "width_m": world.width_m,
        "height_m": world.height_m,
        "cell_size": world.cell_size,
        "ooi_kind": world.ooi_kind,
        "obstacle_threshold": world.obstacle_threshold,
        "spawn_pose": world.spawn_pose.to_dict(),
        "height_grid": _b64_floats(world.height_grid),
        "ooi_grid": _b64_bits(world.ooi_grid),
    }
    if meta is not None:
        doc["meta"] = meta
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_world(path) -> WorldMap:
    """Parse a world file; raises WorldFormatError naming the bad field."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise WorldFormatError(f"unparseable world file: {exc}") from exc
    if not isinstance(doc, dict) or "version" not in doc:
        raise WorldFormatError("missing field: version")
    major = str(doc["version"]).split(".")[0]
    if major != WORLD_FORMAT_VERSION.split(".")[0]:
        raise WorldFormatError(f"unsupported world format version {doc['version']!r}")
    for key in ("width_m", "height_m", "cell_size", "ooi_kind", "spawn_pose",
                "height_grid", "ooi_grid"):
        if key not in doc:
            raise WorldFormatError(f"missing field: {key}")
    nx = int(math.ceil(float(doc["width_m"]) / float(doc["cell_size"])))
    ny = int(math.ceil(float(doc["height_m"]) / float(doc["cell_size"])))
    try:
        raw = base64.b64decode(doc["height_grid"], validate=True)
    except Exception as exc:
        raise WorldFormatError(f"height_grid: invalid base64 ({exc})") from exc
    if len(raw) != 4 * nx * ny:
        raise WorldFormatError(
            f"height_grid: expected {4 * nx * ny} bytes, got {len(raw)}")
    height = np.frombuffer(raw, dtype="<f4").reshape(ny, nx)
    try:
        rawbits = base64.b64decode(doc["ooi_grid"], validate=True)
    except Exception as exc:
        raise WorldFormatError(f"ooi_grid: invalid base64 ({exc})") from exc
    expected_bytes = (nx * ny + 7) // 8
    if len(rawbits) != expected_bytes:
        raise WorldFormatError(
            f"ooi_grid: expected {expected_bytes} bytes, got {len(rawbits)}")
    ooi = np.unpackbits(np.frombuffer(rawbits, dtype=np.uint8),
                        count=nx * ny).astype(bool).reshape(ny, nx)
    try:
        return WorldMap(
            width_m=float(doc["width_m"]), height_m=float(doc["height_m"]),
            cell_size=float(doc["cell_size"]), height_grid=height, ooi_grid=ooi,
            ooi_kind=str(doc["ooi_kind"]),
            spawn_pose=RobotPose.from_dict(doc["spawn_pose"]),
            obstacle_threshold=float(doc.get("obstacle_threshold",
                                             OBSTACLE_THRESHOLD_M)),
        )
    except WorldFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise WorldFormatError(f"invalid field content: {exc}") from exc


def with_ooi_kind(world: WorldMap, ooi_kind: str) -> WorldMap:
    """Copy of the world with only the OOI tag changed (geometry identical)."""
    return replace(world, ooi_kind=ooi_kind,
                   height_grid=world.height_grid.copy(),
                   ooi_grid=world.ooi_grid.copy())
