"""Single configuration tree echoed into every artifact for provenance.

The same JSON shape is accepted everywhere (config file, CLI overrides),
unknown keys are rejected, and the canonical hash of the resolved config
is embedded in run artifacts so reruns can be compared byte for byte.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields

from . import __version__
from .actuation import ActuationParams
from .baselines import (DEFAULT_BORDER_MARGIN_M, DEFAULT_CLEARANCE_M,
                        DEFAULT_PLAN_CLEARANCE_M, DEFAULT_SIGMA,
                        DEFAULT_TOTAL_STEPS, DEFAULT_TURN_MARGIN_M,
                        DEFAULT_WAYPOINTS)
from .evaluation import DEFAULT_BUDGET_M
from .policy.expert import ExpertConfig
from .sensor import CameraModel
from .simulate import SimParams


@dataclass
class TrainerConfig:
    epochs: int = 30
    lr: float = 1e-3
    batch: int = 32
    lam: float = 0.1
    seed: int = 0
    val_fraction: float = 0.2
    min_samples: int = 100


@dataclass
class PlannerConfig:
    sigma: float = DEFAULT_SIGMA
    waypoint_count: int = DEFAULT_WAYPOINTS
    total_steps: int = DEFAULT_TOTAL_STEPS
    turn_margin_m: float = DEFAULT_TURN_MARGIN_M
    clearance_m: float = DEFAULT_CLEARANCE_M
    border_margin_m: float = DEFAULT_BORDER_MARGIN_M
    plan_clearance_m: float = DEFAULT_PLAN_CLEARANCE_M
    lane_spacing_m: float | None = None   # None: footprint width at spawn z


@dataclass
class HarnessConfig:
    budget_m: float = DEFAULT_BUDGET_M
    eval_image: int = 128                 # eval camera resolution (square)
    spawn_jitter_m: float = 1.0
    spawn_jitter_yaw: float = 10.0


@dataclass
class RunConfig:
    camera: CameraModel = field(default_factory=CameraModel)
    sim: SimParams = field(default_factory=SimParams)
    expert: ExpertConfig = field(default_factory=ExpertConfig)
    trainer: TrainerConfig = field(default_factory=TrainerConfig)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    harness: HarnessConfig = field(default_factory=HarnessConfig)
    actuation: ActuationParams = field(default_factory=ActuationParams)

    def eval_camera(self) -> CameraModel:
        return CameraModel(hfov=self.camera.hfov, vfov=self.camera.vfov,
                           image_w=self.harness.eval_image,
                           image_h=self.harness.eval_image,
                           boresight_tilt=self.camera.boresight_tilt,
                           max_range=self.camera.max_range)

    def to_dict(self) -> dict:
        return asdict(self)

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]

    def meta(self, seed: int | None = None) -> dict:
        meta = {"config_hash": self.hash(), "tool_version": __version__,
                "config": self.to_dict()}
        if seed is not None:
            meta["seed"] = seed
        return meta


_SECTIONS = {f.name: f.type for f in fields(RunConfig)}


def _apply_section(cls, defaults, overrides: dict, path: str):
    known = {f.name for f in fields(cls)}
    unknown = set(overrides) - known
    if unknown:
        raise ValueError(f"unknown config key(s) under {path}: "
                         f"{', '.join(sorted(unknown))}")
    merged = {**{f.name: getattr(defaults, f.name) for f in fields(cls)},
              **overrides}
    if "climb_fracs" in merged and isinstance(merged["climb_fracs"], list):
        merged["climb_fracs"] = tuple(merged["climb_fracs"])
    return cls(**merged)


def config_from_dict(doc: dict) -> RunConfig:
    """Build a RunConfig from a (possibly partial) nested dict."""
    if not isinstance(doc, dict):
        raise ValueError("config document must be a JSON object")
    unknown = set(doc) - set(_SECTIONS)
    if unknown:
        raise ValueError(f"unknown config section(s): {', '.join(sorted(unknown))}")
    base = RunConfig()
    kwargs = {}
    classes = {"camera": CameraModel, "sim": SimParams, "expert": ExpertConfig,
               "trainer": TrainerConfig, "planner": PlannerConfig,
               "harness": HarnessConfig, "actuation": ActuationParams}
    for name, cls in classes.items():
        overrides = doc.get(name, {})
        kwargs[name] = _apply_section(cls, getattr(base, name), overrides, name)
    return RunConfig(**kwargs)


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))


def apply_overrides(config: RunConfig, assignments: list[str]) -> RunConfig:
    """Apply ``section.key=value`` strings on top of a config."""
    doc = config.to_dict()
    for assignment in assignments:
        if "=" not in assignment:
            raise ValueError(f"override {assignment!r} is not key=value")
        key, _, raw = assignment.partition("=")
        parts = key.strip().split(".")
        if len(parts) != 2:
            raise ValueError(f"override key {key!r} must be section.field")
        section, name = parts
        if section not in doc:
            raise ValueError(f"unknown config section {section!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        doc[section][name] = value
    return config_from_dict(doc)
