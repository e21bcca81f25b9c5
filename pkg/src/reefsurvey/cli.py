"""Command-line entry point for scripted reproduction of the pipeline.

Exit codes: 0 success, 2 usage error, 3 runtime failure. Every artifact
embeds the resolved config hash, the seed, and the tool version, so a
rerun with identical inputs is byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__, ir
from .config import RunConfig, apply_overrides, load_config
from .baselines import bcd_plan, brownian_bridge_walk
from .evaluation import (ALL_SCENARIOS, CompareConfig, compare, compute_metrics,
                         emit_report, jittered_spawn)
from .policy.dataset import LabeledSample, load_dataset, save_dataset
from .policy.expert import ExpertConfig
from .policy.net import INPUT_H, INPUT_W, load_model, save_model
from .policy.train import train_bc
from .sensor import CameraModel, nominal_footprint_width, render_with_footprint
from .simulate import (ExpertController, PathFollowController, PolicyController,
                       SimParams, run_episode, save_episode_log)
from .actuation import action_to_pwm_line
from .world import (RobotPose, ScenarioSpec, SCENARIO_IDS, generate_scenario,
                    load_world, save_world)


class UsageError(ValueError):
    pass


def _resolve_config(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    if args.set:
        config = apply_overrides(config, args.set)
    return config


def _parse_params(pairs: list[str]) -> dict:
    params = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise UsageError(f"scenario param {pair!r} is not key=value")
        key, _, value = pair.partition("=")
        params[key] = float(value)
    return params


def _expert_config(config: RunConfig, cam: CameraModel) -> ExpertConfig:
    e = config.expert
    return ExpertConfig(near_threshold=e.near_threshold,
                        obstacle_beta=e.obstacle_beta,
                        climb_fracs=e.climb_fracs,
                        altitude_low_m=e.altitude_low_m,
                        altitude_high_m=e.altitude_high_m,
                        max_range_m=cam.max_range,
                        delta_yaw=e.delta_yaw, delta_pitch=e.delta_pitch)


def cmd_gen_world(args) -> int:
    config = _resolve_config(args)
    spec = ScenarioSpec(args.scenario, seed=args.seed,
                        params=_parse_params(args.param))
    world = generate_scenario(spec)
    save_world(world, args.output, meta={
        "config_hash": config.hash(), "seed": args.seed,
        "tool_version": __version__, "scenario": spec.to_dict()})
    print(f"wrote {args.output} ({world.nx}x{world.ny} cells, "
          f"ooi {world.ooi_grid.mean() * 100:.1f}%)")
    return 0


def cmd_render(args) -> int:
    config = _resolve_config(args)
    world = load_world(args.world)
    pose = world.spawn_pose
    if args.pose:
        vals = [float(v) for v in args.pose.split(",")]
        if len(vals) != 5:
            raise UsageError("--pose expects x,y,z,yaw,pitch")
        pose = RobotPose(*vals)
    cam = config.camera
    frame, _ = render_with_footprint(world, pose, cam)
    frame.segdepth = ir.compose_segdepth(frame.seg, frame.depth)
    from .sensor import export_frame
    export_frame(frame, args.output, pose=pose, cam=cam)
    print(f"wrote {args.output}_seg.png, _depth.png, _segdepth.png")
    return 0


def _expert_label_samples(world, config: RunConfig, steps: int,
                          seed: int, scenario_id: str) -> list[LabeledSample]:
    cam = config.eval_camera()
    expert_cfg = _expert_config(config, cam)
    controller = ExpertController(expert_cfg)
    samples: list[LabeledSample] = []
    episode_seed = seed
    while len(samples) < steps:
        spawn = jittered_spawn(world, episode_seed,
                               config.harness.spawn_jitter_m,
                               config.harness.spawn_jitter_yaw)
        needed = steps - len(samples)

        def sink(step, pose, frame, _needed=needed):
            if len(samples) < steps:
                small = ir.downsample(frame.segdepth, INPUT_W, INPUT_H)
                action = controller.act(frame, pose)
                samples.append(LabeledSample(
                    image=small, c_yaw=action.c_yaw, c_pitch=action.c_pitch,
                    provenance="expert", scenario_id=scenario_id, step=step))

        run_episode(world, controller, config.sim, seed=episode_seed,
                    cam=cam, start_pose=spawn, frame_sink=sink)
        episode_seed += 1
    return samples[:steps]


def cmd_expert_label(args) -> int:
    config = _resolve_config(args)
    if args.world:
        world = load_world(args.world)
        scenario_id = os.path.basename(args.world)
    else:
        world = generate_scenario(ScenarioSpec(args.scenario, seed=args.seed))
        scenario_id = args.scenario
    samples = _expert_label_samples(world, config, args.steps, args.seed,
                                    scenario_id)
    summary = save_dataset(samples, args.output, meta=config.meta(args.seed))
    print(f"wrote {summary.count} labeled samples to {args.output}")
    print(f"yaw histogram:   {summary.yaw_histogram}")
    print(f"pitch histogram: {summary.pitch_histogram}")
    return 0


def cmd_train(args) -> int:
    config = _resolve_config(args)
    dataset = load_dataset(args.dataset)
    t = config.trainer
    val = None
    train_set = dataset
    if args.val_dataset:
        val = load_dataset(args.val_dataset)
    elif t.val_fraction > 0 and len(dataset) >= 10:
        n_val = int(len(dataset) * t.val_fraction)
        rng = np.random.default_rng(t.seed)
        order = rng.permutation(len(dataset))
        val = [dataset[i] for i in order[:n_val]]
        train_set = [dataset[i] for i in order[n_val:]]
    model, report = train_bc(train_set, epochs=t.epochs, lr=t.lr,
                             batch=t.batch, seed=t.seed, lam=t.lam, val=val,
                             min_samples=t.min_samples)
    save_model(model, args.output, meta=config.meta(t.seed))
    print(f"train loss {report.train_loss:.4f}"
          + (f", val loss {report.val_loss:.4f}" if report.val_loss else ""))
    for split, acc in report.accuracy.items():
        print(f"{split}: yaw {acc['yaw_exact']:.3f} exact / "
              f"{acc['yaw_within1']:.3f} within1, "
              f"pitch {acc['pitch_exact']:.3f} exact / "
              f"{acc['pitch_within1']:.3f} within1")
    return 0


def cmd_run(args) -> int:
    config = _resolve_config(args)
    world = load_world(args.world)
    cam = config.eval_camera()
    params = config.sim
    spawn = jittered_spawn(world, args.seed, config.harness.spawn_jitter_m,
                           config.harness.spawn_jitter_yaw)
    if args.method == "expert":
        controller = ExpertController(_expert_config(config, cam))
    elif args.method == "policy":
        if not args.model:
            raise UsageError("--model is required for --method policy")
        controller = PolicyController(load_model(args.model))
    elif args.method == "bb":
        p = config.planner
        plan = brownian_bridge_walk(
            world, (spawn.x, spawn.y), total_steps=p.total_steps,
            waypoint_count=p.waypoint_count, sigma=p.sigma, seed=args.seed,
            border_margin=p.border_margin_m, plan_clearance=p.plan_clearance_m)
        controller = PathFollowController(plan, params)
    elif args.method == "bcd":
        p = config.planner
        spacing = p.lane_spacing_m or nominal_footprint_width(cam, spawn.z)
        plan = bcd_plan(world, (spawn.x, spawn.y), lane_spacing=spacing,
                        turn_margin=p.turn_margin_m, clearance=p.clearance_m,
                        border_margin=p.border_margin_m,
                        plan_clearance=p.plan_clearance_m)
        controller = PathFollowController(plan, params)
    else:
        raise UsageError(f"unknown method {args.method!r}")
    log = run_episode(world, controller, params, seed=args.seed, cam=cam,
                      start_pose=spawn, budget_m=args.budget)
    save_episode_log(log, args.output, meta=config.meta(args.seed))
    metrics = compute_metrics(world, log, cam)
    print(f"status={log.status} steps={len(log.records)} "
          f"distance={metrics.distance_m:.1f} m "
          f"over_ooi={metrics.distance_over_ooi_m:.1f} m "
          f"pct_ooi_seen={metrics.pct_ooi_seen:.3f}")
    return 0


def cmd_compare(args) -> int:
    config = _resolve_config(args)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if args.scenarios == "all":
        scenarios = list(ALL_SCENARIOS)
    else:
        scenarios = [s.strip() for s in args.scenarios.split(",") if s.strip()]
        for s in scenarios:
            if s not in SCENARIO_IDS:
                raise UsageError(f"unknown scenario {s!r}")
    model = load_model(args.model) if args.model else None
    ccfg = CompareConfig(budget_m=args.budget, cam=config.eval_camera(),
                         sim=config.sim, expert=config.expert,
                         lane_spacing=config.planner.lane_spacing_m)
    result = compare(methods, scenarios, args.seeds,
                     distance_budget=args.budget, cfg=ccfg, model=model,
                     parallel=args.parallel)
    paths = emit_report(result, args.out_dir, meta=config.meta())
    print(result.summary_text())
    print(f"report written to {paths['csv']}, {paths['json']}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app
    config = _resolve_config(args)
    ui_dir = args.ui_dir
    if ui_dir is None:
        bundled = os.path.join(os.path.dirname(os.path.dirname(
            os.path.dirname(os.path.abspath(__file__)))), "frontend", "dist")
        ui_dir = bundled if os.path.isdir(bundled) else None
    app = create_app(config, ui_dir=ui_dir,
                     action_interval_ms=args.action_interval_ms)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_pwm_dump(args) -> int:
    config = _resolve_config(args)
    lines = []
    if args.log:
        from .simulate import load_episode_log
        log = load_episode_log(args.log)
        for rec in log.records:
            lines.append(action_to_pwm_line(rec.step, rec.action.c_yaw,
                                            rec.action.c_pitch,
                                            config.actuation))
    else:
        lines.append(action_to_pwm_line(0, args.c_yaw, args.c_pitch,
                                        config.actuation))
    text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
        print(f"wrote {len(lines)} line(s) to {args.output}")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reefsurvey",
        description="seafloor survey workbench: worlds, rendering, policies, "
                    "baselines, and the comparison harness")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--set", action="append", default=[],
                       metavar="SECTION.KEY=VALUE",
                       help="override a config entry")

    p = sub.add_parser("gen-world", help="generate a scenario world file")
    common(p)
    p.add_argument("--scenario", required=True, choices=SCENARIO_IDS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen_world)

    p = sub.add_parser("render", help="render one frame from a world")
    common(p)
    p.add_argument("--world", required=True)
    p.add_argument("--pose", help="x,y,z,yaw,pitch (default: spawn pose)")
    p.add_argument("-o", "--output", required=True, help="output stem")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("expert-label",
                       help="generate an expert-labeled dataset")
    common(p)
    p.add_argument("--world")
    p.add_argument("--scenario", choices=SCENARIO_IDS, default="gridworld")
    p.add_argument("--steps", type=int, required=True,
                   help="number of labeled samples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True, help="dataset directory")
    p.set_defaults(func=cmd_expert_label)

    p = sub.add_parser("train", help="behavior-clone a policy from a dataset")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--val-dataset")
    p.add_argument("-o", "--output", required=True, help="model file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("run", help="run one episode")
    common(p)
    p.add_argument("--world", required=True)
    p.add_argument("--method", required=True,
                   choices=["expert", "policy", "bb", "bcd"])
    p.add_argument("--model", help="model file (policy method)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=float, default=None,
                   help="distance budget in meters")
    p.add_argument("-o", "--output", required=True, help="episode log JSONL")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="multi-method comparison harness")
    common(p)
    p.add_argument("--methods", required=True,
                   help="comma list of expert,policy,bb,bcd")
    p.add_argument("--scenarios", default="all",
                   help="'all' or comma list of scenario ids")
    p.add_argument("--seeds", type=int, default=10)
    p.add_argument("--budget", type=float, default=300.0)
    p.add_argument("--model", help="model file (policy method)")
    p.add_argument("--parallel", type=int, default=1)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("serve", help="run the labeling/teleop HTTP service")
    common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--ui-dir", help="static UI bundle directory")
    p.add_argument("--action-interval-ms", type=int, default=250)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("pwm-dump", help="dump thruster PWM lines")
    common(p)
    p.add_argument("--c-yaw", type=int, default=3)
    p.add_argument("--c-pitch", type=int, default=3)
    p.add_argument("--log", help="episode log to convert")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_pwm_dump)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
