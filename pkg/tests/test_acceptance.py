"""End-to-end acceptance suite.

Each criterion is one test; the conftest terminal hook prints one PASS/FAIL
line per criterion at the end of the run. The expensive artifacts (the
labeled dataset, the trained policy, the comparison sweep) are built once
per session and shared.
"""

import hashlib
import importlib.resources
import json
import math
import os
import statistics
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from reefsurvey import ir
from reefsurvey.baselines import bcd_decompose, bcd_plan, sample_bridge
from reefsurvey.cli import _expert_label_samples, main
from reefsurvey.config import RunConfig, apply_overrides
from reefsurvey.evaluation import (CompareConfig, OYSTER_SCENARIOS, compare,
                                   compute_metrics)
from reefsurvey.policy.actions import decode_action, smooth_label
from reefsurvey.policy.dataset import load_dataset
from reefsurvey.policy.loss import (entropy, kl_divergence, loss,
                                    loss_gradient, loss_terms)
from reefsurvey.policy.train import train_bc
from reefsurvey.actuation import ActuationParams, velocity_to_pwm
from reefsurvey.sensor import CameraModel, nominal_footprint_width
from reefsurvey.service import create_app
from reefsurvey.simulate import (PathFollowController, PolicyController,
                                 SimParams, run_episode)
from reefsurvey.world import ScenarioSpec, generate_scenario, with_ooi_kind

from conftest import flat_world

EVAL_CAM = CameraModel(image_w=128, image_h=128)
BUDGET_M = 300.0
SEEDS = 10

pytestmark = pytest.mark.slow


@pytest.fixture(scope="session")
def trained_policy():
    """2,500 expert-labeled GridWorld frames; 2,000 train / 500 held out."""
    config = RunConfig()
    world = generate_scenario(ScenarioSpec("gridworld", seed=0))
    t0 = time.time()
    samples = _expert_label_samples(world, config, 2500, seed=0,
                                    scenario_id="gridworld")
    dataset_seconds = time.time() - t0
    t0 = time.time()
    model, report = train_bc(samples[:2000], epochs=30, lr=1e-3, batch=32,
                             seed=0, val=samples[2000:])
    train_seconds = time.time() - t0
    return {"model": model, "report": report,
            "dataset_seconds": dataset_seconds,
            "train_seconds": train_seconds}


@pytest.fixture(scope="session")
def oyster_comparison():
    """expert/bb/bcd over the four oyster scenarios x 10 seeds, one budget."""
    cfg = CompareConfig(budget_m=BUDGET_M, cam=EVAL_CAM)
    t0 = time.time()
    result = compare(["expert", "bb", "bcd"], list(OYSTER_SCENARIOS),
                     seeds=SEEDS, distance_budget=BUDGET_M, cfg=cfg)
    return {"result": result, "seconds": time.time() - t0}


class TestA1SegdepthConformance:
    def test_a1_alg1_conformance(self):
        rng = np.random.default_rng(2024)
        t0 = time.time()
        for _ in range(1000):
            seg = rng.random((256, 256)) < 0.25
            depth = rng.integers(0, 256, size=(256, 256), dtype=np.uint8)
            out = ir.compose_segdepth(seg, depth)
            gray = (out[..., 0] == out[..., 1]) & (out[..., 1] == out[..., 2])
            # disjoint support: gray exactly on non-OOI, LUT color on OOI
            assert np.array_equal(~gray, seg)
            assert np.array_equal(out[~seg][:, 0], depth[~seg])
            assert np.array_equal(out[seg], ir.LUT[depth[seg]])
            # exact reconstruction of both planes
            assert np.array_equal(ir.recover_seg(out), seg)
            assert np.array_equal(ir.recover_depth(out), depth)
        elapsed = time.time() - t0
        ref = importlib.resources.files("reefsurvey").joinpath(
            "data/colormap_lut.csv")
        assert np.array_equal(ir._parse_lut_csv(ref.read_text()), ir.LUT)
        assert elapsed < 10.0, f"A1 took {elapsed:.1f}s"


class TestA2LossGradient:
    def test_a2_loss_gradient(self):
        rng = np.random.default_rng(7)
        t0 = time.time()
        h = 1e-5
        worst = 0.0
        for _ in range(100):
            pred = rng.random(7) + 0.05
            pred /= pred.sum()
            target = rng.random(7) + 0.05
            target /= target.sum()
            lam = float(rng.random())
            grad = loss_gradient(pred, target, lam)
            for i in range(7):
                bump = np.zeros(7)
                bump[i] = h
                numeric = (loss_terms(pred + bump, target, lam)
                           - loss_terms(pred - bump, target, lam)) / (2 * h)
                worst = max(worst, abs(numeric - grad[i])
                            / max(abs(numeric), 1e-12))
            g0 = loss_gradient(pred, target, 0.0)
            g01 = loss_gradient(pred, target, 0.1)
            g1 = loss_gradient(pred, target, 1.0)
            assert np.max(np.abs(g0 - g01)) < 1e-12
            assert np.max(np.abs(g1 - g01)) < 1e-12
        assert worst < 1e-4, f"max relative gradient error {worst:.2e}"
        # pred = target: KL exactly zero, total is lam * sum of entropies
        for cy, cp in [(0, 3), (3, 6), (5, 1)]:
            t_yaw, t_pitch = smooth_label(cy), smooth_label(cp)
            assert kl_divergence(t_yaw, t_yaw) == 0.0
            value = loss(t_yaw, t_pitch, t_yaw, t_pitch, 0.1)
            assert value == pytest.approx(
                0.1 * (entropy(t_yaw) + entropy(t_pitch)), abs=1e-14)
        elapsed = time.time() - t0
        assert elapsed < 5.0, f"A2 took {elapsed:.1f}s"


class TestA3ActionActuationTables:
    def test_a3_action_actuation_tables(self):
        assert [decode_action(c, 5.0) for c in range(7)] == \
            [15.0, 10.0, 5.0, 0.0, -5.0, -10.0, -15.0]
        assert [decode_action(c, 2.0) for c in range(7)] == \
            [6.0, 4.0, 2.0, 0.0, -2.0, -4.0, -6.0]
        params = ActuationParams()
        assert velocity_to_pwm(0.0, "yaw", params) == 1500
        assert velocity_to_pwm(0.0, "surge", params) == 1500
        # clamp and monotonicity across the velocity sweep
        previous = None
        for v in np.linspace(-30, 30, 601):
            pwm = velocity_to_pwm(float(v), "yaw", params)
            assert params.pwm_min <= pwm <= params.pwm_max
            if previous is not None:
                assert pwm >= previous
            previous = pwm
        assert velocity_to_pwm(100.0, "yaw", params) == params.pwm_max
        assert velocity_to_pwm(-100.0, "yaw", params) == params.pwm_min


class TestA4BehaviorCloning:
    def test_a4_behavior_cloning(self, trained_policy):
        report = trained_policy["report"]
        acc = report.accuracy["val"]
        assert acc["yaw_exact"] >= 0.60
        assert acc["pitch_exact"] >= 0.60
        assert acc["yaw_within1"] >= 0.90
        assert acc["pitch_within1"] >= 0.90
        total = trained_policy["dataset_seconds"] + trained_policy["train_seconds"]
        assert total < 600.0, f"A4 pipeline took {total:.0f}s"


class TestA5ComparativeStudy:
    def test_a5_comparative_study(self, oyster_comparison):
        result = oyster_comparison["result"]
        means = result.method_means(scenarios=OYSTER_SCENARIOS)
        expert_pct = means["expert"]["pct_ooi_seen"]
        bb_pct = means["bb"]["pct_ooi_seen"]
        expert_eff = means["expert"]["efficiency_per_m"]
        bcd_eff = means["bcd"]["efficiency_per_m"]
        print("\n" + result.summary_text())
        print(f"expert/bb pct ratio: {expert_pct / bb_pct:.2f}")
        print(f"expert eff {expert_eff:.5f}/m vs bcd eff {bcd_eff:.5f}/m")
        # reference points from the source study (not asserted): at equal
        # distance the informed surveyor found ~36% more targets than
        # complete coverage; here:
        bcd_pct = means["bcd"]["pct_ooi_seen"]
        print(f"informational: expert sees {100 * (expert_pct - bcd_pct) / bcd_pct:+.0f}% "
              f"vs budget-truncated complete coverage")
        assert expert_pct >= 1.2 * bb_pct
        assert expert_eff >= bcd_eff
        assert oyster_comparison["seconds"] < 900.0, \
            f"A5 sweep took {oyster_comparison['seconds']:.0f}s"


class TestA6BcdCompleteness:
    def test_a6_bcd_completeness(self):
        # partition property and the centered-obstacle count
        box = flat_world(width=20, height=20, blocks=[(8, 8, 12, 12, 7.0)])
        assert len(bcd_decompose(box)) == 4
        for scenario in OYSTER_SCENARIOS:
            world = generate_scenario(ScenarioSpec(scenario, seed=0))
            cells = bcd_decompose(world)
            covered = np.zeros((world.ny, world.nx), dtype=int)
            for cell in cells:
                for col, (lo, hi) in cell.slices.items():
                    covered[lo:hi, col] += 1
            assert np.array_equal(covered > 0, ~world.obstacle_grid)
            assert covered.max() == 1
            # full coverage playback sees at least 95% of the OOI
            spawn = world.spawn_pose
            spacing = nominal_footprint_width(EVAL_CAM, spawn.z)
            plan = bcd_plan(world, (spawn.x, spawn.y), lane_spacing=spacing)
            params = SimParams(max_steps=3000)
            log = run_episode(world, PathFollowController(plan, params),
                              params, cam=EVAL_CAM, start_pose=spawn)
            pct = (log.seen_mask & world.ooi_grid).sum() / world.ooi_grid.sum()
            print(f"\nbcd full coverage on {scenario}: {pct:.3f} ({log.status})")
            assert log.status == "plan_complete"
            assert pct >= 0.95


class TestA7BrownianBridge:
    def test_a7_brownian_bridge(self):
        rng = np.random.default_rng(99)
        for _ in range(200):
            a = rng.uniform(0, 50, 2)
            b = rng.uniform(0, 50, 2)
            points = sample_bridge(a, b, steps=64, sigma=0.9, rng=rng)
            assert np.array_equal(points[0], a)
            assert np.array_equal(points[-1], b)
        sigma, steps, n = 0.5, 100, 10_000
        mids = np.empty((n, 2))
        for k in range(n):
            mids[k] = sample_bridge((0.0, 0.0), (0.0, 0.0), steps, sigma,
                                    rng)[steps // 2]
        expected = sigma ** 2 * steps / 4.0
        for axis in range(2):
            observed = mids[:, axis].var()
            assert abs(observed - expected) / expected < 0.10


class TestA8DomainInvariance:
    def test_a8_domain_invariance(self, trained_policy):
        model = trained_policy["model"]
        rock = generate_scenario(ScenarioSpec("rockreef", seed=1))
        oyster_tagged = with_ooi_kind(rock, "oyster")
        params = SimParams(max_steps=60)

        def actions_and_frames(world):
            frames = []
            controller = PolicyController(model)
            log = run_episode(world, controller, params, cam=EVAL_CAM,
                              frame_sink=lambda s, p, f:
                              frames.append(f.segdepth.copy())
                              if s < 3 else None)
            return [(r.action.c_yaw, r.action.c_pitch)
                    for r in log.records], frames

        rock_actions, rock_frames = actions_and_frames(rock)
        oyster_actions, oyster_frames = actions_and_frames(oyster_tagged)
        # identical geometry, different ooi_kind: bit-identical IR stream
        # and bit-identical action sequence
        for fa, fb in zip(rock_frames, oyster_frames):
            assert np.array_equal(fa, fb)
        assert rock_actions == oyster_actions
        assert len(rock_actions) > 0

        cfg = CompareConfig(budget_m=BUDGET_M, cam=EVAL_CAM)
        result = compare(["policy", "bb"], ["rockreef"], seeds=SEEDS,
                         distance_budget=BUDGET_M, cfg=cfg, model=model)
        means = result.method_means()
        policy_pct = means["policy"]["pct_ooi_seen"]
        bb_pct = means["bb"]["pct_ooi_seen"]
        print(f"\nrockreef: policy {policy_pct:.3f} vs bb {bb_pct:.3f} "
              f"(ratio {policy_pct / bb_pct:.2f})")
        assert policy_pct >= 1.2 * bb_pct


def _tree_hashes(root):
    hashes = {}
    for base, _, files in sorted(os.walk(root)):
        for name in sorted(files):
            path = os.path.join(base, name)
            rel = os.path.relpath(path, root)
            hashes[rel] = hashlib.sha256(open(path, "rb").read()).hexdigest()
    return hashes


class TestA9Determinism:
    def test_a9_cli_determinism(self, tmp_path):
        def pipeline(root):
            os.makedirs(root)
            world = os.path.join(root, "world.json")
            assert main(["gen-world", "--scenario", "eshape", "--seed", "0",
                         "-o", world]) == 0
            dataset = os.path.join(root, "dataset")
            assert main(["expert-label", "--world", world, "--steps", "120",
                         "--seed", "1", "-o", dataset]) == 0
            model = os.path.join(root, "model.json")
            assert main(["train", "--dataset", dataset, "-o", model,
                         "--set", "trainer.epochs=2",
                         "--set", "trainer.min_samples=96",
                         "--set", "trainer.val_fraction=0.2"]) == 0
            log = os.path.join(root, "episode.jsonl")
            assert main(["run", "--world", world, "--method", "policy",
                         "--model", model, "--seed", "2", "--budget", "60",
                         "-o", log]) == 0
            report = os.path.join(root, "report")
            assert main(["compare", "--methods", "expert,bb", "--scenarios",
                         "eshape", "--seeds", "2", "--budget", "60",
                         "--out-dir", report]) == 0
            pwm = os.path.join(root, "pwm.txt")
            assert main(["pwm-dump", "--log", log, "-o", pwm]) == 0

        first = tmp_path / "first"
        second = tmp_path / "second"
        pipeline(str(first))
        pipeline(str(second))
        hashes_first = _tree_hashes(first)
        hashes_second = _tree_hashes(second)
        assert hashes_first.keys() == hashes_second.keys()
        mismatched = [rel for rel in hashes_first
                      if hashes_first[rel] != hashes_second[rel]]
        assert mismatched == []


class TestA10LabelingRoundTrip:
    def test_a10_labeling_round_trip(self, tmp_path):
        config = apply_overrides(RunConfig(), ["camera.image_w=64",
                                               "camera.image_h=64"])
        app = create_app(config, action_interval_ms=0)
        rng = np.random.default_rng(42)
        # keystroke script: mostly hold-course with occasional turns
        keystrokes = [(int(rng.integers(0, 7)) if rng.random() < 0.3 else 3,
                       int(rng.integers(2, 5))) for _ in range(50)]
        with TestClient(app) as client:
            r = client.post("/sessions", json={"scenario": "gridworld",
                                               "seed": 0, "mode": "label"})
            sid = r.json()["session_id"]
            for step, (cy, cp) in enumerate(keystrokes):
                r = client.post(f"/sessions/{sid}/label",
                                json={"c_yaw": cy, "c_pitch": cp,
                                      "step": step})
                assert r.status_code == 200, r.text
            out = tmp_path / "labels"
            r = client.post(f"/sessions/{sid}/export",
                            json={"path": str(out)})
            body = r.json()
        assert body["count"] == 50
        expected_yaw = [0] * 7
        expected_pitch = [0] * 7
        for cy, cp in keystrokes:
            expected_yaw[cy] += 1
            expected_pitch[cp] += 1
        assert body["yaw_histogram"] == expected_yaw
        assert body["pitch_histogram"] == expected_pitch
        samples = load_dataset(out)
        assert [(s.c_yaw, s.c_pitch) for s in samples] == keystrokes
        model, report = train_bc(samples, epochs=1, batch=10, min_samples=50)
        assert np.isfinite(report.train_loss)


class TestA11TeleopLoop:
    def test_a11_teleop_loop(self):
        config = apply_overrides(RunConfig(), ["camera.image_w=64",
                                               "camera.image_h=64"])
        app = create_app(config, action_interval_ms=0)
        latencies = []
        with TestClient(app) as client:
            r = client.post("/sessions", json={"scenario": "gridworld",
                                               "seed": 0, "mode": "teleop"})
            sid = r.json()["session_id"]
            steps_seen = []
            for k in range(500):
                t0 = time.perf_counter()
                # gentle constant turn keeps the circuit inside the map
                r = client.post(f"/sessions/{sid}/action",
                                json={"c_yaw": 1, "c_pitch": 3, "step": k})
                latencies.append(time.perf_counter() - t0)
                assert r.status_code == 200, f"step {k}: {r.text}"
                body = r.json()
                assert body["finished"] is False
                steps_seen.append(body["step"])
            stats = client.get(f"/sessions/{sid}/stats").json()
        # no lost or duplicated steps: strictly consecutive counter
        assert steps_seen == list(range(1, 501))
        assert stats["step"] == 500
        median_ms = statistics.median(latencies) * 1000.0
        print(f"\nteleop median round trip: {median_ms:.1f} ms")
        assert median_ms < 200.0
        # the deployed rate limit rejects a burst, then recovers
        app_limited = create_app(config, action_interval_ms=150)
        with TestClient(app_limited) as client:
            r = client.post("/sessions", json={"scenario": "gridworld",
                                               "seed": 0, "mode": "teleop"})
            sid = r.json()["session_id"]
            assert client.post(f"/sessions/{sid}/action",
                               json={"c_yaw": 3, "c_pitch": 3}).status_code == 200
            assert client.post(f"/sessions/{sid}/action",
                               json={"c_yaw": 3, "c_pitch": 3}).status_code == 429
            time.sleep(0.16)
            assert client.post(f"/sessions/{sid}/action",
                               json={"c_yaw": 3, "c_pitch": 3}).status_code == 200
