import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reefsurvey.policy.actions import ActionClass, decode_action, smooth_label
from reefsurvey.policy.loss import (entropy, kl_divergence, loss,
                                    loss_gradient, loss_terms)


def random_simplex(rng, floor=0.05):
    # floor keeps entries well away from the 1e-5 step of the central
    # difference so truncation error stays below the 1e-4 tolerance
    v = rng.random(7) + floor
    return v / v.sum()


class TestDecode:
    def test_class_table(self):
        assert [decode_action(c, 5.0) for c in range(7)] == \
            [15.0, 10.0, 5.0, 0.0, -5.0, -10.0, -15.0]

    def test_no_op_class(self):
        assert decode_action(3, 5.0) == 0.0

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            decode_action(7, 5.0)
        with pytest.raises(ValueError):
            ActionClass(c_yaw=-1, c_pitch=3)

    def test_action_class_changes(self):
        action = ActionClass(0, 6)
        assert action.yaw_change == 15.0
        assert action.pitch_change == -15.0


class TestSmoothing:
    def test_interior(self):
        assert np.allclose(smooth_label(3), [0, 0, 0.1, 0.8, 0.1, 0, 0])

    def test_edge_folds(self):
        assert np.allclose(smooth_label(0), [0.9, 0.1, 0, 0, 0, 0, 0])
        assert np.allclose(smooth_label(6), [0, 0, 0, 0, 0, 0.1, 0.9])

    @pytest.mark.parametrize("c", range(7))
    def test_sums_to_one(self, c):
        assert smooth_label(c).sum() == pytest.approx(1.0, abs=1e-12)


class TestLoss:
    def test_pred_equals_target_leaves_only_entropy_term(self):
        lam = 0.1
        t_yaw = smooth_label(2)
        t_pitch = smooth_label(5)
        value = loss(t_yaw, t_pitch, t_yaw, t_pitch, lam)
        assert kl_divergence(t_yaw, t_yaw) == 0.0
        assert kl_divergence(t_pitch, t_pitch) == 0.0
        expected = lam * (entropy(t_yaw) + entropy(t_pitch))
        assert value == pytest.approx(expected, abs=1e-14)

    def test_uniform_prediction_of_one_hot(self):
        one_hot = np.zeros(7)
        one_hot[4] = 1.0
        uniform = np.full(7, 1.0 / 7.0)
        value = loss(uniform, uniform, one_hot, one_hot, lam=0.1)
        assert value == pytest.approx(2 * math.log(7), rel=1e-12)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(42)
        h = 1e-5
        worst = 0.0
        for _ in range(100):
            pred = random_simplex(rng)
            target = random_simplex(rng)
            lam = float(rng.random())
            grad = loss_gradient(pred, target, lam)
            for i in range(7):
                bump = np.zeros(7)
                bump[i] = h
                numeric = (loss_terms(pred + bump, target, lam)
                           - loss_terms(pred - bump, target, lam)) / (2 * h)
                rel = abs(numeric - grad[i]) / max(abs(numeric), 1e-12)
                worst = max(worst, rel)
        assert worst < 1e-4

    def test_gradient_identical_across_lambda(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            pred = random_simplex(rng)
            target = random_simplex(rng)
            g0 = loss_gradient(pred, target, 0.0)
            g01 = loss_gradient(pred, target, 0.1)
            g1 = loss_gradient(pred, target, 1.0)
            assert np.max(np.abs(g0 - g01)) < 1e-12
            assert np.max(np.abs(g1 - g01)) < 1e-12

    def test_non_simplex_rejected(self):
        good = smooth_label(3)
        bad = good * 1.01
        with pytest.raises(ValueError):
            loss(bad, good, good, good)
        with pytest.raises(ValueError):
            loss(good, good, good, -good)

    @given(st.integers(0, 6), st.integers(0, 6), st.floats(0.0, 1.0))
    @settings(max_examples=30, deadline=None)
    def test_loss_lower_bounded_by_entropy_term(self, cy, cp, lam):
        rng = np.random.default_rng(cy * 7 + cp)
        pred_y = random_simplex(rng)
        pred_p = random_simplex(rng)
        t_yaw = smooth_label(cy)
        t_pitch = smooth_label(cp)
        value = loss(pred_y, pred_p, t_yaw, t_pitch, lam)
        assert value >= lam * (entropy(t_yaw) + entropy(t_pitch)) - 1e-12
