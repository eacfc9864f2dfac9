import math

import numpy as np
import pytest

from elmnet.errors import InvalidConfigError
from elmnet.training import (CarrySchedule, LossConfig, OptimConfig,
                             OptimizerState, carry_policy, carry_prob,
                             clip_by_global_norm, loss_xent, optimizer_step,
                             regularization, schedule_factor, superspike)


class TestLossXent:
    def test_uniform_logits_give_log_vocab(self):
        for vocab in (2, 4, 19):
            logits = np.zeros((6, vocab))
            targets = np.arange(6) % vocab
            loss = loss_xent(logits, targets)
            assert loss == pytest.approx(math.log(vocab), rel=1e-12)
            # BPC of the uniform model is log2(V)
            assert loss / math.log(2) == pytest.approx(math.log2(vocab))

    def test_confident_correct_logits_drive_loss_to_zero(self):
        targets = np.array([1, 0])
        losses = []
        for gap in (2.0, 10.0, 40.0):
            logits = np.full((2, 3), -gap)
            logits[0, 1] = gap
            logits[1, 0] = gap
            losses.append(loss_xent(logits, targets))
        assert losses[0] > losses[1] > losses[2]
        assert losses[2] < 1e-10

    def test_hand_computed_smoothed_case(self):
        # V = 4, one example, smoothing 0.1: independent scalar evaluation.
        logits = np.array([[2.0, -1.0, 0.5, 0.0]])
        target = np.array([2])
        ls = 0.1
        z = np.exp(logits[0])
        log_probs = logits[0] - math.log(z.sum())
        q = np.full(4, ls / 4)
        q[2] += 1.0 - ls
        expected = -float(q @ log_probs)
        assert loss_xent(logits, target, ls) == pytest.approx(expected,
                                                              rel=1e-12)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        logits = rng.normal(size=(3, 5))
        targets = rng.integers(0, 5, size=3)
        _, grad = loss_xent(logits, targets, 0.07, with_grad=True)
        h = 1e-6
        for i in range(3):
            for j in range(5):
                logits[i, j] += h
                up = loss_xent(logits, targets, 0.07)
                logits[i, j] -= 2 * h
                down = loss_xent(logits, targets, 0.07)
                logits[i, j] += h
                assert grad[i, j] == pytest.approx((up - down) / (2 * h),
                                                   abs=1e-8)

    def test_empty_batch_rejected(self):
        with pytest.raises(InvalidConfigError):
            loss_xent(np.zeros((0, 3)), np.zeros(0, dtype=int))

    def test_bad_targets_rejected(self):
        with pytest.raises(InvalidConfigError):
            loss_xent(np.zeros((2, 3)), np.array([0, 3]))


class TestRegularization:
    def test_zero_activity_is_free(self):
        cfg = LossConfig(mlp_l2=0.5, act_l1=0.5)
        assert regularization(np.zeros(8), 0.0, cfg, 8) == 0.0

    def test_act_term_is_linear_in_coefficient(self):
        one = regularization(np.zeros(4), 0.2, LossConfig(act_l1=1.0), 4)
        two = regularization(np.zeros(4), 0.2, LossConfig(act_l1=2.0), 4)
        assert two == pytest.approx(2 * one)

    def test_constant_activity_case(self):
        # mean activity 0.1 at unit coefficient contributes exactly 0.1
        val = regularization(np.zeros(4), 0.1, LossConfig(act_l1=1.0), 4)
        assert val == pytest.approx(0.1)

    def test_mlp_term_squares_the_time_mean(self):
        cfg = LossConfig(mlp_l2=1.0)
        val = regularization(np.array([0.3, 0.1]), 0.0, cfg, 2)
        assert val == pytest.approx((0.09 + 0.01) / 2)

    def test_per_neuron_scaling_divides_by_width(self):
        cfg = LossConfig(act_l1=1.0, per_neuron_scaling=True)
        val = regularization(np.zeros(10), 0.5, cfg, 10)
        assert val == pytest.approx(0.05)


class TestSuperspike:
    def test_peak_at_zero(self):
        assert superspike(np.array(0.0)) == 1.0

    def test_even_function(self):
        v = np.array([0.03, -0.03])
        out = superspike(v)
        assert out[0] == out[1]

    def test_formula_point(self):
        assert superspike(np.array(0.01), scale=100.0) == pytest.approx(0.25)

    def test_scale_must_be_positive(self):
        with pytest.raises(InvalidConfigError):
            superspike(np.array(0.0), scale=0.0)


class TestOptimizer:
    def test_zero_gradients_leave_params_fixed(self):
        for algo in ("adam", "adamax"):
            params = {"w": np.array([1.0, -2.0])}
            state = OptimizerState()
            cfg = OptimConfig(algorithm=algo, lr=0.1, warmup_steps=0,
                              total_steps=10)
            for _ in range(3):
                optimizer_step(params, {"w": np.zeros(2)}, state, cfg)
            assert params["w"].tolist() == [1.0, -2.0]

    def test_clip_rescales_to_unit_norm(self):
        grads = {"a": np.array([6.0]), "b": np.array([8.0])}
        clipped, norm = clip_by_global_norm(grads, 1.0)
        assert norm == pytest.approx(10.0)
        assert clipped["a"][0] == pytest.approx(0.6)
        assert clipped["b"][0] == pytest.approx(0.8)
        total = math.sqrt(sum(float(g @ g) for g in clipped.values()))
        assert total == pytest.approx(1.0)

    def test_clip_never_increases_norm(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            grads = {"g": rng.normal(size=7) * rng.uniform(0.01, 10)}
            before = float(np.linalg.norm(grads["g"]))
            clipped, _ = clip_by_global_norm(grads, 1.0)
            after = float(np.linalg.norm(clipped["g"]))
            assert after <= before + 1e-12
            assert after <= 1.0 + 1e-12

    def test_schedule_closed_form(self):
        cfg = OptimConfig(lr=1.0, warmup_steps=100, total_steps=1000)
        # halfway point after warmup: pure cosine factor
        mid = schedule_factor(500, cfg)
        assert mid == pytest.approx(0.5 * (1 + math.cos(math.pi * 0.5)))
        # inside warmup the linear ramp multiplies the cosine
        early = schedule_factor(49, cfg)
        assert early == pytest.approx(
            0.5 * (1 + math.cos(math.pi * 0.049)) * 0.5)
        assert 0.0 <= schedule_factor(999, cfg) <= 1.0

    def test_schedule_factor_bounded(self):
        cfg = OptimConfig(warmup_steps=10, total_steps=100)
        factors = [schedule_factor(s, cfg) for s in range(100)]
        assert all(0.0 <= f <= 1.0 for f in factors)

    def test_adam_matches_scalar_reference(self):
        # One Adam step against hand arithmetic.
        params = {"w": np.array([1.0])}
        state = OptimizerState()
        cfg = OptimConfig(lr=0.1, warmup_steps=0, total_steps=10**9,
                          betas=(0.9, 0.999), eps=1e-8)
        optimizer_step(params, {"w": np.array([0.5])}, state, cfg)
        m = 0.1 * 0.5
        v = 0.001 * 0.25
        m_hat = m / (1 - 0.9)
        v_hat = v / (1 - 0.999)
        expected = 1.0 - 0.1 * m_hat / (math.sqrt(v_hat) + 1e-8)
        assert params["w"][0] == pytest.approx(expected, rel=1e-9)

    def test_adamax_uses_infinity_norm(self):
        params = {"w": np.array([0.0])}
        state = OptimizerState()
        cfg = OptimConfig(algorithm="adamax", lr=1.0, warmup_steps=0,
                          total_steps=10**9, betas=(0.9, 0.999), eps=0.0,
                          clip_norm=100.0)
        optimizer_step(params, {"w": np.array([2.0])}, state, cfg)
        # u = max(0, |g|) = 2, update = lr/(1-b1) * m/u = 1 * 0.2/2/(0.1)
        assert params["w"][0] == pytest.approx(-1.0)


class TestCarry:
    def test_start_probability(self):
        sched = CarrySchedule(decay_steps=1000)
        assert carry_prob(0, sched) == pytest.approx(1.0)

    def test_end_probability(self):
        sched = CarrySchedule(decay_steps=1000)
        assert carry_prob(1000, sched) == pytest.approx(0.01)
        assert carry_prob(10_000, sched) == pytest.approx(0.01)

    def test_cosine_midpoint(self):
        sched = CarrySchedule(decay_steps=1000)
        expected = 0.01 + 0.99 * 0.5 * (1 + math.cos(math.pi / 2))
        assert carry_prob(500, sched) == pytest.approx(expected)
        assert carry_prob(500, sched) == pytest.approx(0.505)

    def test_policy_frequency_tracks_probability(self):
        sched = CarrySchedule(decay_steps=100)
        rng = np.random.default_rng(0)
        draws = [carry_policy(0, sched, rng) for _ in range(200)]
        assert all(draws)  # probability 1 at step 0
        rng = np.random.default_rng(0)
        late = [carry_policy(10_000, sched, rng) for _ in range(2000)]
        assert 0 < sum(late) < 60  # ~1% rate

    def test_invalid_schedule_rejected(self):
        with pytest.raises(InvalidConfigError):
            CarrySchedule(p_start=0.0, p_end=0.5).validate()
