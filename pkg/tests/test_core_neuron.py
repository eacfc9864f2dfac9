import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elmnet.core import (NeuronConfig, branch_sum, count_params, elm_step,
                         init_neuron_params, make_decays, memory_timescales,
                         zero_state)
from elmnet.core.neuron import NeuronParams
from elmnet.errors import InvalidConfigError, NumericFaultError, ShapeError

from conftest import tiny_hidden


class TestMakeDecays:
    def test_huge_tau_r_approaches_one(self):
        cfg = tiny_hidden(tau_r=1e12)
        _, _, kappa_r = make_decays(cfg, np.array([1.0]))
        assert kappa_r == pytest.approx(1.0, abs=1e-9)

    def test_lambda_one_makes_kappas_equal(self):
        cfg = tiny_hidden(lam=1.0)
        kappa_m, kappa_lambda, _ = make_decays(cfg, np.array([1.0]))
        assert kappa_m[0] == pytest.approx(math.exp(-1.0))
        assert kappa_lambda[0] == pytest.approx(math.exp(-1.0))

    def test_log_equidistant_midpoint_is_geometric_mean(self):
        cfg = tiny_hidden(d_m=3, tau_min=1.0, tau_max=500.0)
        tau = memory_timescales(cfg)
        assert tau[0] == pytest.approx(1.0)
        assert tau[2] == pytest.approx(500.0)
        # midpoint in log space: sqrt(1 * 500)
        assert tau[1] == pytest.approx(math.sqrt(500.0), rel=1e-12)

    def test_single_unit_uses_tau_max(self):
        cfg = tiny_hidden(d_m=1)
        assert memory_timescales(cfg).tolist() == [cfg.tau_max]

    def test_all_decays_in_unit_interval(self):
        cfg = tiny_hidden()
        kappa_m, kappa_lambda, kappa_r = make_decays(cfg, memory_timescales(cfg))
        for k in (*kappa_m, *kappa_lambda, kappa_r):
            assert 0.0 < k < 1.0

    def test_lambda_above_one_orders_decays(self):
        cfg = tiny_hidden(lam=5.0)
        kappa_m, kappa_lambda, _ = make_decays(cfg, memory_timescales(cfg))
        assert np.all(kappa_m > kappa_lambda)

    def test_non_positive_timescale_rejected(self):
        cfg = tiny_hidden()
        with pytest.raises(InvalidConfigError):
            make_decays(cfg, np.array([0.0, 1.0]))


class TestBranchSum:
    def test_single_synapse_branches_are_identity(self):
        x = np.arange(5.0)
        assert np.array_equal(branch_sum(x, 5, 1), x)

    def test_constant_input(self):
        out = branch_sum(np.ones(12), 3, 4)
        assert out.tolist() == [4.0, 4.0, 4.0]

    @given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 10_000))
    @settings(max_examples=40, deadline=None)
    def test_matches_loop_oracle(self, d_tree, d_branch, seed):
        rng = np.random.default_rng(seed)
        x = rng.normal(size=d_tree * d_branch)
        expected = [sum(x[k * d_branch:(k + 1) * d_branch]) for k in range(d_tree)]
        assert np.allclose(branch_sum(x, d_tree, d_branch), expected)

    def test_length_mismatch_raises(self):
        with pytest.raises(ShapeError):
            branch_sum(np.ones(7), 3, 2)


def _hand_params(cfg: NeuronConfig, w_s, W, b_mlp, w_r, bias):
    return NeuronParams(
        w_s=np.asarray(w_s, dtype=float),
        mlp=[(np.asarray(W, dtype=float), np.asarray(b_mlp, dtype=float))],
        w_r=np.asarray(w_r, dtype=float),
        b=bias,
        tau_m=memory_timescales(cfg),
    )


class TestElmStep:
    def test_zero_input_zero_bias_is_silent(self):
        cfg = tiny_hidden()
        rng = np.random.default_rng(0)
        params = init_neuron_params(cfg, rng)
        # Zero MLP biases so the bias path vanishes on zero input.
        params.mlp = [(W, np.zeros_like(b)) for W, b in params.mlp]
        params.b = 0.0
        state, a = elm_step(zero_state(cfg), np.zeros(cfg.d_s), params, cfg)
        assert a == 0.0
        assert np.all(state.m == 0.0)

    def test_zero_input_exposes_mlp_bias_path(self):
        cfg = tiny_hidden()
        rng = np.random.default_rng(1)
        params = init_neuron_params(cfg, rng)
        kappa_m, kappa_lambda, _ = make_decays(cfg, params.tau_m)
        state, _ = elm_step(zero_state(cfg), np.zeros(cfg.d_s), params, cfg)
        # With zero state and input, delta_m is tanh of the pure bias path.
        (W1, b1), (W2, b2) = params.mlp
        h = np.square(np.maximum(b1, 0.0))
        expected = (1.0 - kappa_lambda) * np.tanh(W2 @ h + b2)
        assert np.allclose(state.m, expected)

    def test_highpass_nulls_constant_readout(self):
        # Drive the EMA stage with a constant memory readout: the output
        # converges to ReLU(bias) and the EMA to the readout itself.
        cfg = tiny_hidden(d_m=1, tau_r=5.0)
        v = 0.7
        bias = 0.2
        kappa_r = math.exp(-1.0 / cfg.tau_r)
        r = 0.0
        for _ in range(20 * int(cfg.tau_r)):
            r = kappa_r * r + (1.0 - kappa_r) * v
        assert r == pytest.approx(v, abs=1e-8)
        assert max(bias + v - r, 0.0) == pytest.approx(max(bias, 0.0), abs=1e-7)

    def test_single_step_matches_hand_trace(self):
        # d_m = 1, two synapses on one branch, hand-evaluated stages.
        cfg = NeuronConfig(d_m=1, l_mlp=1, d_mlp=1, d_tree=1, d_branch=2,
                           c=2.0, lam=2.0, tau_min=4.0, tau_max=4.0, tau_r=2.0)
        params = _hand_params(cfg, w_s=[0.5, -0.25],
                              W=[[0.3, 0.4]], b_mlp=[0.1],
                              w_r=[2.0], bias=0.05)
        params.mlp.append((np.array([[1.5]]), np.array([-0.2])))
        state = zero_state(cfg)
        state.m = np.array([0.5])
        state.r = 0.1
        z = np.array([1.0, 2.0])

        # stage (i): c * (0.5*1.0 + (-0.25)*2.0) = 2 * 0.0 = 0.0
        b_t = 2.0 * (0.5 * 1.0 - 0.25 * 2.0)
        assert b_t == 0.0
        # decays: kappa_m = exp(-1/4), kappa_lambda = exp(-2/4)
        km = math.exp(-0.25)
        kl = math.exp(-0.5)
        dm_in = km * 0.5
        # stage (ii): tanh(1.5 * relu(0.3*b + 0.4*dm_in + 0.1)^2 - 0.2)
        hidden = max(0.3 * b_t + 0.4 * dm_in + 0.1, 0.0) ** 2
        delta = math.tanh(1.5 * hidden - 0.2)
        # stage (iii)
        m1 = dm_in + (1.0 - kl) * delta
        # stage (iv): kappa_r = exp(-1/2)
        kr = math.exp(-0.5)
        v = 2.0 * m1
        r1 = kr * 0.1 + (1.0 - kr) * v
        # stage (v)
        a_expected = max(0.05 + v - r1, 0.0)

        new_state, a = elm_step(state, z, params, cfg)
        assert a == pytest.approx(a_expected, rel=1e-14)
        assert new_state.m[0] == pytest.approx(m1, rel=1e-14)
        assert new_state.r == pytest.approx(r1, rel=1e-14)

    def test_update_is_tanh_bounded(self, rng):
        cfg = tiny_hidden()
        params = init_neuron_params(cfg, rng)
        state = zero_state(cfg)
        _, kappa_lambda, _ = make_decays(cfg, params.tau_m)
        for _ in range(50):
            prev_m = state.m.copy()
            kappa_m, _, _ = make_decays(cfg, params.tau_m)
            state, a = elm_step(state, rng.normal(size=cfg.d_s), params, cfg)
            delta = (state.m - kappa_m * prev_m) / (1.0 - kappa_lambda)
            assert np.all(np.abs(delta) < 1.0)
            assert a >= 0.0

    def test_binary_spike_mode_outputs_binary(self, rng):
        cfg = tiny_hidden(output_mode="binary-spike")
        params = init_neuron_params(cfg, rng)
        state = zero_state(cfg)
        seen = set()
        for _ in range(100):
            state, a = elm_step(state, rng.normal(size=cfg.d_s), params, cfg)
            seen.add(a)
        assert seen <= {0.0, 1.0}
        assert len(seen) == 2

    def test_nan_input_names_stage(self, rng):
        cfg = tiny_hidden()
        params = init_neuron_params(cfg, rng)
        z = np.zeros(cfg.d_s)
        z[0] = np.nan
        with pytest.raises(NumericFaultError) as err:
            elm_step(zero_state(cfg), z, params, cfg)
        assert err.value.location == "branch"


class TestCountParams:
    def test_hand_counted_mlp_case(self):
        cfg = NeuronConfig(d_m=3, l_mlp=1, d_mlp=6, d_tree=4, d_branch=2)
        k_e, k_c = count_params(cfg)
        # MLP input is d_tree + d_m = 7: (7*6+6) + (6*3+3) = 69, plus w_r (3)
        assert k_e == 72
        assert k_c == 8

    def test_linear_update_case(self):
        cfg = NeuronConfig(d_m=3, l_mlp=0, d_mlp=3, d_tree=4, d_branch=2)
        k_e, _ = count_params(cfg)
        assert k_e == (7 * 3 + 3) + 3 == 27

    def test_k_c_linear_in_branch_size(self):
        base = NeuronConfig(d_m=2, l_mlp=0, d_mlp=2, d_tree=4, d_branch=3)
        k_c1 = count_params(base)[1]
        doubled = NeuronConfig(d_m=2, l_mlp=0, d_mlp=2, d_tree=4, d_branch=6)
        assert count_params(doubled)[1] == 2 * k_c1

    def test_deeper_mlp_adds_square_blocks(self):
        cfg1 = tiny_hidden(l_mlp=1)
        cfg2 = tiny_hidden(l_mlp=2)
        diff = count_params(cfg2)[0] - count_params(cfg1)[0]
        assert diff == cfg1.d_mlp * cfg1.d_mlp + cfg1.d_mlp
