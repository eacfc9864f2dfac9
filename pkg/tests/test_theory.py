import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elmnet.errors import InvalidConfigError
from elmnet.theory import (TheoryParams, crossing, i_rep, i_rep_fixed_n,
                           ke_grid, low_snr_slope, mode_sum, n_eff, n_neurons,
                           optimal_ke, snr, snr_knee, theory_sweep)


def theta(**kwargs):
    base = dict(alpha=1.0, beta=1.0, gamma=0.01, q_inf=1e-4, P=10_000.0,
                k_c=100.0)
    base.update(kwargs)
    return TheoryParams(**base).validate()


class TestSnr:
    def test_unit_base_for_every_alpha(self):
        for alpha in (0.3, 1.0, 2.7):
            assert snr(100.0, theta(alpha=alpha)) == 1.0

    def test_floor_boundary_case(self):
        # alpha=1, gamma=0.01, q_inf=1e-4: at k_e = 1e6 the power-law value
        # equals the floor 1e4 exactly.
        th = theta()
        assert snr(1e6, th) == pytest.approx(1e4)
        assert snr(1e7, th) == pytest.approx(1e4)

    def test_knee_location(self):
        th = theta(alpha=2.0, gamma=0.1, q_inf=0.01)
        # gamma^-1 * q_inf^(-1/alpha) = 10 * 10 = 100
        assert snr_knee(th) == pytest.approx(100.0)

    def test_nondecreasing(self):
        th = theta()
        grid = np.geomspace(1, 1e8, 60)
        vals = [snr(k, th) for k in grid]
        assert np.all(np.diff(vals) >= 0)


class TestIRep:
    def test_single_mode_at_unit_snr_is_half_bit(self):
        for beta in (0.5, 1.0, 3.0):
            assert mode_sum(1.0, 1, beta) == pytest.approx(0.5)

    def test_vanishing_snr_vanishes(self):
        assert mode_sum(0.0, 100, 1.0) == 0.0
        assert mode_sum(1e-15, 100, 1.0) == pytest.approx(0.0, abs=1e-12)

    def test_telescoping_oracle(self):
        # At s = 1 and beta = 1 the sum telescopes:
        # sum log2(1 + 1/i) = log2(N + 1).
        th = theta()
        assert n_neurons(100.0, th) == 50
        assert snr(100.0, th) == 1.0
        assert i_rep(100.0, th) == pytest.approx(0.5 * math.log2(51),
                                                 rel=1e-14)

    def test_width_floor_division(self):
        th = theta(P=1000, k_c=0)
        assert n_neurons(299.9, th) == 3
        assert n_neurons(300.0, th) == 3
        assert n_neurons(1001.0, th) == 0
        with pytest.raises(InvalidConfigError):
            i_rep(1001.0, th)

    @given(st.floats(0.2, 3.0), st.floats(0.2, 3.0), st.integers(2, 400),
           st.floats(0.01, 100.0))
    @settings(max_examples=60, deadline=None)
    def test_monotonicity_properties(self, beta, beta2, n, s):
        # nondecreasing in s at fixed (n, beta)
        assert mode_sum(s * 1.5, n, beta) >= mode_sum(s, n, beta)
        # nondecreasing in n at fixed (s, beta)
        assert mode_sum(s, n + 1, beta) >= mode_sum(s, n, beta)
        # nonincreasing in beta at fixed (s, n)
        lo, hi = sorted((beta, beta2))
        assert mode_sum(s, n, hi) <= mode_sum(s, n, lo) + 1e-12

    def test_floor_regime_depends_only_on_width(self):
        # Beyond the SNR knee, i_rep changes with k_e only through N.
        th = theta(gamma=0.1, q_inf=0.01, P=1e6, k_c=0.0)
        knee = snr_knee(th)
        k1, k2 = 2 * knee, 3 * knee
        assert i_rep_fixed_n(k1, th, 40) == i_rep_fixed_n(k2, th, 40)
        assert i_rep(k1, th) > i_rep(k2, th)  # fewer neurons at larger k_e

    def test_tail_truncation_negligible(self):
        # Modes far beyond s^(1/beta) contribute negligibly; with beta = 3
        # the analytic tail bound s * K^(1-beta) / (beta - 1) puts the
        # 1e-6-relative point near K = 1e4 >> s^(1/beta) ~ 4.6.
        s, beta = 100.0, 3.0
        cut = 10_000
        assert cut > 100 * s ** (1 / beta)
        full = mode_sum(s, 100 * cut, beta)
        truncated = mode_sum(s, cut, beta)
        assert (full - truncated) / full < 1e-6


class TestNEff:
    def test_flat_spectrum_counts_modes(self):
        assert n_eff(17, 0.0) == 17.0

    def test_single_mode(self):
        for beta in (0.1, 1.0, 5.0):
            assert n_eff(1, beta) == 1.0

    def test_harmonic_number(self):
        assert n_eff(50, 1.0) == pytest.approx(4.499205338, rel=1e-9)

    def test_growth_regimes(self):
        saturating = [n_eff(n, 2.0) for n in (10, 100, 1000)]
        assert saturating[2] - saturating[1] < 0.01 * saturating[1]
        log_like = [n_eff(n, 1.0) for n in (10, 100, 1000)]
        assert log_like[2] - log_like[1] == pytest.approx(
            log_like[1] - log_like[0], rel=0.05)


class TestOptimalKe:
    def test_grid_argmax_with_tie_break(self):
        th = theta()
        grid = ke_grid(1.0, 1e5, 200)
        k_star, n_star, best = optimal_ke(th, grid)
        vals = {k: i_rep(k, th) for k in grid if n_neurons(k, th) >= 1}
        assert best == pytest.approx(max(vals.values()))
        winners = [k for k, v in vals.items() if v == best]
        assert k_star == min(winners)

    def test_heavy_spectral_decay_pushes_toward_large_neurons(self):
        # With essentially one informative mode, splitting the budget into
        # many neurons is useless: the best k_e sits near the SNR knee.
        th = theta(beta=8.0, q_inf=1e-6)
        grid = ke_grid(1.0, 1e5, 300)
        k_star, _, _ = optimal_ke(th, grid)
        knee = snr_knee(th)
        feasible = [k for k in grid if n_neurons(k, th) >= 1]
        below_knee = [k for k in feasible if k <= knee]
        assert k_star == pytest.approx(max(below_knee), rel=0.05)

    def test_more_budget_never_hurts_at_old_optimum(self):
        th = theta()
        grid = ke_grid(1.0, 1e5, 100)
        k_star, _, best = optimal_ke(th, grid)
        assert i_rep(k_star, th.with_(P=2 * th.P)) >= best

    def test_larger_budget_moves_optimum_up(self):
        grid = ke_grid(1.0, 1e5, 150)
        th = theta(q_inf=1e-6)
        k1, _, _ = optimal_ke(th, grid)
        k4, _, _ = optimal_ke(th.with_(P=4 * th.P), grid)
        assert k4 >= k1

    def test_empty_grid_rejected(self):
        with pytest.raises(InvalidConfigError):
            optimal_ke(theta(), [])


class TestCrossing:
    def test_formula(self):
        k_x, n_x = crossing(theta())
        assert k_x == pytest.approx(100.0)
        assert n_x == pytest.approx(50.0)

    def test_alpha_independence_at_crossing(self):
        th = theta()
        k_x, _ = crossing(th)
        a = i_rep(k_x, th.with_(alpha=0.5))
        b = i_rep(k_x, th.with_(alpha=2.0))
        assert abs(a - b) <= 1e-12 * max(abs(a), abs(b))

    def test_smaller_gamma_shifts_crossing(self):
        k1, n1 = crossing(theta(gamma=0.01))
        k2, n2 = crossing(theta(gamma=0.001))
        assert k2 > k1
        assert n2 < n1


class TestLowSnrSlope:
    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
    def test_slope_recovers_growth_exponent(self, alpha):
        th = TheoryParams(alpha=alpha, beta=1.0, gamma=1e-3, q_inf=1e-6,
                          P=1e7, k_c=0.0)
        hi = 0.2 ** (1 / alpha) / th.gamma
        res = low_snr_slope(th, ke_grid(hi / 10, hi, 12), n_fixed=1000)
        assert res.regime_ok
        assert res.slope == pytest.approx(alpha, rel=0.05)

    def test_slope_independent_of_beta(self):
        slopes = []
        for beta in (0.5, 1.0, 2.0):
            th = TheoryParams(alpha=1.0, beta=beta, gamma=1e-3, q_inf=1e-6,
                              P=1e7, k_c=0.0)
            hi = 0.1 / th.gamma
            res = low_snr_slope(th, ke_grid(hi / 10, hi, 12), n_fixed=1000)
            slopes.append(res.slope)
        assert max(slopes) - min(slopes) < 0.01 * np.mean(slopes)

    def test_regime_violation_flagged(self):
        th = theta()
        res = low_snr_slope(th, ke_grid(10.0, 1e7, 10), n_fixed=50)
        assert not res.regime_ok
        assert res.warning is not None


class TestTheorySweep:
    def test_rows_skip_infeasible_points(self):
        th = theta(P=1000, k_c=0)
        rows = theory_sweep(th, [10.0, 100.0, 2000.0])
        assert [r["k_e"] for r in rows] == [10.0, 100.0]
        assert all(set(r) == {"k_e", "N", "s", "i_rep"} for r in rows)
