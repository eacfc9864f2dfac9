import numpy as np
import pytest

from elmnet.core import Recording
from elmnet.errors import InvalidConfigError
from elmnet.fitting import (bootstrap_beta, covariance_spectrum, fit_spectrum)


def spectrum_recording(lambdas, n_traj=50, steps=512, burn_in=0, seed=0):
    """Gaussian recording whose channel covariance has the given spectrum."""
    rng = np.random.default_rng(seed)
    n = len(lambdas)
    data = rng.normal(size=(n_traj, steps, n)) * np.sqrt(lambdas)
    return Recording(data=data, burn_in=burn_in)


def truncated_power_law(n, beta, i_c=200.0, nu=1.5, sigma2=1.0):
    i = np.arange(1, n + 1, dtype=float)
    return sigma2 * i ** (-beta) * np.exp(-((i / i_c) ** nu))


class TestCovarianceSpectrum:
    def test_white_noise_concentrates_near_unit_variance(self):
        rec = spectrum_recording(np.ones(64), n_traj=50, steps=512, seed=1)
        eigs = covariance_spectrum(rec)
        # 25.6k samples for 64 channels: Marchenko-Pastur edges near
        # (1 +- sqrt(64/25600))^2 = 1 +- 0.1.
        assert eigs[0] < 1.25
        assert eigs[-1] > 0.75
        assert np.mean(eigs) == pytest.approx(1.0, rel=0.05)

    def test_rank_one_signal(self):
        rng = np.random.default_rng(2)
        direction = rng.normal(size=16)
        amps = rng.normal(size=(4, 100, 1))
        rec = Recording(data=amps * direction)
        eigs = covariance_spectrum(rec)
        assert eigs[0] > 1e-6
        assert np.all(eigs[1:] < 1e-10 * eigs[0])

    def test_burn_in_is_discarded(self):
        rng = np.random.default_rng(3)
        calm = rng.normal(size=(10, 100, 8))
        loud = np.concatenate([1000.0 * np.ones((10, 20, 8)), calm], axis=1)
        rec = Recording(data=loud, burn_in=20)
        eigs = covariance_spectrum(rec)
        assert eigs[0] < 10.0

    def test_generator_spectrum_recovered(self):
        lam = truncated_power_law(512, beta=1.0)
        rec = spectrum_recording(lam, n_traj=50, steps=512, seed=4)
        eigs = covariance_spectrum(rec)
        # Compare the resolvable leading modes against the generator.
        assert np.allclose(eigs[:20], lam[:20], rtol=0.25)

    def test_rank_deficiency_warns(self):
        rec = spectrum_recording(np.ones(50), n_traj=1, steps=30, seed=5)
        with pytest.warns(RuntimeWarning):
            covariance_spectrum(rec)

    def test_degenerate_recording_rejected(self):
        rec = Recording(data=np.zeros((1, 1, 4)))
        with pytest.raises(InvalidConfigError):
            covariance_spectrum(rec)


class TestFitSpectrum:
    def test_single_condition_recovery(self):
        lam = truncated_power_law(512, beta=1.0, i_c=200.0, nu=1.5)
        rec = spectrum_recording(lam, seed=6)
        model = fit_spectrum([covariance_spectrum(rec)])[0]
        assert model.beta == pytest.approx(1.0, abs=0.1)

    def test_two_conditions_share_cutoff(self):
        eig_sets = []
        for seed, beta in ((7, 1.0), (8, 1.4)):
            lam = truncated_power_law(512, beta=beta)
            rec = spectrum_recording(lam, seed=seed)
            eig_sets.append(covariance_spectrum(rec))
        models = fit_spectrum(eig_sets, share_cutoff=True)
        assert models[0].beta == pytest.approx(1.0, abs=0.1)
        assert models[1].beta == pytest.approx(1.4, abs=0.1)
        assert models[0].i_c == models[1].i_c
        assert models[0].nu == models[1].nu

    def test_flat_spectrum_fits_zero_slope(self):
        lam = truncated_power_law(256, beta=0.0, i_c=100.0, nu=2.0)
        rec = spectrum_recording(lam, n_traj=80, steps=512, seed=9)
        model = fit_spectrum([covariance_spectrum(rec)])[0]
        assert abs(model.beta) < 0.1

    def test_exact_model_fit_is_tight(self):
        lam = truncated_power_law(400, beta=1.2, i_c=150.0, nu=1.5)
        model = fit_spectrum([lam])[0]
        assert model.beta == pytest.approx(1.2, abs=1e-4)
        assert model.i_c == pytest.approx(150.0, rel=1e-3)
        assert model.nu == pytest.approx(1.5, rel=1e-3)

    def test_too_few_eigenvalues_rejected(self):
        with pytest.raises(Exception):
            fit_spectrum([np.array([1.0, 0.5, 0.1])])


class TestBootstrapBeta:
    def test_identical_trajectories_zero_width(self):
        lam = truncated_power_law(64, beta=1.0, i_c=30.0)
        one = spectrum_recording(lam, n_traj=1, steps=2048, seed=10)
        rec = Recording(data=np.repeat(one.data, 8, axis=0))
        boot = bootstrap_beta(rec, n_boot=5, seed=0)
        assert np.ptp(boot.samples) == 0.0

    def test_single_draw_is_one_refit(self):
        lam = truncated_power_law(64, beta=1.0, i_c=30.0)
        rec = spectrum_recording(lam, n_traj=10, steps=512, seed=11)
        boot = bootstrap_beta(rec, n_boot=1, seed=3)
        assert boot.samples.size == 1
        assert boot.median == boot.samples[0]

    def test_median_near_truth(self):
        lam = truncated_power_law(128, beta=1.2, i_c=60.0)
        rec = spectrum_recording(lam, n_traj=30, steps=512, seed=12)
        boot = bootstrap_beta(rec, n_boot=12, seed=4)
        assert boot.median == pytest.approx(1.2, abs=0.1)

    def test_needs_multiple_trajectories(self):
        lam = truncated_power_law(16, beta=1.0)
        rec = spectrum_recording(lam, n_traj=1, steps=256, seed=13)
        with pytest.raises(InvalidConfigError):
            bootstrap_beta(rec, n_boot=2)
