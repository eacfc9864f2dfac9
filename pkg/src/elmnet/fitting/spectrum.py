"""Covariance eigenvalue spectra and truncated power-law fits.

The spectrum model is lambda_i = sigma_f^2 * i^(-beta) * exp(-(i/i_c)^nu).
For a fixed cutoff pair (i_c, nu) the remaining parameters are linear in
log space, so fitting reduces to a 2-D outer search (Nelder-Mead over
log i_c, log nu) around exact inner linear solves. Several conditions can
share one cutoff pair while keeping per-condition (sigma_f^2, beta).
"""

from __future__ import annotations

import warnings as _warnings
from dataclasses import dataclass

import numpy as np

from ..core.recording import Recording
from ..errors import InvalidConfigError, ShapeError
from .optimizers import nelder_mead

EIG_TAIL_RTOL = 1e-12            # exclude eigenvalues below this times the top one


@dataclass
class SpectrumModel:
    sigma_f2: float
    beta: float
    i_c: float
    nu: float
    rss: float = 0.0
    n_points: int = 0

    def predict(self, ranks: np.ndarray) -> np.ndarray:
        ranks = np.asarray(ranks, dtype=float)
        return (self.sigma_f2 * ranks ** (-self.beta)
                * np.exp(-((ranks / self.i_c) ** self.nu)))


def covariance_spectrum(rec: Recording) -> np.ndarray:
    """Descending eigenvalues of the sample covariance across neurons.

    Trajectories are flattened after burn-in removal; each neuron's mean
    over all retained samples is subtracted. Small negative eigenvalues
    from roundoff are clipped to zero.
    """
    data = rec.retained()
    n_samples = data.shape[0] * data.shape[1]
    if n_samples < 2:
        raise InvalidConfigError("recording has fewer than two retained samples")
    flat = data.reshape(n_samples, rec.n_rec)
    if n_samples <= rec.n_rec:
        _warnings.warn(
            f"covariance is rank deficient: {n_samples} samples for "
            f"{rec.n_rec} neurons", RuntimeWarning, stacklevel=2)
    centered = flat - flat.mean(axis=0)
    cov = centered.T @ centered / (n_samples - 1)
    eigs = np.linalg.eigvalsh(cov)[::-1]
    return np.maximum(eigs, 0.0)


def _fit_range(eigs: np.ndarray) -> int:
    """Number of leading eigenvalues to fit (numerically-zero tail excluded)."""
    eigs = np.asarray(eigs, dtype=float)
    if eigs.size == 0 or eigs[0] <= 0:
        raise InvalidConfigError("no positive eigenvalues to fit")
    above = eigs >= EIG_TAIL_RTOL * eigs[0]
    cut = int(np.argmin(above)) if not above.all() else eigs.size
    return max(cut, 1)


def _inner_solve(log_eigs, log_ranks, decay):
    """Exact (log sigma^2, beta) for fixed cutoff decay terms."""
    target = log_eigs + decay
    A = np.stack([np.ones_like(log_ranks), -log_ranks], axis=1)
    coef, *_ = np.linalg.lstsq(A, target, rcond=None)
    pred = A @ coef
    rss = float(np.sum((target - pred) ** 2))
    return coef[0], coef[1], rss


def fit_spectrum(eig_sets, share_cutoff: bool = True,
                 min_points: int = 8) -> list[SpectrumModel]:
    """Fit the truncated power law to one or more eigenvalue sets.

    With share_cutoff, a single (i_c, nu) is optimized jointly across all
    sets while (sigma_f^2, beta) vary per set. Returns one SpectrumModel
    per input set, in order.
    """
    if isinstance(eig_sets, np.ndarray) and eig_sets.ndim == 1:
        eig_sets = [eig_sets]
    eig_sets = [np.asarray(e, dtype=float) for e in eig_sets]
    if len(eig_sets) == 0:
        raise InvalidConfigError("need at least one eigenvalue set")

    prepared = []
    for eigs in eig_sets:
        cut = _fit_range(eigs)
        if cut < min_points:
            raise ShapeError(
                f"only {cut} usable eigenvalues, need at least {min_points}")
        ranks = np.arange(1, cut + 1, dtype=float)
        prepared.append((np.log(eigs[:cut]), np.log(ranks), ranks))

    def total_rss(log_cutoff, subset):
        i_c, nu = np.exp(log_cutoff)
        if not np.isfinite(i_c) or not np.isfinite(nu) or nu > 20:
            return np.inf
        rss = 0.0
        for log_eigs, log_ranks, ranks in subset:
            decay = (ranks / i_c) ** nu
            rss += _inner_solve(log_eigs, log_ranks, decay)[2]
        return rss

    def solve_group(subset):
        n_max = max(r[-1] for _, _, r in subset)
        starts = [np.log([n_max * frac, nu0])
                  for frac in (0.25, 0.5, 1.0) for nu0 in (1.0, 1.5, 2.5)]
        best = None
        for start in starts:
            res = nelder_mead(lambda lc: total_rss(lc, subset), start,
                              x_tol=1e-8, f_tol=1e-12)
            if best is None or res.fun < best.fun:
                best = res
        i_c, nu = np.exp(best.x)
        models = []
        for log_eigs, log_ranks, ranks in subset:
            decay = (ranks / i_c) ** nu
            log_s2, beta, rss = _inner_solve(log_eigs, log_ranks, decay)
            models.append(SpectrumModel(sigma_f2=float(np.exp(log_s2)),
                                        beta=float(beta), i_c=float(i_c),
                                        nu=float(nu), rss=rss,
                                        n_points=ranks.size))
        return models

    if share_cutoff:
        return solve_group(prepared)
    return [solve_group([item])[0] for item in prepared]


@dataclass
class BootstrapBeta:
    samples: np.ndarray
    median: float
    q05: float
    q95: float


def bootstrap_beta(rec: Recording, n_boot: int = 50, seed=0,
                   share_with: Recording | None = None) -> BootstrapBeta:
    """Bootstrap the spectral exponent by resampling trajectories.

    Each draw resamples trajectories with replacement, recomputes the
    covariance spectrum, and refits. With `share_with`, the companion
    recording is resampled in the same way and the two are fit with a
    shared cutoff; only the primary recording's beta is collected.
    """
    if rec.n_traj < 2:
        raise InvalidConfigError("bootstrap needs at least two trajectories")
    rng = np.random.default_rng(seed)
    betas = []
    for _ in range(n_boot):
        idx = rng.integers(0, rec.n_traj, size=rec.n_traj)
        sub = Recording(data=rec.data[idx], burn_in=rec.burn_in)
        eigs = covariance_spectrum(sub)
        if share_with is not None:
            idx2 = rng.integers(0, share_with.n_traj, size=share_with.n_traj)
            other = Recording(data=share_with.data[idx2], burn_in=share_with.burn_in)
            models = fit_spectrum([eigs, covariance_spectrum(other)],
                                  share_cutoff=True)
        else:
            models = fit_spectrum([eigs], share_cutoff=True)
        betas.append(models[0].beta)
    samples = np.asarray(betas)
    return BootstrapBeta(samples=samples, median=float(np.median(samples)),
                         q05=float(np.quantile(samples, 0.05)),
                         q95=float(np.quantile(samples, 0.95)))
