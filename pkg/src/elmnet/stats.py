"""Activity-regime and residual diagnostics for recordings.

Covers sparsity and firing-irregularity summaries (active fraction,
inter-event intervals, Fano factor, pairwise correlations, per-neuron
moments, Lorenz/Gini concentration) and AR(1) residual whitening with
integrated autocorrelation times.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core.recording import Recording
from .errors import InvalidConfigError, ShapeError


@dataclass
class ActivityStats:
    active_fraction: np.ndarray          # (n_traj, T) fraction of neurons above threshold
    firing_fraction: np.ndarray          # (n_rec,) per-neuron fraction of active steps
    isi_values: np.ndarray               # pooled inter-event intervals
    isi_cv: float | None                 # None when no neuron fires twice
    fano: float | None
    fano_window: int
    pairwise_corr: np.ndarray            # sampled off-diagonal correlations
    corr_neuron_subset: np.ndarray
    skewness: np.ndarray                 # (n_rec,)
    excess_kurtosis: np.ndarray          # (n_rec,)
    lorenz_points: np.ndarray            # (n_rec + 1, 2) of per-neuron rates
    gini: float
    threshold: float

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "active_fraction_mean": float(self.active_fraction.mean()),
            "active_fraction_trace": self.active_fraction.mean(axis=0).tolist(),
            "firing_fraction": self.firing_fraction.tolist(),
            "isi_cv": self.isi_cv,
            "n_isi": int(self.isi_values.size),
            "fano": self.fano,
            "fano_window": self.fano_window,
            "pairwise_corr_mean": float(self.pairwise_corr.mean())
            if self.pairwise_corr.size else None,
            "pairwise_corr_hist": _hist(self.pairwise_corr, (-1, 1)),
            "corr_neuron_subset": self.corr_neuron_subset.tolist(),
            "skewness": self.skewness.tolist(),
            "excess_kurtosis": self.excess_kurtosis.tolist(),
            "lorenz_points": self.lorenz_points.tolist(),
            "gini": self.gini,
        }


def _hist(values, rng, bins=40):
    if values.size == 0:
        return {"edges": [], "counts": []}
    counts, edges = np.histogram(values, bins=bins, range=rng)
    return {"edges": edges.tolist(), "counts": counts.tolist()}


def _event_onsets(active_row: np.ndarray) -> np.ndarray:
    """First step of each maximal above-threshold run."""
    padded = np.concatenate([[False], active_row])
    return np.flatnonzero(padded[1:] & ~padded[:-1])


def activity_stats(rec: Recording, threshold: float = 0.0,
                   fano_window: int = 50, max_corr_neurons: int = 200,
                   corr_seed: int = 0) -> ActivityStats:
    """Diagnostics of the activity regime in a recording.

    Events are maximal runs of activity above `threshold`; intervals are
    measured between run onsets within a trajectory. When no neuron emits
    two events, interval statistics are reported absent (None), never zero.
    """
    data = rec.retained()
    n_traj, n_steps, n_rec = data.shape
    if n_steps < 2:
        raise InvalidConfigError("recording too short after burn-in")

    active = data > threshold
    active_fraction = active.mean(axis=2)
    firing_fraction = active.mean(axis=(0, 1))

    isi = []
    for tr in range(n_traj):
        for n in range(n_rec):
            onsets = _event_onsets(active[tr, :, n])
            if onsets.size >= 2:
                isi.append(np.diff(onsets))
    isi_values = np.concatenate(isi) if isi else np.array([], dtype=int)
    if isi_values.size >= 2 and isi_values.mean() > 0:
        isi_cv = float(isi_values.std() / isi_values.mean())
    else:
        isi_cv = None

    n_windows = n_steps // fano_window
    if n_windows >= 2:
        trimmed = active[:, :n_windows * fano_window, :]
        counts = trimmed.reshape(n_traj, n_windows, fano_window, n_rec).sum(axis=2)
        counts = counts.reshape(-1)
        fano = float(counts.var() / counts.mean()) if counts.mean() > 0 else None
    else:
        fano = None

    rng = np.random.default_rng(corr_seed)
    subset = np.sort(rng.choice(n_rec, size=min(max_corr_neurons, n_rec),
                                replace=False))
    series = data[:, :, subset].reshape(-1, subset.size).T
    keep = series.std(axis=1) > 0
    corr_values = np.array([])
    if keep.sum() >= 2:
        corr = np.corrcoef(series[keep])
        iu = np.triu_indices_from(corr, k=1)
        corr_values = corr[iu]

    centered = data.reshape(-1, n_rec) - data.reshape(-1, n_rec).mean(axis=0)
    std = centered.std(axis=0)
    safe = np.where(std > 0, std, 1.0)
    zs = centered / safe
    skewness = np.where(std > 0, (zs ** 3).mean(axis=0), 0.0)
    excess_kurtosis = np.where(std > 0, (zs ** 4).mean(axis=0) - 3.0, 0.0)

    rates = firing_fraction if firing_fraction.sum() > 0 else None
    if rates is None:
        lorenz_points = np.array([[0.0, 0.0], [1.0, 1.0]])
        gini = 0.0
    else:
        lorenz_points, gini = lorenz_curve(rates)

    return ActivityStats(
        active_fraction=active_fraction, firing_fraction=firing_fraction,
        isi_values=isi_values, isi_cv=isi_cv, fano=fano,
        fano_window=fano_window, pairwise_corr=corr_values,
        corr_neuron_subset=subset, skewness=skewness,
        excess_kurtosis=excess_kurtosis, lorenz_points=lorenz_points,
        gini=gini, threshold=threshold)


def lorenz_curve(values) -> tuple[np.ndarray, float]:
    """Concentration curve of nonnegative values, largest first.

    Returns (points, gini): points run from (0, 0) to (1, 1) giving the
    cumulative share held by the top-x fraction; gini is twice the area
    between the curve and the diagonal.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise ShapeError("values must be a non-empty vector")
    if np.any(values < 0):
        raise InvalidConfigError("values must be nonnegative")
    total = values.sum()
    if total <= 0:
        raise InvalidConfigError("at least one value must be positive")
    sorted_desc = np.sort(values)[::-1]
    cum = np.concatenate([[0.0], np.cumsum(sorted_desc) / total])
    frac = np.linspace(0.0, 1.0, values.size + 1)
    points = np.stack([frac, cum], axis=1)
    area = np.trapezoid(cum, frac)
    gini = float(2.0 * (area - 0.5))
    return points, gini


@dataclass
class Ar1Result:
    phi: float
    whitened: np.ndarray
    tau_int_raw: float
    tau_int_whitened: float
    degenerate: bool = False
    notes: list = field(default_factory=list)


def _autocorr(x: np.ndarray, max_lag: int) -> np.ndarray:
    x = x - x.mean()
    denom = float(x @ x)
    acf = np.empty(max_lag + 1)
    acf[0] = 1.0
    for k in range(1, max_lag + 1):
        acf[k] = float(x[k:] @ x[:-k]) / denom
    return acf


def integrated_autocorr(x: np.ndarray) -> float:
    """tau_int = 1 + 2 * sum of the initial positive ACF sequence."""
    n = x.size
    max_lag = min(n - 2, max(10, n // 4))
    acf = _autocorr(x, max_lag)
    total = 0.0
    for k in range(1, max_lag + 1):
        if acf[k] <= 0:
            break
        total += acf[k]
    return 1.0 + 2.0 * total


def ar1_correct(residuals) -> Ar1Result:
    """Estimate the lag-1 coefficient, whiten, and report mixing times.

    whitened[t] = r[t] - phi * r[t-1]. A zero-variance series is flagged
    degenerate (phi = NaN) rather than raising.
    """
    r = np.asarray(residuals, dtype=float)
    if r.ndim != 1 or r.size < 10:
        raise ShapeError("need a vector of at least 10 residuals")
    centered = r - r.mean()
    denom = float(centered @ centered)
    if denom == 0.0:
        return Ar1Result(phi=float("nan"), whitened=np.zeros(r.size - 1),
                         tau_int_raw=float("nan"),
                         tau_int_whitened=float("nan"), degenerate=True,
                         notes=["constant series: lag-1 coefficient undefined"])
    phi = float(centered[1:] @ centered[:-1]) / denom
    whitened = r[1:] - phi * r[:-1]
    return Ar1Result(phi=phi, whitened=whitened,
                     tau_int_raw=integrated_autocorr(r),
                     tau_int_whitened=integrated_autocorr(whitened))
