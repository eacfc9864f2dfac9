"""Experiment orchestration: axis sweeps, fixed-budget tradeoff scans, and
the slope/spectrum measurement recipes that sit on top of sweep outputs.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .core.config import NetworkConfig
from .core.neuron import count_params
from .core.recording import Recording
from .errors import InvalidConfigError
from .fitting.decay import fit_decay
from .fitting.spectrum import covariance_spectrum, fit_spectrum
from .training.runner import TrainSettings, train_run

SWEEP_AXES = ("N_rec", "d_m", "d_s", "rho_rec", "ke_vs_kc", "n_vs_ke")
RESULT_COLUMNS = ("axis", "axis_value", "k_e", "k_c", "N", "P_total", "seed",
                  "metric", "reducible")


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    grid: tuple
    budget: float | None = None   # hidden-layer budget for the tradeoff axes
    repeats: int = 3
    base_seed: int = 0

    def validate(self) -> "SweepSpec":
        if self.axis not in SWEEP_AXES:
            raise InvalidConfigError(f"axis must be one of {SWEEP_AXES}, got {self.axis!r}")
        if len(self.grid) < 1:
            raise InvalidConfigError("empty sweep grid")
        if self.axis in ("ke_vs_kc", "n_vs_ke") and not self.budget:
            raise InvalidConfigError(f"axis {self.axis} needs a parameter budget")
        if self.repeats < 1:
            raise InvalidConfigError("repeats must be >= 1")
        return self


def config_for_point(spec: SweepSpec, base: NetworkConfig, value):
    """Derive the network config at one grid point, or None if infeasible.

    Budget-matched axes round downward: n_vs_ke lowers the neuron count,
    ke_vs_kc lowers the synapses per branch.
    """
    hidden = base.hidden
    if spec.axis == "N_rec":
        return replace(base, n_rec=int(value))
    if spec.axis == "d_m":
        d_m = int(value)
        return replace(base, hidden=replace(hidden, d_m=d_m, d_mlp=2 * d_m))
    if spec.axis == "d_s":
        return replace(base, hidden=replace(hidden, d_branch=int(value)))
    if spec.axis == "rho_rec":
        return replace(base, rho_rec=float(value))

    d_m = int(value)
    trial = replace(hidden, d_m=d_m, d_mlp=2 * d_m)
    k_e, k_c = count_params(trial)
    if spec.axis == "n_vs_ke":
        n = int(spec.budget // (k_e + k_c))
        if n < 1:
            return None
        return replace(base, n_rec=n, hidden=trial)
    # ke_vs_kc: keep N fixed, spend the per-neuron remainder on synapses
    per_neuron = spec.budget / base.n_rec
    d_branch = int((per_neuron - k_e) // trial.d_tree)
    if d_branch < 1:
        return None
    return replace(base, hidden=replace(trial, d_branch=d_branch))


@dataclass
class SweepResults:
    spec: SweepSpec
    rows: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    timings: list = field(default_factory=list)

    def grouped(self):
        """Mean/std of the metric per grid point across seeds."""
        out = []
        for value in self.spec.grid:
            metrics = [r["metric"] for r in self.rows if r["axis_value"] == value]
            if metrics:
                out.append({"axis_value": value,
                            "metric_mean": float(np.mean(metrics)),
                            "metric_std": float(np.std(metrics)),
                            "n_seeds": len(metrics)})
        return out


def _run_one(args):
    spec, base, settings, task_builder, value, seed = args
    config = config_for_point(spec, base, value)
    if config is None:
        return ("skip", value, seed, "infeasible grid point")
    k_e, k_c = count_params(config.hidden)
    start = time.perf_counter()
    task = task_builder(seed)
    result = train_run(task, config, settings, seed)
    elapsed = time.perf_counter() - start
    row = {
        "axis": spec.axis, "axis_value": value, "k_e": k_e, "k_c": k_c,
        "N": config.n_rec, "P_total": config.n_rec * (k_e + k_c),
        "seed": seed, "metric": result.test_metric,
        "reducible": result.reducible,
    }
    return ("row", row, elapsed)


def run_sweep(spec: SweepSpec, base: NetworkConfig, settings: TrainSettings,
              task_builder, jobs: int = 1) -> SweepResults:
    """One train_run per (grid point, seed); infeasible points are recorded
    and skipped. `task_builder(seed)` must return a fresh task. Results are
    merged in grid order regardless of execution order.
    """
    spec.validate()
    work = [(spec, base, settings, task_builder, value, spec.base_seed + rep)
            for value in spec.grid for rep in range(spec.repeats)]
    if jobs > 1:
        from multiprocessing import get_context
        with get_context("spawn").Pool(jobs) as pool:
            outcomes = pool.map(_run_one, work)
    else:
        outcomes = [_run_one(w) for w in work]

    results = SweepResults(spec=spec)
    for item, (_, _, _, _, value, seed) in zip(outcomes, work):
        if item[0] == "skip":
            results.skipped.append({"axis_value": item[1], "seed": item[2],
                                    "reason": item[3]})
        else:
            results.rows.append(item[1])
            results.timings.append({"axis_value": value, "seed": seed,
                                    "runtime_s": item[2]})
    return results


def write_sweep_csv(results: SweepResults, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for row in results.rows:
            writer.writerow([_fmt(row[c]) for c in RESULT_COLUMNS])


def write_timings_csv(results: SweepResults, path) -> None:
    """Wall-clock sidecar; kept out of the deterministic results table."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("axis_value", "seed", "runtime_s"))
        for row in results.timings:
            writer.writerow([_fmt(row["axis_value"]), row["seed"],
                             f"{row['runtime_s']:.3f}"])


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.10g}"
    return value


@dataclass
class AlphaEstimate:
    alpha: float
    slope: float
    n_used: int
    knee: float | None
    low_confidence: bool
    notes: list = field(default_factory=list)


def measure_alpha(k_e, reducible, metric_kind: str = "bpc",
                  min_points: int = 4) -> AlphaEstimate:
    """Power-law slope of reducible error vs per-neuron parameters.

    The range is auto-truncated before the detected floor knee (fit a
    hard-max floor first; keep points below 80% of the knee). metric_kind
    'mae' doubles the fitted exponent (error ~ noise standard deviation
    rather than variance); 'bpc' reads it directly.
    """
    if metric_kind not in ("bpc", "mae"):
        raise InvalidConfigError(f"metric_kind must be 'bpc' or 'mae', got {metric_kind!r}")
    k_e = np.asarray(k_e, dtype=float)
    reducible = np.asarray(reducible, dtype=float)
    keep = (reducible > 0) & (k_e > 0)
    x, y = k_e[keep], reducible[keep]
    if x.size < min_points:
        raise InvalidConfigError(
            f"need at least {min_points} usable points, got {x.size}")
    order = np.argsort(x)
    x, y = x[order], y[order]

    notes = []
    knee = None
    mask = np.ones(x.size, dtype=bool)
    if x.size >= 5:
        try:
            floor_fit = fit_decay(x, y, "power_max_floor")
            c, a, f = (floor_fit.params[k] for k in ("c", "a", "f"))
            if a > 0 and f > 0 and c > 0:
                candidate = (c / f) ** (1.0 / a)
                if x.min() < candidate < x.max():
                    knee = float(candidate)
                    mask = x < 0.8 * knee
                    notes.append(f"truncated at 0.8 * knee = {0.8 * knee:.4g}")
        except Exception:
            notes.append("floor fit failed; using all points")
    if mask.sum() < min_points:
        mask = np.ones(x.size, dtype=bool)
        notes.append("truncation left too few points; using all")

    lx, ly = np.log(x[mask]), np.log(y[mask])
    A = np.stack([np.ones_like(lx), lx], axis=1)
    coef, res_arr, *_ = np.linalg.lstsq(A, ly, rcond=None)
    slope = float(coef[1])
    n_used = int(mask.sum())
    dof = n_used - 2
    if dof > 0:
        resid = ly - A @ coef
        s2 = float(resid @ resid) / dof
        sxx = float(np.sum((lx - lx.mean()) ** 2))
        stderr = np.sqrt(s2 / sxx) if sxx > 0 else np.inf
    else:
        stderr = np.inf
    low_confidence = bool(abs(slope) < 2 * stderr or n_used < min_points)

    alpha = -slope
    if metric_kind == "mae":
        alpha = 2.0 * alpha
    return AlphaEstimate(alpha=float(alpha), slope=slope, n_used=n_used,
                         knee=knee, low_confidence=low_confidence, notes=notes)


def measure_beta(recordings: dict) -> dict:
    """Spectral decay exponent per condition from memory-readout recordings.

    All conditions are fit jointly with a shared spectrum cutoff. Returns
    {tag: beta}.
    """
    if not recordings:
        raise InvalidConfigError("need at least one recording")
    tags = list(recordings.keys())
    eig_sets = [covariance_spectrum(recordings[t]) for t in tags]
    models = fit_spectrum(eig_sets, share_cutoff=True)
    return {tag: model.beta for tag, model in zip(tags, models)}
