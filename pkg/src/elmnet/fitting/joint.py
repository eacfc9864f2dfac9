"""Joint fit of the budget-information model to several metric sweeps.

Each experiment is a sweep of per-neuron budget k_e against a task metric
at known (P, k_c). All experiments share one (alpha, beta, gamma, q_inf)
tuple; an experiment may declare that it varies alpha or beta, in which
case a per-experiment variant value is fitted for that component. A single
affine map a * (-i_rep) + b converts information to the metric scale; for
any candidate exponent tuple the optimal (a, b) is the exact least-squares
solution, so the outer search (differential evolution, then Nelder-Mead
polish) runs only over the exponent parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidConfigError
from ..theory import TheoryParams, mode_sum, n_neurons, snr
from .optimizers import differential_evolution, nelder_mead


@dataclass
class ExperimentSpec:
    tag: str
    k_e: np.ndarray
    metric: np.ndarray
    P: float
    k_c: float = 0.0
    varies: str | None = None     # None, 'alpha', or 'beta'

    def __post_init__(self):
        self.k_e = np.asarray(self.k_e, dtype=float)
        self.metric = np.asarray(self.metric, dtype=float)
        if self.k_e.shape != self.metric.shape or self.k_e.ndim != 1:
            raise InvalidConfigError(
                f"experiment {self.tag!r}: k_e and metric must be equal-length vectors")
        if self.varies not in (None, "alpha", "beta"):
            raise InvalidConfigError(
                f"experiment {self.tag!r}: varies must be None, 'alpha' or 'beta'")


@dataclass
class JointFitResult:
    shared: dict
    variants: dict
    affine: tuple
    predictions: list
    residuals: list
    rss: float
    pearson_r: float
    n_points: int
    n_free: int
    warnings: list = field(default_factory=list)


def _widths(exp: ExperimentSpec) -> np.ndarray:
    theta = TheoryParams(alpha=1, beta=1, gamma=1, q_inf=1, P=exp.P, k_c=exp.k_c)
    widths = np.array([n_neurons(k, theta) for k in exp.k_e], dtype=int)
    if np.any(widths < 1):
        raise InvalidConfigError(
            f"experiment {exp.tag!r}: some k_e exceed the budget (width < 1)")
    return widths


def _info_values(exp, widths, alpha, beta, gamma, q_inf):
    theta = TheoryParams(alpha=alpha, beta=beta, gamma=gamma, q_inf=q_inf,
                         P=exp.P, k_c=exp.k_c)
    return np.array([mode_sum(snr(k, theta), n, beta)
                     for k, n in zip(exp.k_e, widths)])


def _affine_solve(values, metrics):
    """Exact least-squares (a, b) for metric ~ a * values + b."""
    A = np.stack([values, np.ones_like(values)], axis=1)
    coef, *_ = np.linalg.lstsq(A, metrics, rcond=None)
    pred = A @ coef
    rss = float(np.sum((metrics - pred) ** 2))
    return float(coef[0]), float(coef[1]), rss


def joint_theory_fit(experiments, de_gens: int = 150, de_pop: int | None = None,
                     seed: int = 0, bounds: dict | None = None) -> JointFitResult:
    """Fit shared exponents, per-experiment variants, and the affine map.

    Raises if the free-parameter count exceeds half the point count.
    """
    experiments = list(experiments)
    if not experiments:
        raise InvalidConfigError("need at least one experiment")
    widths = [_widths(exp) for exp in experiments]
    variant_tags = [exp.tag for exp in experiments if exp.varies is not None]
    n_points = sum(exp.k_e.size for exp in experiments)
    n_free = 4 + len(variant_tags) + 2
    if n_free > n_points / 2:
        raise InvalidConfigError(
            f"under-determined fit: {n_free} free parameters for {n_points} points")

    k_all = np.concatenate([exp.k_e for exp in experiments])
    metric_all = np.concatenate([exp.metric for exp in experiments])
    k_min, k_max = k_all.min(), k_all.max()

    default_bounds = {
        "alpha": (0.05, 5.0), "beta": (0.05, 5.0),
        "log_gamma": (np.log(1e-2 / k_max), np.log(1e2 / k_min)),
        "log_q_inf": (np.log(1e-8), 0.0),
    }
    if bounds:
        default_bounds.update(bounds)

    box = [default_bounds["alpha"], default_bounds["beta"],
           default_bounds["log_gamma"], default_bounds["log_q_inf"]]
    for exp in experiments:
        if exp.varies == "alpha":
            box.append(default_bounds["alpha"])
        elif exp.varies == "beta":
            box.append(default_bounds["beta"])

    def model_values(theta):
        alpha, beta = theta[0], theta[1]
        gamma, q_inf = np.exp(theta[2]), np.exp(theta[3])
        values = []
        j = 4
        for exp, w in zip(experiments, widths):
            a_i, b_i = alpha, beta
            if exp.varies == "alpha":
                a_i = theta[j]
                j += 1
            elif exp.varies == "beta":
                b_i = theta[j]
                j += 1
            values.append(-_info_values(exp, w, a_i, b_i, gamma, q_inf))
        return values

    def objective(theta):
        try:
            values = model_values(theta)
        except (InvalidConfigError, OverflowError, FloatingPointError):
            return np.inf
        flat = np.concatenate(values)
        if not np.all(np.isfinite(flat)):
            return np.inf
        return _affine_solve(flat, metric_all)[2]

    de = differential_evolution(objective, box, pop_size=de_pop,
                                max_gens=de_gens, seed=seed)
    polish = nelder_mead(objective, de.x, x_tol=1e-10, f_tol=1e-14)
    theta = polish.x if polish.fun <= de.fun else de.x

    values = model_values(theta)
    flat = np.concatenate(values)
    a, b, rss = _affine_solve(flat, metric_all)
    predictions = [a * v + b for v in values]
    residuals = [exp.metric - pred for exp, pred in zip(experiments, predictions)]
    pred_all = np.concatenate(predictions)
    if np.std(pred_all) > 0 and np.std(metric_all) > 0:
        pearson = float(np.corrcoef(pred_all, metric_all)[0, 1])
    else:
        pearson = 0.0

    variants = {}
    j = 4
    for exp in experiments:
        if exp.varies is not None:
            variants[exp.tag] = float(theta[j])
            j += 1
    warnings = []
    if a <= 0:
        warnings.append("affine slope is non-positive; metric does not "
                        "decrease with information")
    return JointFitResult(
        shared={"alpha": float(theta[0]), "beta": float(theta[1]),
                "gamma": float(np.exp(theta[2])),
                "q_inf": float(np.exp(theta[3]))},
        variants=variants, affine=(a, b), predictions=predictions,
        residuals=residuals, rss=rss, pearson_r=pearson,
        n_points=n_points, n_free=n_free, warnings=warnings)
