"""Decay-curve model zoo, log-space least squares, and AICc selection.

Models (all fit by minimizing squared residuals of log y):
    power:            y = c * x^(-a)
    power_max_floor:  y = max(c * x^(-a), f)
    power_add_floor:  y = c * x^(-a) + f
    exponential:      y = c * exp(-a * x)
    logarithmic:      y = c - a * ln(x), clipped to a small positive value

Floor fits are seeded from the pure power-law fit for the slope and from
the last evaluation point for the floor, then polished with Nelder-Mead
from a few perturbed starts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import FitFailureError, InvalidConfigError, ShapeError
from .optimizers import nelder_mead

MODEL_IDS = ("power", "power_max_floor", "power_add_floor", "exponential",
             "logarithmic")
_N_PARAMS = {"power": 2, "power_max_floor": 3, "power_add_floor": 3,
             "exponential": 2, "logarithmic": 2}
_LOG_CLIP = 1e-300


@dataclass
class FitResult:
    model: str
    params: dict
    rss: float                    # residual sum of squares in log space
    n: int
    k: int
    aicc: float
    residuals: np.ndarray = field(repr=False, default=None)
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "model": self.model, "params": self.params, "rss": self.rss,
            "n": self.n, "k": self.k, "aicc": self.aicc,
            "residuals": [float(r) for r in self.residuals],
            "warnings": list(self.warnings),
        }


def model_predict(model: str, params: dict, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if model == "power":
        return params["c"] * x ** (-params["a"])
    if model == "power_max_floor":
        return np.maximum(params["c"] * x ** (-params["a"]), params["f"])
    if model == "power_add_floor":
        return params["c"] * x ** (-params["a"]) + params["f"]
    if model == "exponential":
        return params["c"] * np.exp(-params["a"] * x)
    if model == "logarithmic":
        return np.maximum(params["c"] - params["a"] * np.log(x), _LOG_CLIP)
    raise InvalidConfigError(f"unknown model {model!r}")


def aicc(rss_log: float, n: int, k: int) -> float:
    """Corrected Akaike information criterion for a least-squares fit."""
    if n <= k + 1:
        raise InvalidConfigError(f"AICc needs n > k + 1, got n={n}, k={k}")
    if rss_log <= 0:
        rss_log = np.finfo(float).tiny
    return n * math.log(rss_log / n) + 2 * k + (2 * k * (k + 1)) / (n - k - 1)


def _clean_xy(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ShapeError(f"x and y must be equal-length vectors, got {x.shape}, {y.shape}")
    keep = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    dropped = int(np.sum(~keep))
    order = np.argsort(x[keep], kind="stable")
    return x[keep][order], y[keep][order], dropped


def _linear_logfit(u, logy):
    """Least-squares line logy = b0 + b1*u."""
    A = np.stack([np.ones_like(u), u], axis=1)
    coef, *_ = np.linalg.lstsq(A, logy, rcond=None)
    return coef[0], coef[1]


def _log_rss(model, params, x, logy):
    pred = model_predict(model, params, x)
    if np.any(pred <= 0) or not np.all(np.isfinite(pred)):
        return np.inf
    res = logy - np.log(pred)
    return float(res @ res)


def _unpack(model, theta):
    if model in ("power", "exponential"):
        return {"c": math.exp(theta[0]), "a": theta[1]}
    if model in ("power_max_floor", "power_add_floor"):
        return {"c": math.exp(theta[0]), "a": theta[1], "f": math.exp(theta[2])}
    if model == "logarithmic":
        return {"c": theta[0], "a": theta[1]}
    raise InvalidConfigError(f"unknown model {model!r}")


def fit_decay(x, y, model: str = "power", seeds=(0, 1, 2, 3)) -> FitResult:
    """Fit one decay model in log space; multi-start for the floor models.

    Points with non-positive x or y are dropped (count reported in
    warnings). `seeds` controls the perturbed restarts around the seed
    point; results are deterministic given (data, seeds).
    """
    if model not in MODEL_IDS:
        raise InvalidConfigError(f"model must be one of {MODEL_IDS}, got {model!r}")
    x, y, dropped = _clean_xy(x, y)
    k = _N_PARAMS[model]
    n = x.size
    if n < k + 2:
        raise InvalidConfigError(f"need at least {k + 2} usable points, got {n}")
    logy = np.log(y)
    warnings = []
    if dropped:
        warnings.append(f"dropped {dropped} non-positive or non-finite points")

    # Closed-form seeds from the linear structure of each model in log space.
    b0, b1 = _linear_logfit(np.log(x), logy)          # log y ~ log c - a log x
    power_seed = np.array([b0, -b1])
    if model == "power":
        theta0 = power_seed
    elif model == "exponential":
        e0, e1 = _linear_logfit(x, logy)
        theta0 = np.array([e0, -e1])
    elif model == "logarithmic":
        l0, l1 = _linear_logfit(np.log(x), y)         # y ~ c - a ln x
        theta0 = np.array([l0, -l1])
    else:
        floor_seed = math.log(max(y[-1], _LOG_CLIP))
        theta0 = np.array([power_seed[0], power_seed[1], floor_seed])

    def objective(theta):
        return _log_rss(model, _unpack(model, theta), x, logy)

    best = None
    starts = [theta0]
    for s in seeds:
        rng = np.random.default_rng(s)
        starts.append(theta0 * (1.0 + 0.1 * rng.standard_normal(theta0.size))
                      + 0.05 * rng.standard_normal(theta0.size))
    for start in starts:
        if not np.all(np.isfinite(start)):
            continue
        res = nelder_mead(objective, start, x_tol=1e-10, f_tol=1e-14)
        if not np.isfinite(res.fun):
            continue
        if best is None or res.fun < best.fun:
            best = res
    if best is None:
        raise FitFailureError(
            f"all starts diverged fitting {model}",
            diagnostics={"n": n, "starts": len(starts)})

    params = _unpack(model, best.x)
    rss = best.fun
    residuals = logy - np.log(np.maximum(model_predict(model, params, x), _LOG_CLIP))
    return FitResult(model=model, params=params, rss=rss, n=n, k=k,
                     aicc=aicc(rss, n, k), residuals=residuals,
                     warnings=warnings)


def select_model(x, y, models=MODEL_IDS, seeds=(0, 1, 2, 3)) -> dict:
    """Fit several models and rank them by AICc (lower is better)."""
    fits = {}
    for model in models:
        try:
            fits[model] = fit_decay(x, y, model, seeds=seeds)
        except FitFailureError:
            continue
    if not fits:
        raise FitFailureError("no model could be fitted")
    ranked = sorted(fits.values(), key=lambda f: f.aicc)
    return {"best": ranked[0], "fits": fits,
            "delta_aicc": {m: f.aicc - ranked[0].aicc for m, f in fits.items()}}
