"""Derivative-free optimizers: differential evolution (rand/1/bin) and a
Nelder-Mead simplex with adaptive coefficients. Both are deterministic for
a fixed seed and are the workhorses behind every nonlinear fit here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class OptResult:
    x: np.ndarray
    fun: float
    n_eval: int
    converged: bool
    message: str = ""


def differential_evolution(objective, bounds, pop_size: int | None = None,
                           max_gens: int = 300, f_weight: float = 0.8,
                           cr: float = 0.9, seed=0, tol: float = 0.0) -> OptResult:
    """Minimize `objective` over box `bounds` with the rand/1/bin strategy.

    bounds: sequence of (lo, hi). Population defaults to 15 per dimension.
    Candidates are clipped to the box. With tol > 0, stops early once the
    population's objective spread falls below tol.
    """
    bounds = np.asarray(bounds, dtype=float)
    if bounds.ndim != 2 or bounds.shape[1] != 2:
        raise ValueError(f"bounds must be (dim, 2), got {bounds.shape}")
    if np.any(~np.isfinite(bounds)):
        raise ValueError("bounds must be finite")
    dim = bounds.shape[0]
    lo, hi = bounds[:, 0], bounds[:, 1]
    if pop_size is None:
        pop_size = 15 * dim
    if pop_size < 4:
        raise ValueError(f"population must be >= 4, got {pop_size}")

    rng = np.random.default_rng(seed)
    pop = lo + rng.random((pop_size, dim)) * (hi - lo)
    fitness = np.array([objective(x) for x in pop], dtype=float)
    fitness = np.where(np.isnan(fitness), np.inf, fitness)
    n_eval = pop_size

    for _ in range(max_gens):
        for i in range(pop_size):
            r1, r2, r3 = _pick_three(rng, pop_size, i)
            mutant = pop[r1] + f_weight * (pop[r2] - pop[r3])
            cross = rng.random(dim) < cr
            cross[rng.integers(dim)] = True
            trial = np.where(cross, mutant, pop[i])
            trial = np.clip(trial, lo, hi)
            f_trial = objective(trial)
            n_eval += 1
            if np.isnan(f_trial):
                f_trial = np.inf
            if f_trial <= fitness[i]:
                pop[i] = trial
                fitness[i] = f_trial
        if tol > 0 and np.ptp(fitness[np.isfinite(fitness)]) < tol:
            break

    best = int(np.argmin(fitness))
    return OptResult(x=pop[best].copy(), fun=float(fitness[best]),
                     n_eval=n_eval, converged=True)


def _pick_three(rng, pop_size, exclude):
    idx = rng.permutation(pop_size)[:4]
    idx = idx[idx != exclude][:3]
    return idx[0], idx[1], idx[2]


def nelder_mead(objective, x0, x_tol: float = 1e-9, f_tol: float = 1e-12,
                max_iter: int | None = None, initial_step: float = 0.05) -> OptResult:
    """Minimize `objective` from `x0` with an adaptive-coefficient simplex.

    Coefficients follow the dimension-adaptive rule (expansion 1 + 2/n,
    contraction 0.75 - 1/(2n), shrink 1 - 1/n), which behaves better than
    the classic constants in higher dimensions. Stops when both the simplex
    diameter and the value spread fall below tolerance; hitting max_iter
    returns the best point with converged=False.
    """
    x0 = np.asarray(x0, dtype=float)
    if not np.all(np.isfinite(x0)):
        raise ValueError("start point must be finite")
    n = x0.size
    if max_iter is None:
        max_iter = 400 * n
    alpha = 1.0
    gamma = 1.0 + 2.0 / n
    rho = 0.75 - 1.0 / (2.0 * n)
    sigma = 1.0 - 1.0 / n if n > 1 else 0.5

    simplex = np.tile(x0, (n + 1, 1))
    for j in range(n):
        step = initial_step * max(abs(x0[j]), 1.0)
        simplex[j + 1, j] += step
    values = np.array([objective(x) for x in simplex], dtype=float)
    values = np.where(np.isnan(values), np.inf, values)
    n_eval = n + 1

    def call(x):
        nonlocal n_eval
        n_eval += 1
        f = objective(x)
        return np.inf if np.isnan(f) else f

    for _ in range(max_iter):
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
        diameter = np.max(np.abs(simplex[1:] - simplex[0]))
        spread = values[-1] - values[0]
        if diameter <= x_tol and spread <= f_tol:
            return OptResult(x=simplex[0].copy(), fun=float(values[0]),
                             n_eval=n_eval, converged=True)

        centroid = simplex[:-1].mean(axis=0)
        reflected = centroid + alpha * (centroid - simplex[-1])
        f_ref = call(reflected)
        if values[0] <= f_ref < values[-2]:
            simplex[-1], values[-1] = reflected, f_ref
        elif f_ref < values[0]:
            expanded = centroid + gamma * (reflected - centroid)
            f_exp = call(expanded)
            if f_exp < f_ref:
                simplex[-1], values[-1] = expanded, f_exp
            else:
                simplex[-1], values[-1] = reflected, f_ref
        else:
            if f_ref < values[-1]:
                contracted = centroid + rho * (reflected - centroid)
            else:
                contracted = centroid - rho * (centroid - simplex[-1])
            f_con = call(contracted)
            if f_con < min(f_ref, values[-1]):
                simplex[-1], values[-1] = contracted, f_con
            else:
                for j in range(1, n + 1):
                    simplex[j] = simplex[0] + sigma * (simplex[j] - simplex[0])
                    values[j] = call(simplex[j])

    order = np.argsort(values, kind="stable")
    return OptResult(x=simplex[order[0]].copy(), fun=float(values[order[0]]),
                     n_eval=n_eval, converged=False,
                     message="max iterations reached")
