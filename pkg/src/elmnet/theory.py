"""Closed-form information budget model for a layer of noisy neuron-channels.

A layer of N neurons is treated as N parallel Gaussian channels whose
signal covariance eigenvalues decay as a power law i^(-beta). Per-neuron
signal-to-noise grows as a power law in the per-neuron effective parameter
count k_e up to a hard floor; splitting a fixed budget P into
N = floor(P / (k_e + k_c)) neurons then yields the representation
information

    i_rep(k_e) = 1/2 * sum_{i=1..N} log2(1 + s(k_e) * i^(-beta)),
    s(k_e) = min((gamma * k_e)^alpha, 1 / q_inf).

Sums use compensated summation (math.fsum) so tight identities such as the
alpha-independence of the curves at k_e = 1/gamma hold to ~1e-15.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidConfigError


@dataclass(frozen=True)
class TheoryParams:
    """Parameters of the budget model.

    alpha: per-neuron SNR growth exponent in k_e.
    beta: eigenvalue decay exponent across channel modes.
    gamma: parameter effectivity (sets the SNR = 1 point at k_e = 1/gamma).
    q_inf: irreducible normalized residual floor (caps SNR at 1/q_inf).
    P: total trainable-parameter budget for the layer.
    k_c: per-neuron connectivity overhead.
    """

    alpha: float
    beta: float
    gamma: float
    q_inf: float
    P: float
    k_c: float = 0.0

    def validate(self) -> "TheoryParams":
        for name in ("alpha", "beta", "gamma", "q_inf", "P"):
            if getattr(self, name) <= 0:
                raise InvalidConfigError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.k_c < 0:
            raise InvalidConfigError(f"k_c must be >= 0, got {self.k_c}")
        return self

    def with_(self, **kwargs) -> "TheoryParams":
        return replace(self, **kwargs)


def snr(k_e: float, theta: TheoryParams) -> float:
    """Leading-mode SNR: (gamma*k_e)^alpha capped at 1/q_inf."""
    if k_e <= 0:
        raise InvalidConfigError(f"k_e must be > 0, got {k_e}")
    return min((theta.gamma * k_e) ** theta.alpha, 1.0 / theta.q_inf)


def snr_knee(theta: TheoryParams) -> float:
    """k_e above which the SNR sits on the floor: 1/gamma * q_inf^(-1/alpha)."""
    return theta.q_inf ** (-1.0 / theta.alpha) / theta.gamma


def n_neurons(k_e: float, theta: TheoryParams) -> int:
    """Layer width under the budget: floor(P / (k_e + k_c))."""
    return int(math.floor(theta.P / (k_e + theta.k_c)))


def mode_sum(s: float, n: int, beta: float) -> float:
    """Compensated sum of 1/2 * log2(1 + s * i^(-beta)) over i = 1..n."""
    if n < 1:
        raise InvalidConfigError(f"need at least one channel, got n={n}")
    i = np.arange(1, n + 1, dtype=float)
    terms = np.log1p(s * i ** (-beta))
    return 0.5 * math.fsum(terms.tolist()) / math.log(2.0)


def i_rep(k_e: float, theta: TheoryParams) -> float:
    """Representation information in bits at per-neuron budget k_e."""
    n = n_neurons(k_e, theta)
    if n < 1:
        raise InvalidConfigError(
            f"budget P={theta.P} admits no neuron at k_e={k_e}, k_c={theta.k_c}")
    return mode_sum(snr(k_e, theta), n, theta.beta)


def i_rep_fixed_n(k_e: float, theta: TheoryParams, n: int) -> float:
    """Representation information with the layer width pinned to n."""
    return mode_sum(snr(k_e, theta), n, theta.beta)


def n_eff(n: int, beta: float) -> float:
    """Stable rank of the mode spectrum: sum_{i=1..n} i^(-beta)."""
    if n < 1:
        raise InvalidConfigError(f"n must be >= 1, got {n}")
    i = np.arange(1, n + 1, dtype=float)
    return math.fsum((i ** (-beta)).tolist())


def ke_grid(lo: float, hi: float, num: int) -> np.ndarray:
    """Geometric grid of per-neuron budgets."""
    if not (0 < lo < hi) or num < 2:
        raise InvalidConfigError(f"bad grid spec lo={lo}, hi={hi}, num={num}")
    return np.geomspace(lo, hi, num)


def theory_sweep(theta: TheoryParams, grid) -> list[dict]:
    """Evaluate (k_e, N, s, i_rep) over a k_e grid, skipping infeasible points."""
    rows = []
    for k_e in np.asarray(grid, dtype=float):
        n = n_neurons(k_e, theta)
        if n < 1:
            continue
        rows.append({
            "k_e": float(k_e), "N": n, "s": snr(k_e, theta),
            "i_rep": i_rep_fixed_n(k_e, theta, n),
        })
    return rows


def optimal_ke(theta: TheoryParams, grid) -> tuple[float, int, float]:
    """Argmax of i_rep over the grid; ties resolve to the smallest k_e.

    Returns (k_e*, N*, i_rep*).
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise InvalidConfigError("empty k_e grid")
    best = None
    for k_e in np.sort(grid):
        n = n_neurons(k_e, theta)
        if n < 1:
            continue
        value = i_rep_fixed_n(k_e, theta, n)
        if best is None or value > best[2]:
            best = (float(k_e), n, value)
    if best is None:
        raise InvalidConfigError("no feasible grid point under the budget")
    return best


def crossing(theta: TheoryParams) -> tuple[float, float]:
    """(k_x, N_x) where curves for different alpha coincide pre-floor.

    At k_e = 1/gamma the SNR base gamma*k_e equals one, so (gamma*k_e)^alpha
    is alpha-independent; the width there is P / (1/gamma + k_c).
    """
    if theta.gamma <= 0:
        raise InvalidConfigError(f"gamma must be > 0, got {theta.gamma}")
    k_x = 1.0 / theta.gamma
    n_x = theta.P / (k_x + theta.k_c)
    return k_x, n_x


@dataclass
class SlopeResult:
    slope: float
    intercept: float
    k_e: np.ndarray
    i_rep: np.ndarray
    regime_ok: bool
    warning: str | None = None


def low_snr_slope(theta: TheoryParams, grid, n_fixed: int | None = None) -> SlopeResult:
    """Log-log slope of i_rep vs k_e at fixed layer width.

    In the low-SNR regime (s <= 1, floor unreached) the slope approaches
    alpha. The width defaults to the budget width at the geometric middle
    of the grid. A regime violation is flagged, not raised.
    """
    grid = np.sort(np.asarray(grid, dtype=float))
    if grid.size < 2:
        raise InvalidConfigError("need at least two grid points")
    if n_fixed is None:
        mid = math.sqrt(grid[0] * grid[-1])
        n_fixed = max(n_neurons(mid, theta), 1)
    s_vals = np.array([snr(k, theta) for k in grid])
    regime_ok = bool(np.all(s_vals <= 1.0) and grid[-1] < snr_knee(theta))
    warning = None if regime_ok else (
        "grid leaves the low-SNR regime (s > 1 or floor reached); slope may "
        "not reflect the growth exponent")
    vals = np.array([i_rep_fixed_n(k, theta, n_fixed) for k in grid])
    slope, intercept = np.polyfit(np.log(grid), np.log(vals), 1)
    return SlopeResult(slope=float(slope), intercept=float(intercept),
                       k_e=grid, i_rep=vals, regime_ok=regime_ok,
                       warning=warning)
