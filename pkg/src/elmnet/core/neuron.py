"""Single-neuron dynamics: decay factors, branch summation, one time step.

All functions here operate on one neuron with explicit state, so they stay
directly checkable against hand evaluation. The vectorized layer code in
`layer.py` must agree with these step-for-step (tested).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidConfigError, NumericFaultError, ShapeError
from .config import NeuronConfig


def memory_timescales(config: NeuronConfig) -> np.ndarray:
    """Fixed per-unit timescales, log-equidistant in [tau_min, tau_max].

    A single memory unit gets tau_max (the slow end).
    """
    if config.d_m == 1:
        return np.array([config.tau_max], dtype=float)
    return np.geomspace(config.tau_min, config.tau_max, config.d_m)


def make_decays(config: NeuronConfig, tau_m: np.ndarray):
    """Per-step decay factors (kappa_m, kappa_lambda, kappa_r).

    kappa_m = exp(-1/tau_m), kappa_lambda = exp(-lambda/tau_m),
    kappa_r = exp(-1/tau_r).
    """
    tau_m = np.asarray(tau_m, dtype=float)
    if np.any(tau_m <= 0):
        raise InvalidConfigError(f"memory timescales must be > 0, got {tau_m}")
    if config.tau_r <= 0:
        raise InvalidConfigError(f"tau_r must be > 0, got {config.tau_r}")
    if config.lam <= 0:
        raise InvalidConfigError(f"lambda must be > 0, got {config.lam}")
    kappa_m = np.exp(-1.0 / tau_m)
    kappa_lambda = np.exp(-config.lam / tau_m)
    kappa_r = float(np.exp(-1.0 / config.tau_r))
    return kappa_m, kappa_lambda, kappa_r


def branch_sum(weighted_inputs: np.ndarray, d_tree: int, d_branch: int) -> np.ndarray:
    """Sum contiguous segments of length d_branch into d_tree branch totals."""
    weighted_inputs = np.asarray(weighted_inputs)
    if weighted_inputs.shape[-1] != d_tree * d_branch:
        raise ShapeError(
            f"expected {d_tree * d_branch} weighted inputs, got {weighted_inputs.shape[-1]}"
        )
    shape = weighted_inputs.shape[:-1] + (d_tree, d_branch)
    return weighted_inputs.reshape(shape).sum(axis=-1)


def relu_sq(x: np.ndarray) -> np.ndarray:
    """Squared-ReLU hidden activation used inside the update MLP."""
    return np.square(np.maximum(x, 0.0))


def mlp_apply(stages, x: np.ndarray) -> np.ndarray:
    """Apply the update MLP (squared-ReLU hidden layers, linear output).

    `stages` is a list of (W, b) pairs; all but the last are hidden layers.
    """
    h = x
    for W, b in stages[:-1]:
        h = relu_sq(h @ W.T + b)
    W, b = stages[-1]
    return h @ W.T + b


@dataclass
class NeuronParams:
    """Learnable tensors of one neuron plus its fixed timescales."""

    w_s: np.ndarray              # (d_s,) synapse weights
    mlp: list                    # [(W, b), ...] update-MLP stages
    w_r: np.ndarray              # (d_m,) memory readout
    b: float                     # output bias
    tau_m: np.ndarray            # (d_m,) fixed timescales


@dataclass
class NeuronState:
    m: np.ndarray                # (d_m,) memory units
    r: float                     # EMA of the memory readout


def zero_state(config: NeuronConfig) -> NeuronState:
    return NeuronState(m=np.zeros(config.d_m), r=0.0)


def mlp_shapes(config: NeuronConfig) -> list[tuple[int, int]]:
    """(out, in) shapes of the update-MLP stages. l_mlp = 0 is one linear map."""
    d_in = config.d_tree + config.d_m
    if config.l_mlp == 0:
        return [(config.d_m, d_in)]
    shapes = [(config.d_mlp, d_in)]
    shapes += [(config.d_mlp, config.d_mlp)] * (config.l_mlp - 1)
    shapes.append((config.d_m, config.d_mlp))
    return shapes


def init_neuron_params(config: NeuronConfig, rng: np.random.Generator) -> NeuronParams:
    """Fan-in-scaled uniform init; synapse weights uniform +-1/sqrt(d_branch);
    output bias starts at zero (the high-pass output needs no bias to fire).
    """
    bound_s = 1.0 / np.sqrt(config.d_branch)
    w_s = rng.uniform(-bound_s, bound_s, size=config.d_s)
    mlp = []
    for d_out, d_in in mlp_shapes(config):
        bound = 1.0 / np.sqrt(d_in)
        W = rng.uniform(-bound, bound, size=(d_out, d_in))
        b = rng.uniform(-bound, bound, size=d_out)
        mlp.append((W, b))
    bound_r = 1.0 / np.sqrt(config.d_m)
    w_r = rng.uniform(-bound_r, bound_r, size=config.d_m)
    return NeuronParams(w_s=w_s, mlp=mlp, w_r=w_r, b=0.0,
                        tau_m=memory_timescales(config))


def _check_finite(x, stage: str):
    if not np.all(np.isfinite(x)):
        raise NumericFaultError(f"non-finite value at stage {stage!r}", location=stage)


def elm_step(state: NeuronState, z_t: np.ndarray, params: NeuronParams,
             config: NeuronConfig) -> tuple[NeuronState, float]:
    """Advance one neuron by one step; returns (new state, activity a_t).

    Stages: synapse weighting and branch summation, bounded memory-update
    proposal from the MLP, leaky memory integration, EMA of the linear
    readout, and the high-passed output nonlinearity.
    """
    kappa_m, kappa_lambda, kappa_r = make_decays(config, params.tau_m)

    b_t = config.c * branch_sum(np.asarray(z_t) * params.w_s,
                                config.d_tree, config.d_branch)
    _check_finite(b_t, "branch")

    decayed_m = kappa_m * state.m
    delta_m = np.tanh(mlp_apply(params.mlp, np.concatenate([b_t, decayed_m])))
    _check_finite(delta_m, "update")

    m_t = decayed_m + (1.0 - kappa_lambda) * delta_m
    _check_finite(m_t, "memory")

    v_t = float(params.w_r @ m_t)
    if config.output_mode == "linear-no-filter":
        r_t = state.r
        a_t = params.b + v_t
    else:
        r_t = kappa_r * state.r + (1.0 - kappa_r) * v_t
        pre = params.b + v_t - r_t
        if config.output_mode == "binary-spike":
            a_t = 1.0 if pre > 0.0 else 0.0
        else:
            a_t = max(pre, 0.0)
    _check_finite(np.array([r_t, a_t]), "output")

    return NeuronState(m=m_t, r=r_t), a_t


def count_params(config: NeuronConfig) -> tuple[int, int]:
    """Per-neuron (k_e, k_c) parameter counts.

    k_e counts the update MLP (weights and biases) plus the memory readout;
    the scalar output bias is excluded. k_c counts the synapse weights.
    """
    config.validate()
    k_e = sum(d_out * d_in + d_out for d_out, d_in in mlp_shapes(config))
    k_e += config.d_m
    k_c = config.d_s
    return k_e, k_c
