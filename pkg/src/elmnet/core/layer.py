"""A layer of independently parameterized neurons, vectorized over neurons.

The per-step computation matches `neuron.elm_step` applied row-by-row (the
equivalence is tested); neurons never interact within a step, only through
the activity vector fed back at the next step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import NumericFaultError, ShapeError
from .config import NeuronConfig
from .neuron import make_decays, memory_timescales, mlp_shapes
from .wiring import LayerWiring


@dataclass
class LayerParams:
    """Stacked learnable tensors for n neurons sharing one NeuronConfig."""

    w_s: np.ndarray              # (n, d_s)
    mlp: list                    # [(W (n, out, in), b (n, out)), ...]
    w_r: np.ndarray              # (n, d_m)
    bias: np.ndarray             # (n,)
    tau_m: np.ndarray            # (d_m,) shared fixed timescales

    @property
    def n_neurons(self) -> int:
        return self.w_s.shape[0]

    def named_tensors(self, prefix: str = ""):
        yield prefix + "w_s", self.w_s
        for i, (W, b) in enumerate(self.mlp):
            yield f"{prefix}mlp{i}.W", W
            yield f"{prefix}mlp{i}.b", b
        yield prefix + "w_r", self.w_r
        yield prefix + "bias", self.bias

    def zeros_like(self) -> "LayerParams":
        return LayerParams(
            w_s=np.zeros_like(self.w_s),
            mlp=[(np.zeros_like(W), np.zeros_like(b)) for W, b in self.mlp],
            w_r=np.zeros_like(self.w_r),
            bias=np.zeros_like(self.bias),
            tau_m=self.tau_m,
        )


@dataclass
class LayerState:
    m: np.ndarray                # (batch, n, d_m)
    r: np.ndarray                # (batch, n)


def init_layer_params(config: NeuronConfig, n_neurons: int,
                      rng: np.random.Generator) -> LayerParams:
    """Stacked version of `init_neuron_params` for n independent neurons."""
    bound_s = 1.0 / np.sqrt(config.d_branch)
    w_s = rng.uniform(-bound_s, bound_s, size=(n_neurons, config.d_s))
    mlp = []
    for d_out, d_in in mlp_shapes(config):
        bound = 1.0 / np.sqrt(d_in)
        W = rng.uniform(-bound, bound, size=(n_neurons, d_out, d_in))
        b = rng.uniform(-bound, bound, size=(n_neurons, d_out))
        mlp.append((W, b))
    bound_r = 1.0 / np.sqrt(config.d_m)
    w_r = rng.uniform(-bound_r, bound_r, size=(n_neurons, config.d_m))
    bias = np.zeros(n_neurons)
    return LayerParams(w_s=w_s, mlp=mlp, w_r=w_r, bias=bias,
                       tau_m=memory_timescales(config))


def zero_layer_state(n_neurons: int, d_m: int, batch: int) -> LayerState:
    return LayerState(m=np.zeros((batch, n_neurons, d_m)),
                      r=np.zeros((batch, n_neurons)))


def gather_inputs(wiring: LayerWiring, u_t: np.ndarray,
                  a_prev: np.ndarray) -> np.ndarray:
    """Gather each neuron's d_s channels from [u_t, a_{t-1}].

    u_t: (batch, d_inp), a_prev: (batch, n_rec) -> (batch, n, d_s).
    """
    if u_t.shape[-1] != wiring.d_inp:
        raise ShapeError(f"u_t width {u_t.shape[-1]} != wiring d_inp {wiring.d_inp}")
    if a_prev.shape[-1] != wiring.n_rec:
        raise ShapeError(f"a_prev width {a_prev.shape[-1]} != wiring n_rec {wiring.n_rec}")
    channels = np.concatenate([u_t, a_prev], axis=-1)
    return channels[:, wiring.indices]


def layer_step(state: LayerState, u_t: np.ndarray, a_prev: np.ndarray,
               wiring: LayerWiring, params: LayerParams, config: NeuronConfig,
               z_mask: np.ndarray | None = None, want_internals: bool = False):
    """One step of the whole layer.

    Returns (new_state, a_t) or, with want_internals, a third dict holding
    the intermediates the backward pass needs (hidden pre-activations,
    tanh outputs, pre-tanh magnitudes).
    """
    kappa_m, kappa_lambda, kappa_r = make_decays(config, params.tau_m)

    z = gather_inputs(wiring, u_t, a_prev)
    if z_mask is not None:
        z = z * z_mask
    batch = z.shape[0]
    n = params.n_neurons

    weighted = z * params.w_s
    btree = config.c * weighted.reshape(batch, n, config.d_tree,
                                        config.d_branch).sum(axis=-1)

    decayed_m = kappa_m * state.m
    x = np.concatenate([btree, decayed_m], axis=-1)

    h = x
    hidden_pre = []
    for W, b in params.mlp[:-1]:
        hp = np.einsum("bni,nhi->bnh", h, W) + b
        hidden_pre.append(hp)
        h = np.square(np.maximum(hp, 0.0))
    W_out, b_out = params.mlp[-1]
    p = np.einsum("bni,noi->bno", h, W_out) + b_out
    delta_m = np.tanh(p)

    m_t = decayed_m + (1.0 - kappa_lambda) * delta_m
    v_t = np.einsum("bnj,nj->bn", m_t, params.w_r)

    if config.output_mode == "linear-no-filter":
        r_t = state.r
        a_t = params.bias + v_t
        pre = a_t
    else:
        r_t = kappa_r * state.r + (1.0 - kappa_r) * v_t
        pre = params.bias + v_t - r_t
        if config.output_mode == "binary-spike":
            a_t = (pre > 0.0).astype(float)
        else:
            a_t = np.maximum(pre, 0.0)

    if not (np.all(np.isfinite(m_t)) and np.all(np.isfinite(a_t))):
        bad = ~(np.isfinite(m_t).all(axis=-1) & np.isfinite(a_t))
        neuron = int(np.argwhere(bad)[0][1])
        raise NumericFaultError(
            f"non-finite state or activity at neuron {neuron}",
            location=("layer", neuron),
        )

    new_state = LayerState(m=m_t, r=r_t)
    if not want_internals:
        return new_state, a_t
    internals = {
        "z": z, "hidden_pre": hidden_pre, "delta_m": delta_m,
        "abs_p_sum": np.abs(p).sum(axis=(0, 2)), "v": v_t, "pre": pre,
    }
    return new_state, a_t, internals
