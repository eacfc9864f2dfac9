"""Two-layer network: recurrent hidden layer, feed-forward readout layer,
final linear map. Forward dynamics with optional activity taps and a full
trace for the backward pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericFaultError, ShapeError
from ..rng import stream_rng
from .config import NetworkConfig
from .layer import (LayerParams, LayerState, gather_inputs, init_layer_params,
                    layer_step, zero_layer_state)
from .neuron import count_params
from .wiring import LayerWiring, init_feedforward_wiring, init_wiring


@dataclass
class NetworkParams:
    hidden: LayerParams
    readout: LayerParams
    w_out: np.ndarray            # (d_out, n_readout)
    b_out: np.ndarray            # (d_out,)

    def named_tensors(self):
        yield from self.hidden.named_tensors("hidden.")
        yield from self.readout.named_tensors("readout.")
        yield "final.W", self.w_out
        yield "final.b", self.b_out

    def zeros_like(self) -> "NetworkParams":
        return NetworkParams(
            hidden=self.hidden.zeros_like(),
            readout=self.readout.zeros_like(),
            w_out=np.zeros_like(self.w_out),
            b_out=np.zeros_like(self.b_out),
        )


@dataclass
class NetworkWiring:
    hidden: LayerWiring
    readout: LayerWiring


@dataclass
class NetworkState:
    hidden: LayerState
    readout: LayerState
    a_prev: np.ndarray           # (batch, n_rec) last hidden activity


@dataclass
class Network:
    """Configuration, wiring, and parameters bundled for convenience."""

    config: NetworkConfig
    wiring: NetworkWiring
    params: NetworkParams


def build_network(config: NetworkConfig, seed: int) -> Network:
    """Initialize wiring and parameters from named streams of `seed`."""
    config.validate()
    wiring_rng = stream_rng(seed, "wiring")
    init_rng = stream_rng(seed, "init")
    hidden_wiring = init_wiring(config.n_rec, config.d_inp,
                                config.hidden.d_s, config.rho_rec, wiring_rng)
    readout_wiring = init_feedforward_wiring(config.readout_width, config.n_rec,
                                             config.readout.d_s, wiring_rng)
    hidden = init_layer_params(config.hidden, config.n_rec, init_rng)
    readout = init_layer_params(config.readout, config.readout_width, init_rng)
    bound = 1.0 / np.sqrt(config.readout_width)
    w_out = init_rng.uniform(-bound, bound, size=(config.d_out, config.readout_width))
    b_out = init_rng.uniform(-bound, bound, size=config.d_out)
    return Network(config=config,
                   wiring=NetworkWiring(hidden=hidden_wiring, readout=readout_wiring),
                   params=NetworkParams(hidden=hidden, readout=readout,
                                        w_out=w_out, b_out=b_out))


def zero_network_state(config: NetworkConfig, batch: int) -> NetworkState:
    return NetworkState(
        hidden=zero_layer_state(config.n_rec, config.hidden.d_m, batch),
        readout=zero_layer_state(config.readout_width, config.readout.d_m, batch),
        a_prev=np.zeros((batch, config.n_rec)),
    )


@dataclass
class DropoutSpec:
    p_input: float = 0.0
    p_recurrent: float = 0.0

    @property
    def active(self) -> bool:
        return self.p_input > 0.0 or self.p_recurrent > 0.0


@dataclass
class ForwardTrace:
    """Everything the backward pass needs, stacked over time."""

    inputs: np.ndarray                   # (batch, T, d_inp)
    a_hid: np.ndarray                    # (batch, T, n_rec)
    a_hid_init: np.ndarray               # (batch, n_rec) activity before step 0
    a_ro: np.ndarray                     # (batch, T, n_readout)
    m_hid: np.ndarray                    # (batch, T+1, n_rec, d_m)
    m_ro: np.ndarray                     # (batch, T+1, n_readout, d_m)
    hid_internals: list = field(default_factory=list)   # per-step dicts
    ro_internals: list = field(default_factory=list)
    z_masks: list = field(default_factory=list)         # per-step or empty
    abs_p_mean: np.ndarray | None = None                # (n_rec,) per-neuron
                                                        # time-mean |pre-tanh|


@dataclass
class ForwardResult:
    logits: np.ndarray                   # (batch, T, d_out)
    state: NetworkState
    taps: dict | None = None
    trace: ForwardTrace | None = None


def network_forward(net: Network, inputs: np.ndarray,
                    state: NetworkState | None = None, reset: bool = False,
                    taps: bool = False, trace: bool = False,
                    dropout: DropoutSpec | None = None,
                    dropout_rng: np.random.Generator | None = None) -> ForwardResult:
    """Run the network over an input sequence.

    inputs: (batch, T, d_inp) already embedded. With taps=True, records
    hidden activity and per-neuron memory readouts. With trace=True,
    records all intermediates needed by the backward pass.
    """
    cfg = net.config
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim != 3 or inputs.shape[2] != cfg.d_inp:
        raise ShapeError(f"inputs must be (batch, T, {cfg.d_inp}), got {inputs.shape}")
    batch, T, _ = inputs.shape

    if state is None or reset:
        state = zero_network_state(cfg, batch)
    hid_state, ro_state, a_prev = state.hidden, state.readout, state.a_prev

    use_dropout = dropout is not None and dropout.active
    if use_dropout and dropout_rng is None:
        raise ValueError("dropout requires a generator")

    logits = np.zeros((batch, T, cfg.d_out))
    tap_activity = np.zeros((batch, T, cfg.n_rec)) if taps else None
    tap_readout = np.zeros((batch, T, cfg.n_rec)) if taps else None

    tr = None
    if trace:
        tr = ForwardTrace(
            inputs=inputs,
            a_hid=np.zeros((batch, T, cfg.n_rec)),
            a_hid_init=a_prev.copy(),
            a_ro=np.zeros((batch, T, cfg.readout_width)),
            m_hid=np.zeros((batch, T + 1, cfg.n_rec, cfg.hidden.d_m)),
            m_ro=np.zeros((batch, T + 1, cfg.readout_width, cfg.readout.d_m)),
        )
        tr.m_hid[:, 0] = hid_state.m
        tr.m_ro[:, 0] = ro_state.m
        abs_p_sum = np.zeros(cfg.n_rec)

    rec_mask = net.wiring.hidden.recurrent_mask
    zeros_ro_prev = np.zeros((batch, cfg.readout_width))

    for t in range(T):
        u_t = inputs[:, t]
        z_mask = None
        if use_dropout:
            keep_in = 1.0 - dropout.p_input
            keep_rec = 1.0 - dropout.p_recurrent
            draw = dropout_rng.random((batch, cfg.n_rec, cfg.hidden.d_s))
            keep = np.where(rec_mask, keep_rec, keep_in)
            z_mask = (draw < keep) / np.maximum(keep, 1e-12)

        layer_name = "hidden"
        try:
            if trace:
                hid_state, a_hid, hid_int = layer_step(
                    hid_state, u_t, a_prev, net.wiring.hidden,
                    net.params.hidden, cfg.hidden, z_mask=z_mask,
                    want_internals=True)
                layer_name = "readout"
                ro_state, a_ro, ro_int = layer_step(
                    ro_state, a_hid, zeros_ro_prev, net.wiring.readout,
                    net.params.readout, cfg.readout, want_internals=True)
            else:
                hid_state, a_hid = layer_step(
                    hid_state, u_t, a_prev, net.wiring.hidden,
                    net.params.hidden, cfg.hidden, z_mask=z_mask)
                layer_name = "readout"
                ro_state, a_ro = layer_step(
                    ro_state, a_hid, zeros_ro_prev, net.wiring.readout,
                    net.params.readout, cfg.readout)
        except NumericFaultError as err:
            neuron = err.location[1] if isinstance(err.location, tuple) else err.location
            raise NumericFaultError(
                f"numeric fault in {layer_name} layer at t={t}: {err}",
                location=(layer_name, neuron, t)) from err

        logits[:, t] = a_ro @ net.params.w_out.T + net.params.b_out

        if taps:
            tap_activity[:, t] = a_hid
            tap_readout[:, t] = np.einsum("bnj,nj->bn", hid_state.m,
                                          net.params.hidden.w_r)
        if trace:
            tr.a_hid[:, t] = a_hid
            tr.a_ro[:, t] = a_ro
            tr.m_hid[:, t + 1] = hid_state.m
            tr.m_ro[:, t + 1] = ro_state.m
            tr.hid_internals.append(hid_int)
            tr.ro_internals.append(ro_int)
            tr.z_masks.append(z_mask)
            abs_p_sum += hid_int["abs_p_sum"]

        a_prev = a_hid

    final_state = NetworkState(hidden=hid_state, readout=ro_state, a_prev=a_prev)
    taps_out = None
    if taps:
        taps_out = {"activity": tap_activity, "memory_readout": tap_readout}
    if trace:
        denom = max(batch * T * cfg.hidden.d_m, 1)
        tr.abs_p_mean = abs_p_sum / denom
    return ForwardResult(logits=logits, state=final_state, taps=taps_out, trace=tr)


def embed_onehot(tokens: np.ndarray, vocab_size: int, scale: float) -> np.ndarray:
    """Scaled one-hot embedding of integer tokens: (..., T) -> (..., T, V)."""
    tokens = np.asarray(tokens)
    out = np.zeros(tokens.shape + (vocab_size,))
    np.put_along_axis(out, tokens[..., None], scale, axis=-1)
    return out


def network_param_counts(config: NetworkConfig) -> dict:
    """Parameter accounting: per-neuron (k_e, k_c) and layer/network totals.

    hidden_P = n_rec * (k_e + k_c) excludes the per-neuron output biases,
    matching the per-neuron counting convention; total counts everything
    trainable.
    """
    k_e, k_c = count_params(config.hidden)
    ro_k_e, ro_k_c = count_params(config.readout)
    n_ro = config.readout_width
    hidden_P = config.n_rec * (k_e + k_c)
    readout_P = n_ro * (ro_k_e + ro_k_c)
    final_P = config.d_out * n_ro + config.d_out
    total = (hidden_P + config.n_rec) + (readout_P + n_ro) + final_P
    return {
        "k_e": k_e, "k_c": k_c, "hidden_P": hidden_P,
        "readout_k_e": ro_k_e, "readout_k_c": ro_k_c,
        "readout_P": readout_P, "final_P": final_P,
        "total_trainable": total,
    }
