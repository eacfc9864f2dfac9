"""Reverse-mode backpropagation through time for the two-layer network.

The forward trace (core.network.network_forward with trace=True) stores
per-step intermediates; this module walks them backwards, accumulating
gradients for every learnable tensor. Fixed quantities (timescales,
wiring) receive no gradient. Binary-spiking neurons use a surrogate
derivative at the output threshold; everything else is exact.
"""

from __future__ import annotations

import numpy as np

from ..core.config import NeuronConfig
from ..core.layer import LayerParams
from ..core.network import ForwardTrace, Network, NetworkParams
from ..core.neuron import make_decays
from ..core.wiring import LayerWiring
from ..errors import NumericFaultError
from .losses import LossConfig, loss_xent, superspike


def _scatter_to_channels(gz: np.ndarray, wiring: LayerWiring) -> np.ndarray:
    """Accumulate per-synapse gradients (batch, n, d_s) onto channels."""
    batch = gz.shape[0]
    n_chan = wiring.n_channels
    flat = wiring.indices.ravel()
    offsets = (flat[None, :] + n_chan * np.arange(batch)[:, None]).ravel()
    out = np.bincount(offsets, weights=gz.reshape(batch, -1).ravel(),
                      minlength=batch * n_chan)
    return out.reshape(batch, n_chan)


def _layer_backward_step(ga, m_prev, m_t, internals, z_mask, params: LayerParams,
                         config: NeuronConfig, grads: LayerParams,
                         gm_carry, gr_carry, gp_extra=None,
                         surrogate_scale: float = 100.0):
    """Backward through one layer step. Returns (g_channels, gm_carry, gr_carry)."""
    kappa_m, kappa_lambda, kappa_r = make_decays(config, params.tau_m)
    z = internals["z"]
    pre = internals["pre"]
    delta_m = internals["delta_m"]

    if config.output_mode == "linear-no-filter":
        gpre = ga
        gv = gpre
        gr_new = gr_carry
    else:
        if config.output_mode == "binary-spike":
            dact = superspike(pre, surrogate_scale)
        else:
            dact = (pre > 0.0).astype(float)
        gpre = ga * dact
        gr = -gpre + kappa_r * gr_carry
        gv = gpre + (1.0 - kappa_r) * gr
        gr_new = gr
    grads.bias += gpre.sum(axis=0)

    gm_total = gv[..., None] * params.w_r[None, :, :] + gm_carry
    grads.w_r += np.einsum("bn,bnj->nj", gv, m_t)

    g_delta = gm_total * (1.0 - kappa_lambda)
    gp = g_delta * (1.0 - np.square(delta_m))
    if gp_extra is not None:
        gp = gp + gp_extra

    # Rebuild the MLP stage inputs from the stored pre-activations.
    batch, n = z.shape[0], params.n_neurons
    weighted = z * params.w_s
    btree = config.c * weighted.reshape(batch, n, config.d_tree,
                                        config.d_branch).sum(axis=-1)
    decayed_m = kappa_m * m_prev
    x = np.concatenate([btree, decayed_m], axis=-1)
    stage_inputs = [x]
    for hp in internals["hidden_pre"]:
        stage_inputs.append(np.square(np.maximum(hp, 0.0)))

    g = gp
    for i in range(len(params.mlp) - 1, -1, -1):
        W, _ = params.mlp[i]
        gW, gb = grads.mlp[i]
        gW += np.einsum("bno,bni->noi", g, stage_inputs[i])
        gb += g.sum(axis=0)
        g = np.einsum("bno,noi->bni", g, W)
        if i > 0:
            hp = internals["hidden_pre"][i - 1]
            g = g * (2.0 * np.maximum(hp, 0.0))

    g_btree = g[..., :config.d_tree]
    g_dm_mlp = g[..., config.d_tree:]
    g_dm_total = gm_total + g_dm_mlp
    gm_new = kappa_m * g_dm_total

    g_weighted = config.c * np.repeat(g_btree, config.d_branch, axis=-1)
    grads.w_s += np.einsum("bns,bns->ns", g_weighted, z)
    gz = g_weighted * params.w_s
    if z_mask is not None:
        gz = gz * z_mask
    return gz, gm_new, gr_new


def network_backward(net: Network, trace: ForwardTrace, glogits: np.ndarray,
                     loss_cfg: LossConfig | None = None,
                     surrogate_scale: float = 100.0) -> NetworkParams:
    """Accumulate gradients over the traced window.

    glogits: (batch, T, d_out) gradient of the loss wrt the logits.
    Regularizer gradients (activity L1, MLP-output L2) are injected here
    from the trace statistics when loss_cfg carries nonzero coefficients.
    """
    cfg = net.config
    params = net.params
    grads = params.zeros_like()
    batch, T, _ = glogits.shape

    c_mlp_eff = c_act_eff = 0.0
    if loss_cfg is not None:
        c_mlp_eff, c_act_eff = loss_cfg.effective(cfg.n_rec)
    ga_reg = 0.0
    if c_act_eff > 0.0 and T > 0:
        ga_reg = c_act_eff / (batch * T * cfg.n_rec)
    gp_coef = None
    if c_mlp_eff > 0.0 and T > 0:
        # d/dp of c * mean_n(A_n^2), A_n = mean_{b,t,j} |p|
        gp_coef = (2.0 * c_mlp_eff * trace.abs_p_mean /
                   (cfg.n_rec * batch * T * cfg.hidden.d_m))

    gm_hid = np.zeros((batch, cfg.n_rec, cfg.hidden.d_m))
    gr_hid = np.zeros((batch, cfg.n_rec))
    gm_ro = np.zeros((batch, cfg.readout_width, cfg.readout.d_m))
    gr_ro = np.zeros((batch, cfg.readout_width))
    ga_hid_rec = np.zeros((batch, cfg.n_rec))

    for t in range(T - 1, -1, -1):
        gl = glogits[:, t]
        ga_ro = gl @ params.w_out
        grads.w_out += np.einsum("bo,bn->on", gl, trace.a_ro[:, t])
        grads.b_out += gl.sum(axis=0)

        gz_ro, gm_ro, gr_ro = _layer_backward_step(
            ga_ro, trace.m_ro[:, t], trace.m_ro[:, t + 1],
            trace.ro_internals[t], None, params.readout, cfg.readout,
            grads.readout, gm_ro, gr_ro)
        g_chan_ro = _scatter_to_channels(gz_ro, net.wiring.readout)

        ga_hid = g_chan_ro[:, :cfg.n_rec] + ga_hid_rec + ga_reg
        gp_extra = None
        if gp_coef is not None:
            gp_extra = gp_coef[None, :, None] * np.sign(
                trace.hid_internals[t]["delta_m"])
        gz_hid, gm_hid, gr_hid = _layer_backward_step(
            ga_hid, trace.m_hid[:, t], trace.m_hid[:, t + 1],
            trace.hid_internals[t], trace.z_masks[t], params.hidden,
            cfg.hidden, grads.hidden, gm_hid, gr_hid, gp_extra=gp_extra,
            surrogate_scale=surrogate_scale)
        g_chan_hid = _scatter_to_channels(gz_hid, net.wiring.hidden)
        ga_hid_rec = g_chan_hid[:, cfg.d_inp:]

    return grads


def grads_to_dict(grads: NetworkParams) -> dict:
    return {name: arr for name, arr in grads.named_tensors()}


def check_grads_finite(grads: NetworkParams) -> None:
    for name, arr in grads.named_tensors():
        if not np.all(np.isfinite(arr)):
            raise NumericFaultError(f"non-finite gradient in {name}",
                                    location=name)


def forward_loss(net: Network, inputs, targets, loss_cfg: LossConfig,
                 loss_mode: str = "per_step", state=None, reset=True,
                 dropout=None, dropout_rng=None):
    """Traced forward pass plus total training loss (cross-entropy plus
    regularizers), exactly matching what the backward pass differentiates.

    loss_mode 'per_step' scores every step; 'final' scores only the last
    step (sequence classification). Returns (loss, result, glogits).
    """
    from ..core.network import network_forward

    result = network_forward(net, inputs, state=state, reset=reset,
                             trace=True, dropout=dropout,
                             dropout_rng=dropout_rng)
    logits = result.logits
    if loss_mode == "final":
        scored = logits[:, -1:, :]
        target_arr = np.asarray(targets).reshape(-1, 1)
    else:
        scored = logits
        target_arr = np.asarray(targets)

    xent, gscored = loss_xent(scored, target_arr, loss_cfg.label_smoothing,
                              with_grad=True)
    glogits = np.zeros_like(logits)
    if loss_mode == "final":
        glogits[:, -1:, :] = gscored
    else:
        glogits[:] = gscored

    reg = 0.0
    c_mlp_eff, c_act_eff = loss_cfg.effective(net.config.n_rec)
    if c_act_eff > 0.0:
        reg += c_act_eff * float(result.trace.a_hid.mean())
    if c_mlp_eff > 0.0:
        reg += c_mlp_eff * float(np.mean(result.trace.abs_p_mean ** 2))
    return xent + reg, result, glogits


def bptt_grads(net: Network, inputs, targets, loss_cfg: LossConfig,
               loss_mode: str = "per_step", state=None, reset=True,
               dropout=None, dropout_rng=None, surrogate_scale: float = 100.0):
    """Loss and gradients for one window. Returns (loss, grads, result)."""
    loss, result, glogits = forward_loss(
        net, inputs, targets, loss_cfg, loss_mode=loss_mode, state=state,
        reset=reset, dropout=dropout, dropout_rng=dropout_rng)
    grads = network_backward(net, result.trace, glogits, loss_cfg=loss_cfg,
                             surrogate_scale=surrogate_scale)
    check_grads_finite(grads)
    return loss, grads, result
