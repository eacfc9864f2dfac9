"""Losses, activity regularizers, and the spiking surrogate derivative."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidConfigError, ShapeError

LN2 = math.log(2.0)


@dataclass(frozen=True)
class LossConfig:
    label_smoothing: float = 0.0
    mlp_l2: float = 0.0          # L2 on per-neuron time-mean |pre-tanh MLP output|
    act_l1: float = 0.0          # L1 on mean activity
    per_neuron_scaling: bool = False

    def validate(self) -> "LossConfig":
        if not (0.0 <= self.label_smoothing < 1.0):
            raise InvalidConfigError(
                f"label_smoothing must be in [0, 1), got {self.label_smoothing}")
        if self.mlp_l2 < 0 or self.act_l1 < 0:
            raise InvalidConfigError("regularizer coefficients must be >= 0")
        return self

    def effective(self, n_rec: int) -> tuple[float, float]:
        scale = 1.0 / n_rec if self.per_neuron_scaling else 1.0
        return self.mlp_l2 * scale, self.act_l1 * scale


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def loss_xent(logits: np.ndarray, targets: np.ndarray,
              label_smoothing: float = 0.0, with_grad: bool = False):
    """Mean label-smoothed cross-entropy over all leading axes.

    logits: (..., V), targets: (...) integer class ids. Returns the scalar
    loss, or (loss, grad) with grad shaped like logits when with_grad.
    BPC is loss / ln 2.
    """
    logits = np.asarray(logits, dtype=float)
    targets = np.asarray(targets)
    if logits.shape[:-1] != targets.shape:
        raise ShapeError(f"targets shape {targets.shape} does not match logits "
                         f"{logits.shape[:-1]}")
    if targets.size == 0:
        raise InvalidConfigError("empty batch")
    if not np.all(np.isfinite(logits)):
        raise InvalidConfigError("non-finite logits")
    vocab = logits.shape[-1]
    if targets.min() < 0 or targets.max() >= vocab:
        raise InvalidConfigError(
            f"targets must be in [0, {vocab}), got range "
            f"[{targets.min()}, {targets.max()}]")

    shifted = logits - logits.max(axis=-1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=-1))
    log_probs = shifted - log_z[..., None]
    picked = np.take_along_axis(log_probs, targets[..., None], axis=-1)[..., 0]
    # q = (1 - ls) * onehot + ls / V
    ls = label_smoothing
    loss = -(1.0 - ls) * picked.mean() - ls * log_probs.mean(axis=-1).mean()
    if not with_grad:
        return float(loss)

    count = targets.size
    q = np.full_like(logits, ls / vocab)
    np.put_along_axis(q, targets[..., None], ls / vocab + (1.0 - ls), axis=-1)
    grad = (np.exp(log_probs) - q) / count
    return float(loss), grad


def bits_per_step(loss: float) -> float:
    return loss / LN2


def regularization(abs_mlp_out_mean: np.ndarray, mean_activity: float,
                   cfg: LossConfig, n_rec: int) -> float:
    """Regularizer value from recorded hidden-layer statistics.

    abs_mlp_out_mean: per-neuron time-mean of |pre-tanh MLP output|
    (length n_rec). mean_activity: mean of the activity over everything.
    """
    abs_mlp_out_mean = np.asarray(abs_mlp_out_mean, dtype=float)
    c_mlp, c_act = cfg.effective(n_rec)
    term_mlp = c_mlp * float(np.mean(abs_mlp_out_mean ** 2))
    term_act = c_act * float(mean_activity)
    return term_mlp + term_act


def superspike(v: np.ndarray, scale: float = 100.0) -> np.ndarray:
    """Surrogate derivative for the hard threshold: 1 / (1 + scale*|v|)^2."""
    if scale <= 0:
        raise InvalidConfigError(f"scale must be > 0, got {scale}")
    return 1.0 / np.square(1.0 + scale * np.abs(v))
