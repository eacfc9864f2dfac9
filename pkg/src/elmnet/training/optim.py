"""Adam/Adamax with global-norm clipping and warmup + cosine learning rate."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidConfigError


@dataclass(frozen=True)
class OptimConfig:
    algorithm: str = "adam"      # 'adam' or 'adamax'
    lr: float = 5e-4
    warmup_steps: int = 100
    total_steps: int = 10000
    clip_norm: float = 1.0
    betas: tuple = (0.9, 0.999)
    eps: float = 1e-8

    def validate(self) -> "OptimConfig":
        if self.algorithm not in ("adam", "adamax"):
            raise InvalidConfigError(f"algorithm must be adam or adamax, got "
                                     f"{self.algorithm!r}")
        if self.lr <= 0:
            raise InvalidConfigError(f"lr must be > 0, got {self.lr}")
        if self.clip_norm <= 0:
            raise InvalidConfigError(f"clip_norm must be > 0, got {self.clip_norm}")
        if self.total_steps < 1:
            raise InvalidConfigError(f"total_steps must be >= 1, got {self.total_steps}")
        return self


def schedule_factor(step: int, cfg: OptimConfig) -> float:
    """Linear warmup times cosine decay, in [0, 1]."""
    warm = 1.0
    if cfg.warmup_steps > 0:
        warm = min(1.0, (step + 1) / cfg.warmup_steps)
    progress = min(step / cfg.total_steps, 1.0)
    cosine = 0.5 * (1.0 + math.cos(math.pi * progress))
    return warm * cosine


def clip_by_global_norm(grads: dict, clip_norm: float) -> tuple[dict, float]:
    """Scale all gradients so their joint norm is at most clip_norm."""
    total_sq = 0.0
    for g in grads.values():
        total_sq += float(np.sum(np.square(g)))
    norm = math.sqrt(total_sq)
    if norm <= clip_norm or norm == 0.0:
        return grads, norm
    scale = clip_norm / norm
    return {k: g * scale for k, g in grads.items()}, norm


@dataclass
class OptimizerState:
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def optimizer_step(params: dict, grads: dict, state: OptimizerState,
                   cfg: OptimConfig) -> float:
    """One update over a dict of named tensors, in place. Returns the
    pre-clip gradient global norm.
    """
    grads, norm = clip_by_global_norm(grads, cfg.clip_norm)
    state.step += 1
    t = state.step
    beta1, beta2 = cfg.betas
    lr = cfg.lr * schedule_factor(t - 1, cfg)
    bias1 = 1.0 - beta1 ** t

    for name, p in params.items():
        g = grads[name]
        m = state.m.get(name)
        if m is None:
            m = np.zeros_like(p)
            state.m[name] = m
            state.v[name] = np.zeros_like(p)
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        if cfg.algorithm == "adam":
            v *= beta2
            v += (1.0 - beta2) * np.square(g)
            bias2 = 1.0 - beta2 ** t
            p -= lr * (m / bias1) / (np.sqrt(v / bias2) + cfg.eps)
        else:  # adamax: infinity-norm second moment
            np.maximum(beta2 * v, np.abs(g), out=v)
            p -= (lr / bias1) * m / (v + cfg.eps)
    return norm
