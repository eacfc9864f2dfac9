"""Synthetic two-digit spike-pattern addition task.

Each digit class is rendered as a Bernoulli spatio-temporal pattern whose
per-channel rate follows a class-specific bump profile; a sample
concatenates two digit patterns in time and the label is the digit sum.
The generator is a pure function of (spec, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidConfigError


@dataclass(frozen=True)
class SpikeAddingSpec:
    channels: int = 24
    steps_per_digit: int = 30
    n_digit_classes: int = 5
    jitter: float = 0.5          # per-sample channel shift of the bump center
    base_rate: float = 0.02
    peak_rate: float = 0.45
    profile_width: float = 1.6   # bump width in channels

    def validate(self) -> "SpikeAddingSpec":
        if self.channels < 2 or self.steps_per_digit < 1:
            raise InvalidConfigError("need channels >= 2 and steps_per_digit >= 1")
        if self.n_digit_classes < 2:
            raise InvalidConfigError("need at least two digit classes")
        if not (0.0 <= self.base_rate <= self.peak_rate <= 1.0):
            raise InvalidConfigError("need 0 <= base_rate <= peak_rate <= 1")
        if self.jitter < 0:
            raise InvalidConfigError("jitter must be >= 0")
        return self

    @property
    def n_classes(self) -> int:
        return 2 * self.n_digit_classes - 1

    @property
    def seq_len(self) -> int:
        return 2 * self.steps_per_digit

    def chance_level(self) -> float:
        return 1.0 / self.n_classes


def class_rate_profile(spec: SpikeAddingSpec, digit: int,
                       center_shift: float = 0.0) -> np.ndarray:
    """Per-channel firing rate for one digit class."""
    centers = (digit + 0.5) * spec.channels / spec.n_digit_classes + center_shift
    ch = np.arange(spec.channels)
    bump = np.exp(-0.5 * ((ch - centers) / spec.profile_width) ** 2)
    return spec.base_rate + (spec.peak_rate - spec.base_rate) * bump


def _render_digit(spec: SpikeAddingSpec, digit: int,
                  rng: np.random.Generator) -> np.ndarray:
    shift = rng.normal(0.0, spec.jitter) if spec.jitter > 0 else 0.0
    rate = class_rate_profile(spec, digit, shift)
    return (rng.random((spec.steps_per_digit, spec.channels)) < rate).astype(float)


def gen_spike_adding(spec: SpikeAddingSpec, n_samples: int, seed=0):
    """Generate (patterns, labels): patterns (n, 2*T_d, channels) binary,
    labels in [0, 2*(n_digit_classes-1)]."""
    spec.validate()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    patterns = np.zeros((n_samples, spec.seq_len, spec.channels))
    labels = np.zeros(n_samples, dtype=int)
    for i in range(n_samples):
        d1 = int(rng.integers(spec.n_digit_classes))
        d2 = int(rng.integers(spec.n_digit_classes))
        patterns[i, :spec.steps_per_digit] = _render_digit(spec, d1, rng)
        patterns[i, spec.steps_per_digit:] = _render_digit(spec, d2, rng)
        labels[i] = d1 + d2
    return patterns, labels


def nearest_centroid_accuracy(train_x, train_y, test_x, test_y) -> float:
    """Baseline: classify time-pooled patterns by the nearest class centroid."""
    pooled_train = train_x.mean(axis=1)
    pooled_test = test_x.mean(axis=1)
    classes = np.unique(train_y)
    centroids = np.stack([pooled_train[train_y == c].mean(axis=0)
                          for c in classes])
    dists = ((pooled_test[:, None, :] - centroids[None]) ** 2).sum(axis=-1)
    pred = classes[np.argmin(dists, axis=1)]
    return float(np.mean(pred == test_y))
