"""Fixed random input wiring of a layer.

Each neuron reads d_s channels from the concatenation [u_t, a_{t-1}] of
feed-forward input (width d_inp) and the layer's previous activity (width
n_rec). Channels are sampled once at initialization, independently per
synapse: recurrent with probability rho_rec (uniform over the recurrent
pool, with replacement), feed-forward otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidConfigError


@dataclass(frozen=True)
class LayerWiring:
    """Immutable per-neuron channel index table.

    indices[i, s] is the channel read by synapse s of neuron i, in
    [0, d_inp) for feed-forward and [d_inp, d_inp + n_rec) for recurrent.
    """

    indices: np.ndarray          # (n_neurons, d_s) int
    d_inp: int
    n_rec: int
    rho_rec: float

    def __post_init__(self):
        self.indices.setflags(write=False)

    @property
    def n_channels(self) -> int:
        return self.d_inp + self.n_rec

    @property
    def recurrent_mask(self) -> np.ndarray:
        return self.indices >= self.d_inp


def init_wiring(n_rec: int, d_inp: int, d_s: int, rho_rec: float,
                seed) -> LayerWiring:
    """Sample the fixed wiring for a layer of `n_rec` neurons.

    `seed` may be an int, SeedSequence, or Generator. Sampling is with
    replacement, so duplicate (neuron, channel) pairs are expected once
    d_s exceeds the pool size.
    """
    if not (0.0 <= rho_rec <= 1.0):
        raise InvalidConfigError(f"rho_rec must be in [0, 1], got {rho_rec}")
    if rho_rec >= 1.0 and n_rec == 0:
        raise InvalidConfigError("rho_rec = 1 with an empty recurrent pool")
    if rho_rec < 1.0 and d_inp == 0:
        raise InvalidConfigError("rho_rec < 1 with an empty feed-forward pool")
    if n_rec < 1:
        raise InvalidConfigError(f"layer width n_rec must be >= 1, got {n_rec}")
    if d_s < 1:
        raise InvalidConfigError(f"d_s must be >= 1, got {d_s}")

    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    is_rec = rng.random((n_rec, d_s)) < rho_rec
    ff = rng.integers(0, max(d_inp, 1), size=(n_rec, d_s))
    rec = d_inp + rng.integers(0, max(n_rec, 1), size=(n_rec, d_s))
    indices = np.where(is_rec, rec, ff).astype(np.int64)
    return LayerWiring(indices=indices, d_inp=d_inp, n_rec=n_rec, rho_rec=rho_rec)


def init_feedforward_wiring(n_neurons: int, d_inp: int, d_s: int, seed) -> LayerWiring:
    """Wiring for a feed-forward layer: `n_neurons` rows sampling only from
    the d_inp input channels (the recurrent pool formally exists with
    probability zero, so the channel space is d_inp + n_neurons wide).
    """
    if n_neurons < 1:
        raise InvalidConfigError(f"n_neurons must be >= 1, got {n_neurons}")
    if d_inp < 1:
        raise InvalidConfigError(f"d_inp must be >= 1, got {d_inp}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    indices = rng.integers(0, d_inp, size=(n_neurons, d_s)).astype(np.int64)
    return LayerWiring(indices=indices, d_inp=d_inp, n_rec=n_neurons, rho_rec=0.0)


def scatter_plan(wiring: LayerWiring):
    """Flat channel indices used to accumulate per-synapse gradients back
    onto channels with one bincount call per batch row."""
    return wiring.indices.ravel()
