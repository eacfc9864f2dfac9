"""Task adapters binding datasets to the training loop."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core.network import Network, embed_onehot
from ..errors import InvalidConfigError
from ..training.losses import LN2
from ..training.runner import evaluate_classification, evaluate_lm
from .byte_corpus import ByteCorpus, stream_windows, window_batch
from .spike_adding import SpikeAddingSpec, gen_spike_adding


@dataclass
class SpikeAddingTask:
    """Sequence classification on synthetic spike-pattern addition."""

    spec: SpikeAddingSpec
    train_x: np.ndarray
    train_y: np.ndarray
    valid_x: np.ndarray
    valid_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray

    name = "spike_adding"
    loss_mode = "final"
    metric_kind = "accuracy"
    carries_state = False

    @classmethod
    def generate(cls, spec: SpikeAddingSpec, n_train: int, n_valid: int,
                 n_test: int, seed: int = 0) -> "SpikeAddingTask":
        rng = np.random.default_rng(seed)
        train = gen_spike_adding(spec, n_train, rng)
        valid = gen_spike_adding(spec, n_valid, rng)
        test = gen_spike_adding(spec, n_test, rng)
        return cls(spec, train[0], train[1], valid[0], valid[1], test[0], test[1])

    @property
    def d_inp(self) -> int:
        return self.spec.channels

    @property
    def d_out(self) -> int:
        return self.spec.n_classes

    def train_batches(self, rng: np.random.Generator, settings):
        n = len(self.train_y)
        if n < settings.batch_size:
            raise InvalidConfigError("training set smaller than one batch")
        while True:
            order = rng.permutation(n)
            for start in range(0, n - settings.batch_size + 1,
                               settings.batch_size):
                idx = order[start:start + settings.batch_size]
                yield self.train_x[idx], self.train_y[idx]

    def evaluate_valid(self, net: Network, settings):
        loss, acc = evaluate_classification(net, self.valid_x, self.valid_y)
        return loss, acc

    def evaluate_test(self, net: Network, settings):
        loss, acc = evaluate_classification(net, self.test_x, self.test_y)
        return loss, acc


@dataclass
class ByteLMTask:
    """Next-byte prediction with carried state; metric is bits per step."""

    corpus: ByteCorpus
    embed_scale: float = 3.0
    valid_windows: int = 0       # cap on eval windows, 0 = all
    test_batch_size: int = 1

    name = "byte_lm"
    loss_mode = "per_step"
    metric_kind = "bpc"
    carries_state = True

    @property
    def d_inp(self) -> int:
        return self.corpus.vocab_size

    @property
    def d_out(self) -> int:
        return self.corpus.vocab_size

    def train_batches(self, rng: np.random.Generator, settings):
        tokens = self.corpus.train
        window = self.corpus.window
        starts = stream_windows(tokens, window, settings.batch_size)
        n_windows = starts.shape[0]
        w = 0
        while True:
            x_tok, y_tok = window_batch(tokens, starts[w], window)
            yield embed_onehot(x_tok, self.corpus.vocab_size,
                               self.embed_scale), y_tok
            w = (w + 1) % n_windows

    def evaluate_valid(self, net: Network, settings):
        loss = evaluate_lm(net, self.corpus.valid, self.corpus.vocab_size,
                           self.embed_scale, self.corpus.window,
                           batch_size=max(settings.batch_size, 1),
                           max_windows=self.valid_windows)
        return loss, loss / LN2

    def evaluate_test(self, net: Network, settings):
        loss = evaluate_lm(net, self.corpus.test, self.corpus.vocab_size,
                           self.embed_scale, self.corpus.window,
                           batch_size=self.test_batch_size)
        return loss, loss / LN2
