"""Byte-level corpus loading, contiguous-window batching, and a synthetic
text generator for self-contained experiments.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import InvalidConfigError


@dataclass
class ByteCorpus:
    tokens: np.ndarray           # full corpus as token ids
    vocab: np.ndarray            # unique bytes, ascending; id = position
    bounds: tuple                # (train_end, valid_end) byte offsets
    window: int

    @property
    def vocab_size(self) -> int:
        return self.vocab.size

    @property
    def train(self) -> np.ndarray:
        return self.tokens[:self.bounds[0]]

    @property
    def valid(self) -> np.ndarray:
        return self.tokens[self.bounds[0]:self.bounds[1]]

    @property
    def test(self) -> np.ndarray:
        return self.tokens[self.bounds[1]:]

    def decode(self, tokens) -> bytes:
        return bytes(self.vocab[np.asarray(tokens)].tolist())


def load_byte_corpus(path, window: int = 100,
                     splits=(0.9, 0.05, 0.05)) -> ByteCorpus:
    """Read a byte file and split it contiguously into train/valid/test."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IOError(f"cannot read corpus {path}: {exc}") from exc
    if len(raw) == 0:
        raise IOError(f"corpus {path} is empty")
    if abs(sum(splits) - 1.0) > 1e-9 or len(splits) != 3:
        raise InvalidConfigError(f"splits must be three fractions summing to 1, got {splits}")
    data = np.frombuffer(raw, dtype=np.uint8)
    vocab, tokens = np.unique(data, return_inverse=True)
    train_end = int(len(data) * splits[0])
    valid_end = train_end + int(len(data) * splits[1])
    return ByteCorpus(tokens=tokens.astype(np.int64), vocab=vocab,
                      bounds=(train_end, valid_end), window=window)


def corpus_manifest(corpus: ByteCorpus) -> dict:
    return {
        "vocab_size": corpus.vocab_size,
        "vocab_bytes": corpus.vocab.tolist(),
        "window": corpus.window,
        "offsets": {"train": [0, corpus.bounds[0]],
                    "valid": [corpus.bounds[0], corpus.bounds[1]],
                    "test": [corpus.bounds[1], int(corpus.tokens.size)]},
    }


def save_corpus_manifest(corpus: ByteCorpus, path) -> None:
    Path(path).write_text(json.dumps(corpus_manifest(corpus), indent=2,
                                     sort_keys=True) + "\n")


def stream_windows(tokens: np.ndarray, window: int, batch_size: int):
    """Partition `tokens` into batch_size contiguous streams and list the
    (input, target) window start offsets so consecutive windows continue
    each stream (carried state stays meaningful).

    Returns an array (n_windows, batch_size) of window start indices; the
    window at start s spans tokens[s : s + window + 1] (input = first
    `window` tokens, target = last `window` tokens). Every target position
    is covered exactly once per pass.
    """
    tokens = np.asarray(tokens)
    per_stream = (tokens.size - 1) // batch_size
    n_windows = per_stream // window
    if n_windows < 1:
        raise InvalidConfigError(
            f"split of {tokens.size} tokens too short for {batch_size} streams "
            f"of window {window}")
    stream_starts = np.arange(batch_size) * per_stream
    offsets = np.arange(n_windows) * window
    return stream_starts[None, :] + offsets[:, None]


def window_batch(tokens: np.ndarray, starts_row: np.ndarray, window: int):
    """Materialize one batch of (inputs, targets) token windows."""
    chunk = np.stack([tokens[s:s + window + 1] for s in starts_row])
    return chunk[:, :-1], chunk[:, 1:]


_WORDS = (
    "the of and to in is was for that with his he as on at by it from are "
    "this be an or which you had not have were but they one all she her "
    "there would their we him been has when who will more no if out so "
    "said what up its about into than them can only other time new some "
    "could these two may then do first any my now such like our over man "
    "me even most made after also did many before must through years where "
    "much your way well down should because each just those people how too "
).split()


def synthetic_text(n_bytes: int, seed: int = 0) -> bytes:
    """Deterministic word-salad text with a heavy-tailed word distribution,
    sentence structure, and punctuation; character statistics are far from
    uniform, so it is compressible well below the uniform-coding rate.
    """
    rng = np.random.default_rng(seed)
    ranks = np.arange(1, len(_WORDS) + 1, dtype=float)
    probs = 1.0 / ranks
    probs /= probs.sum()
    pieces = []
    size = 0
    sentence_len = 0
    while size < n_bytes:
        word = _WORDS[int(rng.choice(len(_WORDS), p=probs))]
        sentence_len += 1
        if sentence_len == 1:
            word = word.capitalize()
        if sentence_len >= int(rng.integers(6, 14)):
            word += "." if rng.random() < 0.8 else ","
            if word.endswith("."):
                sentence_len = 0
        pieces.append(word)
        size += len(word) + 1
        if rng.random() < 0.02:
            pieces.append("\n")
    return " ".join(pieces).encode("ascii")[:n_bytes]
