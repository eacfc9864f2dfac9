"""Named random streams derived from a single master seed.

Every source of randomness in the package (wiring, weight init, data
generation, dropout, state-carry coin flips, global optimizers) pulls from
its own named stream so that changing one subsystem's consumption pattern
never perturbs the others.
"""

import hashlib

import numpy as np

# Streams used by the package; free-form names are allowed too.
KNOWN_STREAMS = ("wiring", "init", "data", "dropout", "carry", "de")


def _stream_key(name: str) -> int:
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def stream_seed(master_seed: int, name: str) -> np.random.SeedSequence:
    """Seed sequence for stream `name` under `master_seed`."""
    return np.random.SeedSequence(entropy=[int(master_seed), _stream_key(name)])


def stream_rng(master_seed: int, name: str) -> np.random.Generator:
    """Fresh Generator for stream `name` under `master_seed`."""
    return np.random.default_rng(stream_seed(master_seed, name))
