"""Multi-trajectory activity recordings and their binary file format.

Layout: header {magic 'ELMR', version u32, n_rec u32, T u32, n_traj u32,
burn_in u32}, then little-endian float32 payload, row-major
[trajectory][time][neuron].
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ShapeError

MAGIC = b"ELMR"
VERSION = 1
_HEADER = struct.Struct("<4s5I")


@dataclass
class Recording:
    """Activity tensor (n_traj, T, n_rec) with burn-in metadata.

    `retained()` drops the first `burn_in` steps of every trajectory; all
    spectral and statistical operations consume that view.
    """

    data: np.ndarray
    burn_in: int = 0

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.ndim != 3:
            raise ShapeError(f"recording must be (n_traj, T, n_rec), got {self.data.shape}")
        if not (0 <= self.burn_in <= self.data.shape[1]):
            raise ShapeError(f"burn_in {self.burn_in} outside [0, T={self.data.shape[1]}]")

    @property
    def n_traj(self) -> int:
        return self.data.shape[0]

    @property
    def n_steps(self) -> int:
        return self.data.shape[1]

    @property
    def n_rec(self) -> int:
        return self.data.shape[2]

    def retained(self) -> np.ndarray:
        return self.data[:, self.burn_in:, :]


def save_recording(rec: Recording, path) -> None:
    header = _HEADER.pack(MAGIC, VERSION, rec.n_rec, rec.n_steps,
                          rec.n_traj, rec.burn_in)
    payload = np.ascontiguousarray(rec.data, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())


def load_recording(path) -> Recording:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise IOError(f"{path}: too short for a recording header")
    magic, version, n_rec, n_steps, n_traj, burn_in = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise IOError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise IOError(f"{path}: unsupported version {version}")
    expected = n_traj * n_steps * n_rec * 4
    body = raw[_HEADER.size:]
    if len(body) != expected:
        raise IOError(f"{path}: payload is {len(body)} bytes, expected {expected}")
    data = np.frombuffer(body, dtype="<f4").reshape(n_traj, n_steps, n_rec)
    return Recording(data=data.astype(np.float64), burn_in=burn_in)
