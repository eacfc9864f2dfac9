"""Neuron and network configuration records plus flat key-value serialization."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from ..errors import InvalidConfigError

OUTPUT_MODES = ("relu-highpass", "binary-spike", "linear-no-filter")


@dataclass(frozen=True)
class NeuronConfig:
    """Static hyperparameters of a single expressive leaky-memory neuron.

    `d_s = d_tree * d_branch` synapses feed `d_tree` branches; an MLP with
    `l_mlp` hidden layers of width `d_mlp` proposes bounded updates to `d_m`
    leaky memory units with fixed log-spaced timescales in
    [tau_min, tau_max]; the scalar output is a high-pass-filtered (EMA
    timescale tau_r) linear readout passed through the configured
    output nonlinearity.
    """

    d_m: int = 5
    l_mlp: int = 1
    d_mlp: int = 10
    d_tree: int = 30
    d_branch: int = 10
    c: float = 10.0
    lam: float = 5.0
    tau_min: float = 1.0
    tau_max: float = 500.0
    tau_r: float = 5.0
    output_mode: str = "relu-highpass"

    @property
    def d_s(self) -> int:
        return self.d_tree * self.d_branch

    def validate(self) -> "NeuronConfig":
        if self.d_m < 1:
            raise InvalidConfigError(f"d_m must be >= 1, got {self.d_m}")
        if self.d_tree < 1 or self.d_branch < 1:
            raise InvalidConfigError(
                f"d_tree and d_branch must be >= 1, got {self.d_tree}, {self.d_branch}"
            )
        if self.l_mlp < 0:
            raise InvalidConfigError(f"l_mlp must be >= 0, got {self.l_mlp}")
        if self.l_mlp >= 1 and self.d_mlp < self.d_m:
            raise InvalidConfigError(
                f"d_mlp must be >= d_m when l_mlp >= 1, got d_mlp={self.d_mlp}, d_m={self.d_m}"
            )
        if not (0.0 < self.tau_min <= self.tau_max):
            raise InvalidConfigError(
                f"need 0 < tau_min <= tau_max, got {self.tau_min}, {self.tau_max}"
            )
        if self.tau_r <= 0:
            raise InvalidConfigError(f"tau_r must be > 0, got {self.tau_r}")
        if self.lam <= 0:
            raise InvalidConfigError(f"lambda must be > 0, got {self.lam}")
        if self.c <= 0:
            raise InvalidConfigError(f"c must be > 0, got {self.c}")
        if self.output_mode not in OUTPUT_MODES:
            raise InvalidConfigError(
                f"output_mode must be one of {OUTPUT_MODES}, got {self.output_mode!r}"
            )
        return self


@dataclass(frozen=True)
class NetworkConfig:
    """Two-layer network: a recurrent hidden layer of expressive neurons
    followed by a feed-forward readout layer (simple neurons, linear output,
    no recurrence) and a final linear map to `d_out` classes.
    """

    hidden: NeuronConfig
    n_rec: int
    d_inp: int
    d_out: int
    rho_rec: float = 0.25
    readout: NeuronConfig = field(default_factory=lambda: NeuronConfig(
        d_m=3, l_mlp=0, d_mlp=3, d_tree=10, d_branch=10,
        c=1.0, output_mode="linear-no-filter",
    ))
    n_readout: int = 0  # 0 means: use d_out
    embed_scale: float = 3.0

    @property
    def readout_width(self) -> int:
        return self.n_readout if self.n_readout > 0 else self.d_out

    def validate(self) -> "NetworkConfig":
        self.hidden.validate()
        self.readout.validate()
        if self.readout.output_mode != "linear-no-filter":
            raise InvalidConfigError(
                "readout neurons must use linear-no-filter output, got "
                f"{self.readout.output_mode!r}"
            )
        if self.n_rec < 1:
            raise InvalidConfigError(f"n_rec must be >= 1, got {self.n_rec}")
        if self.d_inp < 1:
            raise InvalidConfigError(f"d_inp must be >= 1, got {self.d_inp}")
        if self.d_out < 1:
            raise InvalidConfigError(f"d_out must be >= 1, got {self.d_out}")
        if not (0.0 <= self.rho_rec <= 1.0):
            raise InvalidConfigError(f"rho_rec must be in [0, 1], got {self.rho_rec}")
        return self


# Field names used in the flat key = value config file format. `lambda` is
# the on-disk name for NeuronConfig.lam.
_NEURON_KEYS = {
    "d_m": int, "l_mlp": int, "d_mlp": int, "d_tree": int, "d_branch": int,
    "c": float, "lambda": float, "tau_min": float, "tau_max": float,
    "tau_r": float, "output_mode": str,
}
_NETWORK_KEYS = {
    "N_rec": int, "rho_rec": float, "d_inp": int, "d_out": int,
    "n_readout": int, "embed_scale": float,
}


def neuron_config_to_kv(cfg: NeuronConfig) -> dict:
    kv = {
        "d_m": cfg.d_m, "l_mlp": cfg.l_mlp, "d_mlp": cfg.d_mlp,
        "d_tree": cfg.d_tree, "d_branch": cfg.d_branch, "c": cfg.c,
        "lambda": cfg.lam, "tau_min": cfg.tau_min, "tau_max": cfg.tau_max,
        "tau_r": cfg.tau_r, "output_mode": cfg.output_mode,
    }
    return kv


def parse_kv_text(text: str) -> dict:
    """Parse `key = value` lines; '#' starts a comment, blank lines skipped."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        out[key.strip()] = value.strip()
    return out


def format_kv(kv: dict) -> str:
    lines = [f"{k} = {v}" for k, v in kv.items()]
    return "\n".join(lines) + "\n"


def _convert(key: str, raw: str, typ):
    try:
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        return raw
    except ValueError as exc:
        raise InvalidConfigError(f"field {key!r}: cannot parse {raw!r} as {typ.__name__}") from exc


def neuron_config_from_kv(kv: dict, prefix: str = "") -> NeuronConfig:
    fields = {}
    for key, typ in _NEURON_KEYS.items():
        full = prefix + key
        if full in kv:
            fields["lam" if key == "lambda" else key] = _convert(full, kv[full], typ)
    return NeuronConfig(**fields).validate()


def save_network_config(cfg: NetworkConfig, path, seed: int | None = None,
                        extra: dict | None = None) -> None:
    kv = dict(neuron_config_to_kv(cfg.hidden))
    kv.update({
        "N_rec": cfg.n_rec, "rho_rec": cfg.rho_rec, "d_inp": cfg.d_inp,
        "d_out": cfg.d_out, "n_readout": cfg.n_readout,
        "embed_scale": cfg.embed_scale,
    })
    for key, value in neuron_config_to_kv(cfg.readout).items():
        kv[f"readout.{key}"] = value
    if seed is not None:
        kv["seed"] = seed
    if extra:
        kv.update(extra)
    Path(path).write_text(format_kv(kv))


def load_network_config(source) -> tuple[NetworkConfig, dict]:
    """Load a NetworkConfig from a KV file path or raw text.

    Returns (config, leftover) where leftover holds unconsumed keys
    (training settings, seed, task options) for the caller.
    """
    text = source if "\n" in str(source) or "=" in str(source) else Path(source).read_text()
    if isinstance(source, Path) or (isinstance(source, str) and Path(source).is_file()):
        text = Path(source).read_text()
    kv = parse_kv_text(text)
    hidden = neuron_config_from_kv(kv)
    readout_kv = {k: v for k, v in kv.items() if k.startswith("readout.")}
    if readout_kv:
        readout = neuron_config_from_kv(kv, prefix="readout.")
    else:
        readout = NetworkConfig.__dataclass_fields__["readout"].default_factory()
    fields = {}
    for key, typ in _NETWORK_KEYS.items():
        if key in kv:
            fields[key.lower() if key == "N_rec" else key] = _convert(key, kv[key], typ)
    if "n_rec" not in fields:
        raise InvalidConfigError("field 'N_rec': missing")
    if "d_inp" not in fields:
        raise InvalidConfigError("field 'd_inp': missing")
    if "d_out" not in fields:
        raise InvalidConfigError("field 'd_out': missing")
    cfg = NetworkConfig(hidden=hidden, readout=readout, **fields).validate()
    consumed = set(_NEURON_KEYS) | set(_NETWORK_KEYS) | set(readout_kv)
    leftover = {k: v for k, v in kv.items() if k not in consumed}
    return cfg, leftover


def with_pareto_dims(cfg: NeuronConfig, d_m: int, d_mlp: int, d_tree: int,
                     d_branch: int) -> NeuronConfig:
    return replace(cfg, d_m=d_m, d_mlp=d_mlp, d_tree=d_tree, d_branch=d_branch)
