"""Training orchestration: turns of updates, validation-based selection,
metrics traces, and checkpointing.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..core.config import NetworkConfig
from ..core.network import (DropoutSpec, Network, build_network, embed_onehot,
                            network_forward, zero_network_state)
from ..errors import InvalidConfigError, NumericFaultError
from ..rng import stream_rng
from .backprop import bptt_grads, grads_to_dict
from .carry import CarrySchedule, carry_policy
from .losses import LN2, LossConfig, loss_xent
from .optim import OptimConfig, OptimizerState, optimizer_step

METRIC_COLUMNS = ("step", "split", "loss", "bpc_or_acc", "grad_norm_min",
                  "grad_norm_max", "activity_mean")


@dataclass(frozen=True)
class TrainSettings:
    optim: OptimConfig = field(default_factory=OptimConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    turns: int = 10
    steps_per_turn: int = 100
    batch_size: int = 8
    carry: CarrySchedule | None = None
    dropout: DropoutSpec | None = None
    surrogate_scale: float = 100.0
    floor: float = 0.0           # irreducible-error floor for reporting
    eval_batches: int = 0        # 0 = whole split


@dataclass
class RunResult:
    metrics: list                 # rows matching METRIC_COLUMNS
    best_turn: int
    best_valid_loss: float
    test_loss: float
    test_metric: float            # BPC for LM, accuracy for classification
    reducible: float
    reducible_clamped: bool
    checkpoint: dict | None = None


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    return f"{value:.10g}"


def write_metrics_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRIC_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row.get(c)) for c in METRIC_COLUMNS])


def save_checkpoint(net: Network, path, config_echo: dict) -> None:
    """All tensors plus a config echo in a single binary blob."""
    import json

    tensors = {name.replace(".", "__"): arr
               for name, arr in net.params.named_tensors()}
    tensors["__tau_m_hidden__"] = net.params.hidden.tau_m
    tensors["__tau_m_readout__"] = net.params.readout.tau_m
    tensors["__wiring_hidden__"] = net.wiring.hidden.indices
    tensors["__wiring_readout__"] = net.wiring.readout.indices
    tensors["__config_json__"] = np.frombuffer(
        json.dumps(config_echo, sort_keys=True).encode(), dtype=np.uint8)
    np.savez(path, **tensors)


def load_checkpoint(path) -> tuple[dict, dict]:
    """Returns ({tensor name: array}, config echo dict)."""
    import json

    with np.load(path) as blob:
        tensors = {k: blob[k] for k in blob.files}
    raw = tensors.pop("__config_json__").tobytes().decode()
    echo = json.loads(raw)
    named = {k.replace("__", ".") if not k.startswith("__") else k: v
             for k, v in tensors.items()}
    return named, echo


def _snapshot_params(net: Network) -> dict:
    return {name: arr.copy() for name, arr in net.params.named_tensors()}


def _restore_params(net: Network, snapshot: dict) -> None:
    for name, arr in net.params.named_tensors():
        arr[...] = snapshot[name]


def evaluate_classification(net: Network, inputs, labels, batch_size=64):
    """Mean final-step cross-entropy and accuracy over a labelled set."""
    total_loss, correct, seen = 0.0, 0, 0
    for start in range(0, len(labels), batch_size):
        x = inputs[start:start + batch_size]
        y = labels[start:start + batch_size]
        result = network_forward(net, x, reset=True)
        logits = result.logits[:, -1, :]
        total_loss += loss_xent(logits, y) * len(y)
        correct += int(np.sum(np.argmax(logits, axis=-1) == y))
        seen += len(y)
    return total_loss / seen, correct / seen


def evaluate_lm(net: Network, tokens, vocab_size, embed_scale, window,
                batch_size=1, max_windows=0):
    """Sequential next-token cross-entropy with carried state.

    batch_size=1 walks a single unbroken state across the whole split.
    Larger batch sizes split the data into parallel contiguous streams.
    """
    tokens = np.asarray(tokens)
    if tokens.size < window + 1:
        raise InvalidConfigError("split shorter than one evaluation window")
    per_stream = (tokens.size - 1) // batch_size
    n_windows = per_stream // window
    if n_windows < 1:
        raise InvalidConfigError("split shorter than one window per stream")
    state = zero_network_state(net.config, batch_size)
    total, count = 0.0, 0
    for w in range(n_windows):
        if max_windows and w >= max_windows:
            break
        starts = np.arange(batch_size) * per_stream + w * window
        chunk = np.stack([tokens[s:s + window + 1] for s in starts])
        x = embed_onehot(chunk[:, :-1], vocab_size, embed_scale)
        result = network_forward(net, x, state=state)
        state = result.state
        total += loss_xent(result.logits, chunk[:, 1:]) * chunk[:, 1:].size
        count += chunk[:, 1:].size
    return total / count


def train_run(task, config: NetworkConfig, settings: TrainSettings, seed: int,
              out_dir=None) -> RunResult:
    """Train a network on `task`, select by validation loss, report test.

    `task` provides train_batches(rng, settings), evaluate_valid(net),
    evaluate_test(net), plus metric_kind ('bpc' or 'accuracy'), loss_mode,
    and carries_state. Zero turns means evaluate the initial weights only.
    """
    settings.optim.validate()
    settings.loss.validate()
    net = build_network(config, seed)
    data_rng = stream_rng(seed, "data")
    carry_rng = stream_rng(seed, "carry")
    dropout_rng = stream_rng(seed, "dropout")

    opt_state = OptimizerState()
    metrics: list = []
    best = {"turn": -1, "loss": math.inf, "params": _snapshot_params(net)}
    step = 0
    state = None
    batches = task.train_batches(data_rng, settings)

    for turn in range(settings.turns):
        turn_losses, norms, activities = [], [], []
        for _ in range(settings.steps_per_turn):
            inputs, targets = next(batches)
            reset = True
            if task.carries_state and settings.carry is not None:
                reset = carry_policy(step, settings.carry, carry_rng) or state is None
            elif task.carries_state:
                reset = state is None

            try:
                loss, grads, result = bptt_grads(
                    net, inputs, targets, settings.loss,
                    loss_mode=task.loss_mode,
                    state=state if not reset else None, reset=reset,
                    dropout=settings.dropout, dropout_rng=dropout_rng,
                    surrogate_scale=settings.surrogate_scale)
            except NumericFaultError:
                if out_dir is not None:
                    write_metrics_csv(metrics, Path(out_dir) / "metrics.csv")
                raise
            if not math.isfinite(loss):
                if out_dir is not None:
                    write_metrics_csv(metrics, Path(out_dir) / "metrics.csv")
                raise NumericFaultError(
                    f"training diverged at step {step} (loss={loss})",
                    location=("train", step))

            if task.carries_state:
                state = result.state
            norm = optimizer_step(dict(net.params.named_tensors()),
                                  grads_to_dict(grads), opt_state,
                                  settings.optim)
            turn_losses.append(loss)
            norms.append(norm)
            activities.append(float(result.trace.a_hid.mean()))
            step += 1

        valid_loss, valid_metric = task.evaluate_valid(net, settings)
        metrics.append({
            "step": step, "split": "train",
            "loss": float(np.mean(turn_losses)),
            "bpc_or_acc": None,
            "grad_norm_min": float(np.min(norms)),
            "grad_norm_max": float(np.max(norms)),
            "activity_mean": float(np.mean(activities)),
        })
        metrics.append({
            "step": step, "split": "valid", "loss": valid_loss,
            "bpc_or_acc": valid_metric, "grad_norm_min": None,
            "grad_norm_max": None, "activity_mean": None,
        })
        if valid_loss < best["loss"]:
            best = {"turn": turn, "loss": valid_loss,
                    "params": _snapshot_params(net)}

    if best["turn"] >= 0:
        _restore_params(net, best["params"])
    test_loss, test_metric = task.evaluate_test(net, settings)
    error = test_metric if task.metric_kind == "bpc" else 1.0 - test_metric
    reducible = error - settings.floor
    clamped = reducible < 0
    reducible = max(reducible, 0.0)
    metrics.append({
        "step": step, "split": "test", "loss": test_loss,
        "bpc_or_acc": test_metric, "grad_norm_min": None,
        "grad_norm_max": None, "activity_mean": None,
    })

    checkpoint = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        write_metrics_csv(metrics, out_dir / "metrics.csv")
        echo = {"seed": seed, "task": task.name,
                "best_turn": best["turn"], "test_metric": test_metric}
        save_checkpoint(net, out_dir / "checkpoint.npz", echo)
        checkpoint = {"path": str(out_dir / "checkpoint.npz")}

    return RunResult(metrics=metrics, best_turn=best["turn"],
                     best_valid_loss=best["loss"], test_loss=test_loss,
                     test_metric=test_metric, reducible=reducible,
                     reducible_clamped=clamped, checkpoint=checkpoint)
