"""Command-line entry point.

Subcommands: train, sweep, theory, fit, spectrum, stats, recipe. Every
run writes its outputs plus a manifest (config echo, seed, content hashes)
into --out. Exit codes: 0 success, 1 user error, 2 numeric fault.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from .core.config import (NetworkConfig, load_network_config,
                          neuron_config_to_kv, save_network_config)
from .core.recipes import pareto_candidate
from .core.recording import load_recording
from .errors import (FitFailureError, InvalidConfigError, NumericFaultError,
                     ShapeError)
from .manifest import RunManifest
from .stats import activity_stats
from .theory import TheoryParams, ke_grid, theory_sweep
from .training.carry import CarrySchedule
from .training.losses import LossConfig
from .training.optim import OptimConfig
from .training.runner import TrainSettings, train_run

USER_ERRORS = (InvalidConfigError, ShapeError, FitFailureError, IOError,
               ValueError, KeyError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(1)


def _parse_bool(raw: str) -> bool:
    return str(raw).strip().lower() in ("1", "true", "yes", "on")


def _get(kv: dict, key: str, typ, default):
    if key not in kv:
        return default
    raw = kv[key]
    try:
        if typ is bool:
            return _parse_bool(raw)
        return typ(raw)
    except (TypeError, ValueError) as exc:
        raise InvalidConfigError(f"field {key!r}: cannot parse {raw!r}") from exc


def _train_settings(kv: dict) -> TrainSettings:
    optim = OptimConfig(
        algorithm=_get(kv, "optimizer", str, "adam"),
        lr=_get(kv, "lr", float, 5e-4),
        warmup_steps=_get(kv, "warmup_steps", int, 100),
        total_steps=_get(kv, "turns", int, 10) * _get(kv, "steps_per_turn", int, 100),
        clip_norm=_get(kv, "clip_norm", float, 1.0),
    ).validate()
    loss = LossConfig(
        label_smoothing=_get(kv, "label_smoothing", float, 0.0),
        mlp_l2=_get(kv, "mlp_l2", float, 0.0),
        act_l1=_get(kv, "act_l1", float, 0.0),
        per_neuron_scaling=_get(kv, "per_neuron_scaling", bool, False),
    ).validate()
    carry = None
    if _get(kv, "carry_decay_steps", int, 0) > 0:
        carry = CarrySchedule(
            p_start=_get(kv, "carry_p_start", float, 1.0),
            p_end=_get(kv, "carry_p_end", float, 0.01),
            decay_steps=_get(kv, "carry_decay_steps", int, 40000),
        ).validate()
    dropout = None
    p_in = _get(kv, "dropout_input", float, 0.0)
    p_rec = _get(kv, "dropout_recurrent", float, 0.0)
    if p_in > 0 or p_rec > 0:
        from .core.network import DropoutSpec
        dropout = DropoutSpec(p_input=p_in, p_recurrent=p_rec)
    return TrainSettings(
        optim=optim, loss=loss,
        turns=_get(kv, "turns", int, 10),
        steps_per_turn=_get(kv, "steps_per_turn", int, 100),
        batch_size=_get(kv, "batch_size", int, 8),
        carry=carry, dropout=dropout,
        surrogate_scale=_get(kv, "surrogate_scale", float, 100.0),
        floor=_get(kv, "floor", float, 0.0),
    )


def _build_task(kv: dict, config: NetworkConfig, seed: int):
    from .tasks import (ByteLMTask, SpikeAddingSpec, SpikeAddingTask,
                        load_byte_corpus, synthetic_text)

    task_name = kv.get("task")
    if task_name is None:
        raise InvalidConfigError("field 'task': missing (spike_adding or byte_lm)")
    if task_name == "spike_adding":
        spec = SpikeAddingSpec(
            channels=_get(kv, "sa_channels", int, config.d_inp),
            steps_per_digit=_get(kv, "sa_steps_per_digit", int, 30),
            n_digit_classes=_get(kv, "sa_digit_classes", int, 5),
            jitter=_get(kv, "sa_jitter", float, 0.5),
        ).validate()
        if spec.channels != config.d_inp:
            raise InvalidConfigError("field 'sa_channels': must equal d_inp")
        if spec.n_classes != config.d_out:
            raise InvalidConfigError(
                f"field 'd_out': must be {spec.n_classes} for {spec.n_digit_classes} "
                "digit classes")
        return SpikeAddingTask.generate(
            spec, _get(kv, "sa_train", int, 1024),
            _get(kv, "sa_valid", int, 256), _get(kv, "sa_test", int, 256),
            seed=seed)
    if task_name == "byte_lm":
        corpus_path = kv.get("corpus")
        if corpus_path is None:
            raise InvalidConfigError("field 'corpus': missing for byte_lm")
        if corpus_path.startswith("synthetic:"):
            n_bytes = int(corpus_path.split(":", 1)[1])
            tmp = Path(kv.get("corpus_cache", "synthetic_corpus.txt"))
            if not tmp.exists():
                tmp.write_bytes(synthetic_text(n_bytes, seed=0))
            corpus_path = tmp
        corpus = load_byte_corpus(corpus_path, window=_get(kv, "window", int, 100))
        if corpus.vocab_size != config.d_inp or corpus.vocab_size != config.d_out:
            raise InvalidConfigError(
                f"field 'd_inp'/'d_out': must equal corpus vocab size "
                f"{corpus.vocab_size}")
        return ByteLMTask(corpus=corpus, embed_scale=config.embed_scale,
                          valid_windows=_get(kv, "valid_windows", int, 20))
    raise InvalidConfigError(f"field 'task': unknown task {task_name!r}")


def cmd_train(args) -> int:
    config, kv = load_network_config(args.config)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest("train", {"file": str(args.config), "kv": kv},
                           args.seed)
    settings = _train_settings(kv)
    task = _build_task(kv, config, args.seed)
    train_run(task, config, settings, args.seed, out_dir=out_dir)
    save_network_config(config, out_dir / "config_echo.txt", seed=args.seed)
    manifest.write(out_dir, [out_dir / "metrics.csv",
                             out_dir / "checkpoint.npz",
                             out_dir / "config_echo.txt"])
    return 0


def cmd_sweep(args) -> int:
    from .sweeps import SweepSpec, run_sweep, write_sweep_csv, write_timings_csv

    config, kv = load_network_config(args.config)
    axis = kv.get("sweep_axis")
    if axis is None:
        raise InvalidConfigError("field 'sweep_axis': missing")
    grid_raw = kv.get("sweep_grid")
    if grid_raw is None:
        raise InvalidConfigError("field 'sweep_grid': missing")
    grid = tuple(float(v) if "." in v else int(v)
                 for v in grid_raw.split(",") if v.strip())
    spec = SweepSpec(axis=axis, grid=grid,
                     budget=_get(kv, "sweep_budget", float, None),
                     repeats=_get(kv, "sweep_repeats", int, 3),
                     base_seed=args.seed).validate()
    settings = _train_settings(kv)

    def task_builder(seed):
        return _build_task(kv, config, seed)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest("sweep", {"file": str(args.config), "kv": kv},
                           args.seed)
    results = run_sweep(spec, config, settings, task_builder, jobs=args.jobs)
    write_sweep_csv(results, out_dir / "results.csv")
    write_timings_csv(results, out_dir / "timings.csv")
    if results.skipped:
        (out_dir / "skipped.json").write_text(
            json.dumps(results.skipped, indent=2, sort_keys=True) + "\n")
        extra = [out_dir / "skipped.json"]
    else:
        extra = []
    manifest.write(out_dir, [out_dir / "results.csv"] + extra,
                   diagnostics=[out_dir / "timings.csv"])
    return 0


def cmd_theory(args) -> int:
    if args.action != "sweep":
        raise InvalidConfigError(f"unknown theory action {args.action!r}")
    from .core.config import parse_kv_text

    kv = parse_kv_text(Path(args.params).read_text())
    theta = TheoryParams(
        alpha=_get(kv, "alpha", float, None),
        beta=_get(kv, "beta", float, None),
        gamma=_get(kv, "gamma", float, None),
        q_inf=_get(kv, "q_inf", float, None),
        P=_get(kv, "P", float, None),
        k_c=_get(kv, "k_c", float, 0.0),
    )
    for name in ("alpha", "beta", "gamma", "q_inf", "P"):
        if getattr(theta, name) is None:
            raise InvalidConfigError(f"field {name!r}: missing")
    theta.validate()
    try:
        lo, hi, num = args.ke_grid.split(":")
        grid = ke_grid(float(lo), float(hi), int(num))
    except ValueError as exc:
        raise InvalidConfigError(
            f"--ke-grid must be lo:hi:num, got {args.ke_grid!r}") from exc
    rows = theory_sweep(theta, grid)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_csv = out_dir / "theory_sweep.csv"
    with open(out_csv, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("k_e", "N", "s", "I_rep"))
        for row in rows:
            writer.writerow([f"{row['k_e']:.10g}", row["N"],
                             f"{row['s']:.10g}", f"{row['i_rep']:.12g}"])
    RunManifest("theory sweep", {"params": kv, "ke_grid": args.ke_grid},
                args.seed).write(out_dir, [out_csv])
    return 0


def _read_xy_csv(path):
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or not row[0].strip():
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                continue  # header line
    if not rows:
        raise InvalidConfigError(f"no numeric (x, y) rows in {path}")
    arr = np.asarray(rows)
    return arr[:, 0], arr[:, 1]


def cmd_fit(args) -> int:
    from .fitting import (ExperimentSpec, fit_decay, fit_spectrum,
                          joint_theory_fit)
    from .fitting.spectrum import covariance_spectrum

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.kind == "decay":
        x, y = _read_xy_csv(args.input)
        result = fit_decay(x, y, args.model)
        payload = result.to_dict()
        out_file = out_dir / "fit_decay.json"
    elif args.kind == "spectrum":
        recs = [load_recording(p) for p in args.rec]
        eig_sets = [covariance_spectrum(r) for r in recs]
        models = fit_spectrum(eig_sets, share_cutoff=not args.no_share_cutoff)
        payload = [{"sigma_f2": m.sigma_f2, "beta": m.beta, "i_c": m.i_c,
                    "nu": m.nu, "rss": m.rss, "n": m.n_points} for m in models]
        out_file = out_dir / "fit_spectrum.json"
    elif args.kind == "joint":
        spec = json.loads(Path(args.input).read_text())
        experiments = [ExperimentSpec(
            tag=e["tag"], k_e=[p[0] for p in e["points"]],
            metric=[p[1] for p in e["points"]], P=e["P"],
            k_c=e.get("k_c", 0.0), varies=e.get("varies"))
            for e in spec["experiments"]]
        fit = joint_theory_fit(experiments, seed=args.seed)
        payload = {
            "shared": fit.shared, "variants": fit.variants,
            "affine": {"a": fit.affine[0], "b": fit.affine[1]},
            "rss": fit.rss, "pearson_r": fit.pearson_r,
            "n_points": fit.n_points, "n_free": fit.n_free,
            "residual_rms": [float(np.sqrt(np.mean(r ** 2)))
                             for r in fit.residuals],
            "warnings": fit.warnings,
        }
        out_file = out_dir / "fit_joint.json"
    else:
        raise InvalidConfigError(f"unknown fit kind {args.kind!r}")
    out_file.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    RunManifest(f"fit {args.kind}", {"argv": vars(args).copy()},
                args.seed).write(out_dir, [out_file])
    return 0


def cmd_spectrum(args) -> int:
    from .fitting.spectrum import covariance_spectrum

    rec = load_recording(args.rec)
    eigs = covariance_spectrum(rec)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_file = out_dir / "spectrum.csv"
    with open(out_file, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("rank", "eigenvalue"))
        for i, val in enumerate(eigs, start=1):
            writer.writerow((i, f"{val:.12g}"))
    RunManifest("spectrum", {"rec": str(args.rec)}, args.seed).write(
        out_dir, [out_file])
    return 0


def cmd_stats(args) -> int:
    rec = load_recording(args.rec)
    result = activity_stats(rec, threshold=args.threshold,
                            fano_window=args.fano_window)
    payload = result.to_dict()
    payload["config"] = {"rec": str(args.rec), "threshold": args.threshold,
                         "fano_window": args.fano_window,
                         "burn_in": rec.burn_in}
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_file = out_dir / "stats.json"
    out_file.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    RunManifest("stats", payload["config"], args.seed).write(out_dir, [out_file])
    return 0


def cmd_recipe(args) -> int:
    dims = pareto_candidate(args.n_rec, args.d_inp, args.variant)
    lines = [
        f"N_rec = {args.n_rec}",
        f"d_m = {dims.d_m}",
        f"d_mlp = {dims.d_mlp}",
        f"d_tree = {dims.d_tree}",
        f"d_branch = {dims.d_branch}",
        f"d_s = {dims.d_s}",
        f"rho_rec = {dims.rho_rec:.6g}",
    ]
    print("\n".join(lines))
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="elmnet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_required=True):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", required=out_required)
        p.add_argument("--jobs", type=int,
                       default=int(os.environ.get("ELMNET_JOBS", "1")))

    p_train = sub.add_parser("train")
    p_train.add_argument("--config", required=True)
    common(p_train)
    p_train.set_defaults(func=cmd_train)

    p_sweep = sub.add_parser("sweep")
    p_sweep.add_argument("--config", required=True)
    common(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_theory = sub.add_parser("theory")
    p_theory.add_argument("action", choices=["sweep"])
    p_theory.add_argument("--params", required=True)
    p_theory.add_argument("--ke-grid", required=True)
    common(p_theory)
    p_theory.set_defaults(func=cmd_theory)

    p_fit = sub.add_parser("fit")
    p_fit.add_argument("kind", choices=["decay", "spectrum", "joint"])
    p_fit.add_argument("--in", dest="input")
    p_fit.add_argument("--rec", nargs="*", default=[])
    p_fit.add_argument("--model", default="power")
    p_fit.add_argument("--no-share-cutoff", action="store_true")
    common(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_spec = sub.add_parser("spectrum")
    p_spec.add_argument("--rec", required=True)
    common(p_spec)
    p_spec.set_defaults(func=cmd_spectrum)

    p_stats = sub.add_parser("stats")
    p_stats.add_argument("--rec", required=True)
    p_stats.add_argument("--threshold", type=float, default=0.0)
    p_stats.add_argument("--fano-window", type=int, default=50)
    common(p_stats)
    p_stats.set_defaults(func=cmd_stats)

    p_recipe = sub.add_parser("recipe")
    p_recipe.add_argument("--n-rec", type=int, required=True)
    p_recipe.add_argument("--d-inp", type=int, required=True)
    p_recipe.add_argument("--variant", choices=["floor", "ceil"], default="ceil")
    common(p_recipe, out_required=False)
    p_recipe.set_defaults(func=cmd_recipe)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except NumericFaultError as exc:
        print(f"numeric fault: {exc} (at {exc.location})", file=sys.stderr)
        return 2
    except USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
