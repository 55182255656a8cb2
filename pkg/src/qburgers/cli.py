"""Command-line entry point: sweep generation, training, evaluation, checks.

Exit codes: 0 success, 1 usage error, 2 runtime failure.  Every subcommand is
deterministic under fixed --seed and --timestamp-override (the latter also
honors the QBURGERS_TIMESTAMP environment variable).
"""

from __future__ import annotations

import argparse
import itertools
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Sequence

from . import dataset as ds
from .params import ExperimentParams
from .qsim import NoiseModel
from .qagt.model import ModelConfig
from .qagt.training import (
    TrainConfig,
    evaluate,
    load_checkpoint,
    save_checkpoint,
    train,
    write_history_csv,
)

USAGE_ERROR = 1
RUNTIME_ERROR = 2

TIMESTAMP_ENV = "QBURGERS_TIMESTAMP"


class _Parser(argparse.ArgumentParser):
    """argparse variant whose usage failures exit with code 1, not 2."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> List[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _int_list(text: str) -> List[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def build_parser() -> _Parser:
    parser = _Parser(prog="qburgers", description=__doc__)
    parser.add_argument("--seed", type=int, default=0, help="base RNG seed (default: 0)")
    parser.add_argument(
        "--out-dir", default="out", help="artifact directory (default: out)"
    )
    parser.add_argument(
        "--timestamp-override",
        default=None,
        help=f"pin the recorded timestamp (default: ${TIMESTAMP_ENV} or wall clock)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="generate experiment files over a parameter grid")
    sweep.add_argument(
        "--nu-list", type=_float_list, default=list(ds.NU_VALUES),
        help=f"comma-separated viscosities (default: {','.join(map(str, ds.NU_VALUES))})",
    )
    sweep.add_argument(
        "--dt-list", type=_float_list, default=list(ds.DT_VALUES),
        help=f"comma-separated time steps (default: {','.join(map(str, ds.DT_VALUES))})",
    )
    sweep.add_argument(
        "--n-list", type=_int_list, default=list(ds.N_VALUES),
        help=f"comma-separated grid sizes (default: {','.join(map(str, ds.N_VALUES))})",
    )
    sweep.add_argument(
        "--ul-list", type=_float_list, default=list(ds.UL_VALUES),
        help=f"comma-separated left boundary values (default: {','.join(map(str, ds.UL_VALUES))})",
    )
    sweep.add_argument("--shots", type=int, default=ds.DEFAULT_SHOTS,
                       help=f"shots per circuit (default: {ds.DEFAULT_SHOTS})")
    sweep.add_argument("--noise-p1", type=float, default=0.001,
                       help="single-qubit depolarizing probability (default: 0.001)")
    sweep.add_argument("--noise-p2", type=float, default=0.01,
                       help="two-qubit depolarizing probability (default: 0.01)")
    sweep.add_argument("--noise-readout", type=float, default=0.02,
                       help="symmetric readout flip probability (default: 0.02)")
    sweep.add_argument("--zne", choices=("on", "off"), default="on",
                       help="run zero-noise extrapolation per snapshot (default: on)")
    sweep.add_argument("--hardware-import", default=None,
                       help="JSON file of device counts keyed by record stem (default: none)")
    sweep.add_argument("--jobs", type=int, default=1,
                       help="parallel worker processes (default: 1)")

    tr = sub.add_parser("train", help="train a per-dimension corrector")
    tr.add_argument("--data-dir", required=True, help="directory of experiment files")
    tr.add_argument("--dim", type=int, required=True, help="grid dimension to train on")
    tr.add_argument("--epochs", type=int, default=100, help="training epochs (default: 100)")
    tr.add_argument("--lr", type=float, default=1e-3, help="learning rate (default: 1e-3)")
    tr.add_argument("--schedule", choices=("none", "step"), default="none",
                    help="lr schedule; step = x0.1 after epoch 70 (default: none)")
    tr.add_argument("--batch-size", type=int, default=16, help="batch size (default: 16)")
    tr.add_argument("--val-fraction", type=float, default=0.2,
                    help="held-out validation fraction (default: 0.2)")
    tr.add_argument("--mix-ratio", type=float, default=0.0,
                    help="fraction of training inputs swapped to hardware fields (default: 0)")
    tr.add_argument("--checkpoint-out", default=None,
                    help="checkpoint path (default: <out-dir>/model_dim<dim>.json)")
    tr.add_argument("--history-out", default=None,
                    help="history CSV path (default: <out-dir>/model_dim<dim>_history.csv)")

    ev = sub.add_parser("evaluate", help="report MAE baselines vs the corrector")
    ev.add_argument("--data-dir", required=True, help="directory of experiment files")
    ev.add_argument("--checkpoint", required=True, help="trained model checkpoint")
    ev.add_argument("--group-by", choices=("dim", "nu-regime"), default="dim",
                    help="report grouping (default: dim)")
    ev.add_argument("--out", default=None, help="CSV output path (default: stdout)")

    va = sub.add_parser("validate", help="schema-check every experiment file in a directory")
    va.add_argument("--data-dir", required=True, help="directory of experiment files")
    return parser


def _run_combo(job) -> int:
    params, noise, shots, seed, zne, hardware, out_dir, timestamp = job
    document = ds.run_experiment(
        params, noise, shots, seed, zne, hardware, out_dir, timestamp
    )
    return document["record_count"]


def cmd_sweep(args: argparse.Namespace) -> int:
    noise = NoiseModel(
        p1=args.noise_p1,
        p2=args.noise_p2,
        readout_p01=args.noise_readout,
        readout_p10=args.noise_readout,
    )
    combos = [
        ExperimentParams(nu=nu, dt=dt, n_grid=n, u_left=ul)
        for nu, dt, n, ul in itertools.product(
            args.nu_list, args.dt_list, args.n_list, args.ul_list
        )
    ]
    if not combos:
        print("no parameter combinations selected", file=sys.stderr)
        return USAGE_ERROR
    os.makedirs(args.out_dir, exist_ok=True)
    jobs = [
        (params, noise, args.shots, args.seed, args.zne == "on",
         args.hardware_import, args.out_dir, args.timestamp_override)
        for params in combos
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            record_counts = list(pool.map(_run_combo, jobs))
    else:
        record_counts = [_run_combo(job) for job in jobs]
    manifest = ds.write_manifest(args.out_dir)
    print(
        f"combos={len(combos)} records={sum(record_counts)} "
        f"out_dir={args.out_dir} manifest={manifest}"
    )
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    if not os.path.isdir(args.data_dir):
        print(f"data directory not found: {args.data_dir}", file=sys.stderr)
        return RUNTIME_ERROR
    samples = ds.load_dataset(args.data_dir, dims=[args.dim])
    if not samples:
        print(f"no usable samples of dimension {args.dim} in {args.data_dir}",
              file=sys.stderr)
        return RUNTIME_ERROR
    model_cfg = ModelConfig(out_dim=args.dim)
    train_cfg = TrainConfig(
        epochs=args.epochs,
        learning_rate=args.lr,
        lr_schedule=args.schedule,
        batch_size=args.batch_size,
        val_fraction=args.val_fraction,
        seed=args.seed,
        hardware_mix_ratio=args.mix_ratio,
    )
    params, history = train(samples, model_cfg, train_cfg)
    os.makedirs(args.out_dir, exist_ok=True)
    checkpoint = args.checkpoint_out or os.path.join(
        args.out_dir, f"model_dim{args.dim}.json"
    )
    history_path = args.history_out or os.path.join(
        args.out_dir, f"model_dim{args.dim}_history.csv"
    )
    save_checkpoint(params, model_cfg, checkpoint)
    write_history_csv(history, history_path)
    final = history[-1]
    print(
        f"samples={len(samples)} epochs={len(history)} "
        f"train_loss={final['train_loss']:.6g} val_loss={final['val_loss']:.6g} "
        f"val_mae={final['val_mae']:.6g} checkpoint={checkpoint} history={history_path}"
    )
    return 0


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.6g}"


def cmd_evaluate(args: argparse.Namespace) -> int:
    if not os.path.isdir(args.data_dir):
        print(f"data directory not found: {args.data_dir}", file=sys.stderr)
        return RUNTIME_ERROR
    params, model_cfg = load_checkpoint(args.checkpoint)
    samples = ds.load_dataset(args.data_dir, dims=[model_cfg.out_dim])
    if not samples:
        print(
            f"no samples of dimension {model_cfg.out_dim} in {args.data_dir}",
            file=sys.stderr,
        )
        return RUNTIME_ERROR
    report = evaluate(params, model_cfg, samples)
    header = (
        "Dim,Samples,Sim Noisy,ZNE,HW Raw,Corrected(Sim),Corrected(HW),"
        "Gain vs Sim,Gain vs HW"
    )
    lines = [header]
    if args.group_by == "dim":
        groups = [(str(dim), agg) for dim, agg in report.by_dimension.items()]
    else:
        groups = [
            (f"{model_cfg.out_dim}/{regime}", agg)
            for regime, agg in report.by_viscosity.items()
        ]
    for label, agg in groups:
        lines.append(
            f"{label},{int(agg['samples'])},{_fmt(agg['noisy'])},{_fmt(agg['zne'])},"
            f"{_fmt(agg['hardware'])},{_fmt(agg['corrected'])},{_fmt(agg['corrected_hw'])},"
            f"{_fmt(agg['gain_vs_sim'])},{_fmt(agg['gain_vs_hw'])}"
        )
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    if not os.path.isdir(args.data_dir):
        print(f"data directory not found: {args.data_dir}", file=sys.stderr)
        return RUNTIME_ERROR
    names = [
        name
        for name in sorted(os.listdir(args.data_dir))
        if name.endswith(".json") and name != "manifest.json"
    ]
    if not names:
        print(f"warning: no experiment files in {args.data_dir}")
        return 0
    total = 0
    for name in names:
        violations = ds.validate_schema(os.path.join(args.data_dir, name))
        for violation in violations:
            print(f"{name}: {violation}")
        total += len(violations)
    if total:
        print(f"{total} violation(s) across {len(names)} file(s)")
        return RUNTIME_ERROR
    print(f"{len(names)} file(s) ok")
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.timestamp_override is None:
        args.timestamp_override = os.environ.get(TIMESTAMP_ENV) or None
    handlers = {
        "sweep": cmd_sweep,
        "train": cmd_train,
        "evaluate": cmd_evaluate,
        "validate": cmd_validate,
    }
    try:
        return handlers[args.command](args)
    except BrokenPipeError:
        return 0
    except Exception as exc:  # surface runtime failures as exit code 2
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
