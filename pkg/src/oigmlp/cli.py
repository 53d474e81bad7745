"""Command-line entry point: single runs, k-fold benchmarks, algorithm
comparisons, and the dependent-input immunity demonstration.

All outputs are plain delimited text with '#'-prefixed header lines naming
the columns, plus a key=value manifest per benchmark run.  Every command is
deterministic given its flags; only the manifest carries a timestamp.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time

import numpy as np

from . import data as datamod
from . import network, trainers

ALGO_CHOICES = list(trainers.ALGORITHMS)
ARTIFACT_VERSION = "oigmlp 0.1.0"
OUT_DIR_ENV = "OIGMLP_OUT_DIR"

TRACE_COLUMNS = ("iteration", "train_mse", "val_mse", "cum_multiplies")


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def write_trace(trace: trainers.TrainTrace, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# " + " ".join(TRACE_COLUMNS) + "\n")
        for rec in trace.records:
            fh.write(f"{rec.iteration} {_fmt(rec.train_mse)} "
                     f"{_fmt(rec.val_mse)} {rec.cum_multiplies}\n")
        if trace.diagnostic:
            fh.write(f"# DIAGNOSTIC {trace.diagnostic}\n")


def write_aborted_trace(records, message: str, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# " + " ".join(TRACE_COLUMNS) + "\n")
        for rec in records:
            fh.write(f"{rec.iteration} {_fmt(rec.train_mse)} "
                     f"{_fmt(rec.val_mse)} {rec.cum_multiplies}\n")
        fh.write(f"# ABORT {message}\n")


def load_curve_file(path: str):
    """Reload a trace or curve file written by this module.

    Returns (column_names, 2-D float array).  The bundled check tool for
    round-tripping curve outputs.
    """
    names = None
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if names is None and body and not body.startswith(("ABORT", "DIAGNOSTIC")):
                    names = body.split()
                continue
            rows.append([float(f) for f in line.split()])
    if names is None:
        raise ValueError(f"{path}: missing column header line")
    return names, np.asarray(rows, dtype=np.float64)


def _out_dir(args) -> str:
    out = args.out or os.environ.get(OUT_DIR_ENV) or "oigmlp_out"
    os.makedirs(out, exist_ok=True)
    return out


def _load_table(args) -> datamod.RawTable:
    desc = args.desc or args.data + ".desc"
    if not os.path.exists(desc):
        raise FileNotFoundError(f"descriptor file not found: {desc} "
                                f"(pass --desc)")
    return datamod.load_with_descriptor(args.data, desc)


def _write_manifest(path: str, args, extra: dict, files) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"artifact={ARTIFACT_VERSION}\n")
        fh.write(f"timestamp={time.strftime('%Y-%m-%dT%H:%M:%S')}\n")
        for key, value in sorted(vars(args).items()):
            if key != "func":
                fh.write(f"flag.{key}={value}\n")
        for key, value in extra.items():
            fh.write(f"{key}={value}\n")
        for name in files:
            fh.write(f"file={name}\n")


def _config(args, algorithm: str) -> trainers.TrainConfig:
    return trainers.TrainConfig(
        algorithm=algorithm, n_iterations=args.iters, n_hidden=args.hidden,
        seed=args.seed, activation=args.activation)


def _split_train_val(table: datamod.RawTable, val_fraction: float, seed: int):
    if val_fraction <= 0.0:
        ds = table.to_dataset()
        return ds, ds
    n_val = max(1, int(round(val_fraction * table.n_patterns)))
    order = np.random.default_rng(seed).permutation(table.n_patterns)
    train = table.subset(order[n_val:]).to_dataset()
    val = table.subset(order[:n_val]).to_dataset()
    return train, val


def cmd_train(args) -> int:
    table = _load_table(args)
    if args.normalize != "none":
        table, _ = datamod.normalize(table, args.normalize)
    train_ds, val_ds = _split_train_val(table, args.val_fraction, args.seed)
    out = args.out or os.path.join(os.environ.get(OUT_DIR_ENV, "."), "trace.txt")
    os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)
    config = _config(args, args.algo)
    try:
        trace = trainers.train(config, train_ds, val_ds)
    except trainers.TrainingAbort as exc:
        write_aborted_trace(getattr(exc, "records", []), str(exc), out)
        print(f"training aborted: {exc}", file=sys.stderr)
        return 1
    write_trace(trace, out)
    if trace.diagnostic:
        print(f"diagnostic: {trace.diagnostic}", file=sys.stderr)
    last = trace.records[-1]
    print(f"{args.algo}: iterations={len(trace.records)} "
          f"train_mse={_fmt(last.train_mse)} val_mse={_fmt(last.val_mse)} "
          f"best_val_mse={_fmt(trace.best.val_mse)}@{trace.best.iteration} "
          f"multiplies={last.cum_multiplies} trace={out}")
    return 0


def cmd_kfold(args) -> int:
    table = _load_table(args)
    if args.normalize != "none":
        table, _ = datamod.normalize(table, args.normalize)
    algorithms = [a.strip() for a in args.algo.split(",")]
    for algo in algorithms:
        if algo not in ALGO_CHOICES:
            print(f"unknown algorithm {algo!r}", file=sys.stderr)
            return 2
    out = _out_dir(args)
    plan = datamod.make_folds(table.n_patterns, args.k, args.seed)
    files = []
    report_rows = []
    for algo in algorithms:
        reports = []
        for j in range(plan.k):
            train_idx, val_idx, test_idx = plan.rotation(j)
            config = _config(args, algo)
            try:
                trace = trainers.train(config,
                                       table.subset(train_idx).to_dataset(),
                                       table.subset(val_idx).to_dataset())
            except trainers.TrainingAbort as exc:
                print(f"{algo} fold {j} aborted: {exc}", file=sys.stderr)
                return 1
            name = f"{algo}_fold{j:02d}.trace.txt"
            write_trace(trace, os.path.join(out, name))
            files.append(name)
            reports.append(datamod.report_metrics(
                trace, table.subset(test_idx).to_dataset(), task=table.task))
        folds_name = f"folds_{algo}.txt"
        with open(os.path.join(out, folds_name), "w", encoding="utf-8") as fh:
            fh.write("# fold train_mse val_mse test_metric cum_multiplies\n")
            for j, rep in enumerate(reports):
                fh.write(f"{j} {_fmt(rep['train_mse'])} {_fmt(rep['val_mse'])} "
                         f"{_fmt(rep['test_metric'])} {rep['cum_multiplies']}\n")
        files.append(folds_name)
        agg = datamod.aggregate_reports(reports)
        report_rows.append((algo, agg))
    metric_name = "test_pe" if table.task == "class" else "test_mse"
    report_path = os.path.join(out, "report.txt")
    with open(report_path, "w", encoding="utf-8") as fh:
        fh.write(f"# algorithm train_mse val_mse {metric_name} cum_multiplies\n")
        for algo, agg in report_rows:
            fh.write(f"{algo} {_fmt(agg['train_mse'])} {_fmt(agg['val_mse'])} "
                     f"{_fmt(agg['test_metric'])} {_fmt(agg['cum_multiplies'])}\n")
    files.append("report.txt")
    _write_manifest(os.path.join(out, "manifest.txt"), args,
                    {"n_patterns": table.n_patterns, "task": table.task},
                    files)
    for algo, agg in report_rows:
        print(f"{algo}: mean train_mse={_fmt(agg['train_mse'])} "
              f"mean {metric_name}={_fmt(agg['test_metric'])} "
              f"mean multiplies={_fmt(agg['cum_multiplies'])}")
    print(f"report={report_path}")
    return 0


def cmd_compare(args) -> int:
    table = _load_table(args)
    if args.normalize != "none":
        table, _ = datamod.normalize(table, args.normalize)
    algorithms = [a.strip() for a in args.algos.split(",")]
    for algo in algorithms:
        if algo not in ALGO_CHOICES:
            print(f"unknown algorithm {algo!r}", file=sys.stderr)
            return 2
    out = _out_dir(args)
    train_ds, val_ds = _split_train_val(table, args.val_fraction, args.seed)
    traces = {}
    for algo in algorithms:
        try:
            traces[algo] = trainers.train(_config(args, algo), train_ds, val_ds)
        except trainers.TrainingAbort as exc:
            print(f"{algo} aborted: {exc}", file=sys.stderr)
            return 1
    start = [traces[a].records[0].train_mse for a in algorithms]
    spread = max(start) - min(start)
    if spread > 1e-12 * max(1.0, max(start)):
        print(f"iteration-0 MSE differs across algorithms "
              f"(spread {spread:.3g})", file=sys.stderr)
        return 1
    n_rows = min(len(traces[a].records) for a in algorithms)
    iter_path = os.path.join(out, "curves_vs_iteration.txt")
    with open(iter_path, "w", encoding="utf-8") as fh:
        fh.write("# iteration " + " ".join(f"train_mse_{a}" for a in algorithms) + "\n")
        for i in range(n_rows):
            row = [str(i)] + [_fmt(traces[a].records[i].train_mse) for a in algorithms]
            fh.write(" ".join(row) + "\n")
    mult_path = os.path.join(out, "curves_vs_multiplies.txt")
    with open(mult_path, "w", encoding="utf-8") as fh:
        header = []
        for a in algorithms:
            header += [f"log10_multiplies_{a}", f"train_mse_{a}"]
        fh.write("# " + " ".join(header) + "\n")
        for i in range(n_rows):
            row = []
            for a in algorithms:
                rec = traces[a].records[i]
                logm = math.log10(rec.cum_multiplies) if rec.cum_multiplies > 0 else 0.0
                row += [_fmt(logm), _fmt(rec.train_mse)]
            fh.write(" ".join(row) + "\n")
    _write_manifest(os.path.join(out, "manifest.txt"), args,
                    {"iteration0_mse": _fmt(start[0]),
                     "iteration0_spread": _fmt(spread)},
                    ["curves_vs_iteration.txt", "curves_vs_multiplies.txt"])
    print(f"shared start check: PASS (iteration-0 MSE {_fmt(start[0])}, "
          f"spread {spread:.3g})")
    print(f"curves={iter_path},{mult_path}")
    return 0


def _parse_augment(specs, n_in: int):
    parsed = []
    for text in specs:
        coeff_text, _, const_text = text.partition(":")
        coeffs = [float(f) for f in coeff_text.split(",")]
        if len(coeffs) != n_in:
            raise ValueError(f"augment spec {text!r}: expected {n_in} "
                             f"coefficients")
        parsed.append((np.asarray(coeffs), float(const_text) if const_text else 0.0))
    return parsed


def cmd_dependent_demo(args) -> int:
    table = _load_table(args)
    if args.normalize != "none":
        table, _ = datamod.normalize(table, args.normalize)
    try:
        augment_spec = _parse_augment(args.augment, table.n_in)
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    augmented = datamod.augment_dependent(table, augment_spec)
    out = _out_dir(args)
    base_ds = table.to_dataset()
    aug_ds = augmented.to_dataset()
    init = network.net_control_init(base_ds, args.hidden, args.seed,
                                    activation=args.activation)
    init_aug = network.pad_params_for_new_inputs(init, len(augment_spec))
    algorithms = ["oig-hwo"] + [a.strip() for a in args.also.split(",") if a.strip()]
    files = []
    overlay_pass = None
    for algo in algorithms:
        if algo not in ALGO_CHOICES:
            print(f"unknown algorithm {algo!r}", file=sys.stderr)
            return 2
        config = _config(args, algo)
        try:
            trace_base = trainers.train(config, base_ds, base_ds, init_params=init)
            trace_aug = trainers.train(config, aug_ds, aug_ds, init_params=init_aug)
        except trainers.TrainingAbort as exc:
            print(f"{algo} aborted: {exc}", file=sys.stderr)
            return 1
        name = f"overlay_{algo}.txt"
        n_rows = min(len(trace_base.records), len(trace_aug.records))
        diffs = [abs(trace_base.records[i].train_mse - trace_aug.records[i].train_mse)
                 for i in range(n_rows)]
        with open(os.path.join(out, name), "w", encoding="utf-8") as fh:
            fh.write("# iteration train_mse_original train_mse_augmented\n")
            for i in range(n_rows):
                fh.write(f"{i} {_fmt(trace_base.records[i].train_mse)} "
                         f"{_fmt(trace_aug.records[i].train_mse)}\n")
        files.append(name)
        max_diff = max(diffs) if diffs else float("inf")
        if algo == "oig-hwo":
            overlay_pass = max_diff <= 1e-9
            verdict = "PASS" if overlay_pass else "FAIL"
            print(f"oig-hwo overlay {verdict}: max per-iteration "
                  f"train MSE difference = {max_diff:.3g} (limit 1e-09)")
        else:
            print(f"{algo}: max per-iteration train MSE difference = "
                  f"{max_diff:.3g} (no overlay requirement)")
    _write_manifest(os.path.join(out, "manifest.txt"), args,
                    {"overlay_pass": overlay_pass,
                     "n_augmented": len(augment_spec)}, files)
    return 0 if overlay_pass else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oigmlp",
        description="Two-stage MLP trainers with optimal input gains")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, val_fraction=True):
        p.add_argument("--data", required=True, help="numeric data file")
        p.add_argument("--desc", help="descriptor file (default <data>.desc)")
        p.add_argument("--hidden", type=int, default=8,
                       help="number of hidden units")
        p.add_argument("--iters", type=int, default=1000,
                       help="training iterations")
        p.add_argument("--seed", type=int, default=0, help="PRNG seed")
        p.add_argument("--activation", choices=list(network.ACTIVATIONS),
                       default="sigmoid")
        p.add_argument("--normalize", choices=list(datamod.NORMALIZATION_MODES),
                       default="zscore", help="input normalization")
        p.add_argument("--out", help=f"output path (default from "
                                     f"${OUT_DIR_ENV} or cwd)")
        if val_fraction:
            p.add_argument("--val-fraction", type=float, default=0.0,
                           dest="val_fraction",
                           help="held-out validation fraction (0 = validate "
                                "on training data)")

    p_train = sub.add_parser("train", help="run one training and write a trace")
    common(p_train)
    p_train.add_argument("--algo", choices=ALGO_CHOICES, required=True)
    p_train.set_defaults(func=cmd_train)

    p_kfold = sub.add_parser("kfold", help="k-fold benchmark with rotation")
    common(p_kfold, val_fraction=False)
    p_kfold.add_argument("--algo", required=True,
                         help="algorithm or comma-separated list")
    p_kfold.add_argument("--k", type=int, default=10, help="number of folds")
    p_kfold.set_defaults(func=cmd_kfold)

    p_cmp = sub.add_parser("compare",
                           help="shared-init curves for several algorithms")
    common(p_cmp)
    p_cmp.add_argument("--algos", default=",".join(ALGO_CHOICES),
                       help="comma-separated algorithm list")
    p_cmp.set_defaults(func=cmd_compare)

    p_dep = sub.add_parser("dependent-demo",
                           help="dependent-input immunity demonstration")
    common(p_dep, val_fraction=False)
    p_dep.add_argument("--augment", action="append", required=True,
                       help="appended input as 'c1,c2,...,cN[:const]' over "
                            "the existing inputs (repeatable)")
    p_dep.add_argument("--also", default="",
                       help="additional algorithms to run for contrast")
    p_dep.set_defaults(func=cmd_dependent_demo)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, ValueError) as exc:
        print(str(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
