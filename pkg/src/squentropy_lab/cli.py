"""Command-line entry point: ``squentropy-lab {spiral,train,eval,sweep,report}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric divergence.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import config as cfgmod
from . import diagnostics, mlp
from .calibration import CalibrationReport
from .data import DataError, generate_spiral, load_csv, save_csv, split, standardize
from .losses import LossSpec
from .trainer import DivergenceError, TrainConfig, TrainHistory, evaluate, sweep, train

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DIVERGED = 0, 1, 2, 3

SPIRAL_DEFAULTS = {"n_train": 1000, "n_test": 500, "noise": 0.02, "rotations": 2.0, "inner_radius": 0.1}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- helpers


def _write_json(path, obj):
    path.write_text(json.dumps(obj, indent=2, allow_nan=False) + "\n", encoding="utf-8")


def _read_json(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno} (char {exc.pos}): {exc.msg}"
        ) from None


def _load_checkpoint(path):
    try:
        return mlp.load_checkpoint(path)
    except OSError as exc:
        raise DataError(f"{path}: cannot read checkpoint ({exc.strerror})") from None
    except ValueError as exc:
        raise DataError(str(exc)) from None


def _resolve_values(args):
    file_values = cfgmod.load_config(args.config) if args.config else {}
    hidden = None
    if args.hidden is not None:
        hidden = cfgmod.parse_value("hidden", args.hidden)
    batch = None
    if args.batch is not None:
        batch = cfgmod.parse_value("batch_size", args.batch)
    overrides = {
        "loss": args.loss,
        "t": args.t,
        "M": args.M,
        "lr": args.lr,
        "weight_decay": args.wd,
        "epochs": args.epochs,
        "batch_size": batch,
        "hidden": hidden,
        "bins_k": args.bins,
        "standardize": False if args.no_standardize else None,
        "shuffle": args.shuffle,
    }
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    values = cfgmod.resolve(file_values, overrides)
    if args.batch == "auto":
        values["batch_size"] = None
    return values


def _train_config(values):
    try:
        spec = LossSpec.parse(values["loss"], t=values["t"], M=values["M"])
        return TrainConfig(
            loss=spec,
            learning_rate=values["lr"],
            weight_decay=values["weight_decay"],
            epochs=values["epochs"],
            batch_size=values["batch_size"],
            seed=values["seed"],
            hidden=values["hidden"],
            shuffle_each_epoch=values["shuffle"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _config_echo(values, tc):
    echo = {k: values[k] for k in cfgmod.KEYS}
    echo["loss"] = tc.loss.name
    echo["t"] = tc.loss.t
    echo["M"] = tc.loss.M
    echo["hidden"] = list(tc.hidden)
    echo["batch_size"] = "auto" if values["batch_size"] is None else values["batch_size"]
    return echo


def _load_splits(args, seed):
    """Train/test datasets from --train/--test or --data (split by --test-frac)."""
    header = {"auto": "auto", "yes": True, "no": False}[args.header]
    if args.data:
        if args.train or args.test:
            raise UsageError("use either --data or --train/--test, not both")
        full = load_csv(args.data, has_header=header, label_column=args.label_col)
        try:
            tr, te = split(full, args.test_frac, seed)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        return tr, te, {"data": str(args.data), "test_frac": args.test_frac}
    if not (args.train and args.test):
        raise UsageError("need --train and --test, or --data")
    tr = load_csv(args.train, has_header=header, label_column=args.label_col)
    te = load_csv(args.test, has_header=header, label_column=args.label_col, classes=tr.class_names)
    if tr.d != te.d:
        raise DataError(f"train has {tr.d} features but test has {te.d}")
    return tr, te, {"train": str(args.train), "test": str(args.test)}


def _prepare(train_set, test_set, do_standardize):
    """Returns the training set the network sees plus the standardizer to attach."""
    if not do_standardize:
        return train_set, None
    tr, _, st = standardize(train_set, test_set)
    return tr, st


def _attach(params, st, class_names):
    if st is not None:
        params.feature_mean = st.mean.copy()
        params.feature_std = st.std.copy()
    params.class_names = tuple(class_names) if class_names else None
    return params


def _make_out(path):
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out}: {exc.strerror}") from None
    return out


def _run_report(values, tc, sources, history, acc, report, runtime):
    return {
        "config": {**_config_echo(values, tc), **sources},
        "history": history.to_dict(),
        "train_accuracy": history.accuracy[-1],
        "test_accuracy": acc,
        "calibration_report": report.to_dict(),
        "runtime_seconds": runtime,
    }


# ---------------------------------------------------------------- commands


def cmd_spiral(args):
    for name in ("n_train", "n_test"):
        v = getattr(args, name)
        if v < 2 or v % 2:
            raise UsageError(f"--{name.replace('_', '-')} must be an even number >= 2, got {v}")
    try:
        tr, te = generate_spiral(args.n_train, args.n_test, args.noise, args.rotations, args.seed, args.inner_radius)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = _make_out(args.out)
    save_csv(tr, out / "spiral_train.csv", header=["x", "y", "label"])
    save_csv(te, out / "spiral_test.csv", header=["x", "y", "label"])
    print(f"wrote {out / 'spiral_train.csv'} ({tr.n} rows) and {out / 'spiral_test.csv'} ({te.n} rows)")


def cmd_train(args):
    values = _resolve_values(args)
    tc = _train_config(values)
    train_set, test_set, sources = _load_splits(args, tc.seed)
    net_train, st = _prepare(train_set, test_set, values["standardize"])
    if tc.batch_size not in (None, "full") and tc.batch_size > train_set.n:
        raise UsageError(f"batch size {tc.batch_size} exceeds {train_set.n} training samples")
    t0 = time.perf_counter()
    params, history = train(net_train, tc)
    _attach(params, st, train_set.class_names)
    acc, report = evaluate(params, test_set, values["bins_k"])
    runtime = time.perf_counter() - t0 if args.timing else None

    out = _make_out(args.out)
    mlp.save_checkpoint(params, out / "checkpoint.bin")
    _write_json(out / "report.json", _run_report(values, tc, sources, history, acc, report, runtime))
    print(f"{tc.loss}: train acc {history.accuracy[-1]:.4f}, test acc {acc:.4f}, ECE {report.ece:.4f}")


def cmd_eval(args):
    params = _load_checkpoint(args.checkpoint)
    header = {"auto": "auto", "yes": True, "no": False}[args.header]
    test_set = load_csv(args.test, has_header=header, label_column=args.label_col, classes=params.class_names)
    if test_set.d != params.architecture.input_dim or test_set.class_count != params.architecture.class_count:
        raise DataError(
            f"{args.test}: {test_set.d} features / {test_set.class_count} classes, checkpoint expects "
            f"{params.architecture.input_dim} / {params.architecture.class_count}"
        )
    acc, report = evaluate(params, test_set, args.bins)
    out = _make_out(args.out)
    _write_json(out / "eval.json", {
        "checkpoint": str(args.checkpoint),
        "test": str(args.test),
        "test_accuracy": acc,
        "calibration_report": report.to_dict(),
    })
    print(f"test acc {acc:.4f}, ECE {report.ece:.4f}")


def _parse_seeds(text):
    try:
        seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"--seeds must be a comma list of integers, got {text!r}") from None
    if len(seeds) < 2:
        raise UsageError("--seeds needs at least 2 seeds")
    if len(set(seeds)) != len(seeds):
        raise UsageError(f"duplicate seeds in {seeds}")
    return seeds


def cmd_sweep(args):
    seeds = _parse_seeds(args.seeds)
    values = _resolve_values(args)
    values["seed"] = seeds[0]
    tc = _train_config(values)
    # the data split (if any) is fixed by --split-seed so only init/shuffle vary
    train_set, test_set, sources = _load_splits(args, args.split_seed)
    if values["standardize"]:
        train_set, test_set, _ = standardize(train_set, test_set)
    per_seed = {}

    def keep(seed, params, history, acc, report):
        per_seed[seed] = (history, acc, report)

    t0 = time.perf_counter()
    summary = sweep(train_set, test_set, tc, seeds, values["bins_k"], on_run=keep)
    runtime = time.perf_counter() - t0 if args.timing else None

    out = _make_out(args.out)
    for seed in seeds:
        history, acc, report = per_seed[seed]
        seed_values = {**values, "seed": seed}
        _write_json(out / f"seed_{seed}.json",
                    _run_report(seed_values, tc, sources, history, acc, report, None))
    echo = _config_echo(values, tc)
    echo.pop("seed")
    _write_json(out / "summary.json", {
        "config": {**echo, **sources, "seeds": seeds},
        **summary.to_dict(),
        "runtime_seconds": runtime,
    })
    print(
        f"{tc.loss}: accuracy {summary.mean_accuracy:.4f} +/- {summary.std_accuracy:.4f}, "
        f"ECE {summary.mean_ece:.4f} +/- {summary.std_ece:.4f} over {len(seeds)} seeds"
    )


def cmd_report(args):
    if not args.report and not args.checkpoint:
        raise UsageError("give at least one --report or a --checkpoint with --data")
    reports = []
    for i, path in enumerate(args.report or []):
        doc = _read_json(path)
        try:
            cal = CalibrationReport.from_dict(doc["calibration_report"] if "calibration_report" in doc else doc)
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}: not a run report ({exc})") from None
        history = None
        if isinstance(doc.get("history"), dict):
            try:
                history = TrainHistory.from_dict(doc["history"])
            except (KeyError, TypeError, ValueError) as exc:
                raise DataError(f"{path}: bad history ({exc})") from None
        label = doc.get("config", {}).get("loss") if isinstance(doc.get("config"), dict) else None
        names = args.name or []
        label = names[i] if i < len(names) else (label or Path(path).stem)
        reports.append((label, cal, history))

    raster = points = None
    if args.checkpoint:
        if not args.data:
            raise UsageError("--checkpoint needs --data (2-class CSV) for the boundary raster")
        params = _load_checkpoint(args.checkpoint)
        header = {"auto": "auto", "yes": True, "no": False}[args.header]
        ds = load_csv(args.data, has_header=header, label_column=args.label_col, classes=params.class_names)
        if params.architecture.class_count != 2 or ds.d != 2 or params.architecture.input_dim != 2:
            raise DataError("boundary raster needs a 2-class model on 2-D data")
        raster = diagnostics.boundary_raster(params, diagnostics.data_bounds(ds.features), args.resolution)
        points = (ds.features, ds.labels)

    out = _make_out(args.out)
    written = []
    multi = len(reports) > 1
    for label, cal, _ in reports:
        suffix = f"_{_safe(label)}" if multi else ""
        for kind in ("reliability", "histogram"):
            p = out / f"{kind}{suffix}.svg"
            p.write_bytes(diagnostics.emit_svg(cal, kind=kind, title=f"{kind.capitalize()} ({label})"))
            written.append(p)
    histories = [(label, h) for label, _, h in reports if h is not None]
    if histories:
        try:
            rows = diagnostics.weight_norm_series(histories)
        except ValueError as exc:
            raise DataError(str(exc)) from None
        (out / "weight_norm.csv").write_text(diagnostics.series_csv(rows), encoding="utf-8")
        p = out / "weight_norm.svg"
        p.write_bytes(diagnostics.emit_svg(rows))
        written += [out / "weight_norm.csv", p]
    if raster is not None:
        (out / "boundary.csv").write_text(raster.to_csv(), encoding="utf-8")
        p = out / "boundary.svg"
        p.write_bytes(diagnostics.emit_svg(raster, points=points if args.points else None))
        written += [out / "boundary.csv", p]
    for p in written:
        print(f"wrote {p}")


def _safe(label):
    return "".join(c if c.isalnum() or c in "-_" else "-" for c in label)


# ---------------------------------------------------------------- parser


def _add_data_flags(p, allow_data=True):
    p.add_argument("--train", help="training CSV")
    p.add_argument("--test", help="test CSV")
    if allow_data:
        p.add_argument("--data", help="single CSV to split into train/test")
        p.add_argument("--test-frac", type=float, default=0.2, help="test fraction with --data (default 0.2)")
    p.add_argument("--label-col", type=int, default=-1, help="label column index (default: last)")
    p.add_argument("--header", choices=("auto", "yes", "no"), default="auto")


def _add_train_flags(p):
    p.add_argument("--config", help="key=value config file, or a built-in name: tabular, spiral")
    p.add_argument("--loss", help="squentropy | cross-entropy | square")
    p.add_argument("--t", type=float, help="square loss: true-class weight t")
    p.add_argument("--M", type=float, help="square loss: true-class target M")
    p.add_argument("--lr", type=float)
    p.add_argument("--wd", type=float, help="weight decay")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch", help="batch size, 'full' or 'auto'")
    p.add_argument("--hidden", help="hidden widths, comma separated, e.g. 64,128,64")
    p.add_argument("--bins", type=int, help="ECE bin count K")
    p.add_argument("--no-standardize", action="store_true")
    p.add_argument("--shuffle", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--timing", action="store_true", help="record runtime_seconds (makes reports non-reproducible)")
    p.add_argument("--out", required=True, help="output directory")


def build_parser():
    parser = _Parser(prog="squentropy-lab", description="Train and calibrate small classifiers with squentropy and baselines.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("spiral", help="write the two-arm spiral train/test CSVs")
    p.add_argument("--n-train", dest="n_train", type=int, default=SPIRAL_DEFAULTS["n_train"])
    p.add_argument("--n-test", dest="n_test", type=int, default=SPIRAL_DEFAULTS["n_test"])
    p.add_argument("--noise", type=float, default=SPIRAL_DEFAULTS["noise"])
    p.add_argument("--rotations", type=float, default=SPIRAL_DEFAULTS["rotations"])
    p.add_argument("--inner-radius", dest="inner_radius", type=float, default=SPIRAL_DEFAULTS["inner_radius"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_spiral)

    p = sub.add_parser("train", help="train one network and write checkpoint.bin + report.json")
    _add_data_flags(p)
    _add_train_flags(p)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a CSV")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--test", "--data", dest="test", required=True)
    p.add_argument("--label-col", type=int, default=-1)
    p.add_argument("--header", choices=("auto", "yes", "no"), default="auto")
    p.add_argument("--bins", type=int, default=cfgmod.DEFAULTS["bins_k"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="train once per seed and summarize mean and std")
    _add_data_flags(p)
    _add_train_flags(p)
    p.add_argument("--seeds", required=True, help="comma list, e.g. 1,2,3,4,5")
    p.add_argument("--split-seed", type=int, default=0, help="seed for --data splitting")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="render SVG figures from run reports and checkpoints")
    p.add_argument("--report", action="append", help="run report JSON (repeatable)")
    p.add_argument("--name", action="append", help="series label per --report")
    p.add_argument("--checkpoint", help="2-class checkpoint for the boundary raster")
    p.add_argument("--data", help="2-D CSV giving the raster window (and points)")
    p.add_argument("--label-col", type=int, default=-1)
    p.add_argument("--header", choices=("auto", "yes", "no"), default="auto")
    p.add_argument("--resolution", type=int, default=200)
    p.add_argument("--points", action="store_true", help="overlay the data points on the raster")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (UsageError, cfgmod.ConfigError) as exc:
        print(f"squentropy-lab {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"squentropy-lab {args.command}: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (DataError, ValueError, OSError) as exc:
        print(f"squentropy-lab {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
