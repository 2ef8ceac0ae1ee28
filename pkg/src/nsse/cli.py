"""Command-line interface: ``nsse {train,classify,embed,cv,diagnose,benchmark}``.

Every command writes a ``<output>.manifest.json`` next to its main output
recording the resolved configuration, input hashes and timing. Errors are
reported as a single ``error: <kind>: <message>`` line on stderr with exit
status 1.

``NSSE_THREADS`` caps the number of worker threads (0 or unset: one per
CPU). BLAS itself is pinned to one thread so results do not depend on it.
"""

import argparse
import csv
import dataclasses
import hashlib
import json
import sys
import time

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from ._parallel import n_threads, pmap
from .classify import ambient_nn, evaluate, report_from_predictions, nn_predict, train_suplap
from .dataset import DatasetError, SplitSpec, load_csv, read_table, split
from .diagnostics import diagnose
from .model import load, save
from .optimizer import DEFAULT_GRIDS, TrainConfig, cross_validate, default_sigma_grid, train

METHODS = ("nsse", "suplap", "nn")


class CLIError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CLIError(message)


def _floats(text):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers: {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of integers: {text!r}")


def _sigma_grid(text):
    return None if text.strip().lower() == "auto" else _floats(text)


def _sigma_init(text):
    t = text.strip().lower()
    if t in ("auto", "min", "max"):
        return t
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("expected auto, min, max or a number") from None


def _label_col(text):
    return int(text) if text.lstrip("-").isdigit() else text


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _fmt(x):
    return repr(float(x))


def _write_manifest(out_path, command, argv, config, inputs, seed, started):
    manifest = {
        "command": command,
        "argv": list(argv),
        "config": config,
        "inputs": {p: _sha256(p) for p in inputs},
        "seed": seed,
        "version": __version__,
        "threads": n_threads(),
        "wall_seconds": round(time.perf_counter() - started, 6),
    }
    with open(f"{out_path}.manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _add_data_args(p, required=True):
    p.add_argument("--data", required=required, help="CSV file")
    p.add_argument("--label-col", type=_label_col, default=0,
                   help="label column index or header name (default: 0)")
    p.add_argument("--no-header", action="store_true", help="CSV has no header row")


def _add_train_args(p, dim_required=True):
    p.add_argument("--dim", type=int, required=dim_required, help="embedding dimension d")
    p.add_argument("--mu1", type=float, default=TrainConfig.mu1)
    p.add_argument("--mu2", type=float, default=TrainConfig.mu2)
    p.add_argument("--mu3", type=float, default=TrainConfig.mu3)
    p.add_argument("--k", type=int, default=TrainConfig.k, help="neighbours per point")
    p.add_argument("--mutual", action="store_true", help="mutual instead of union k-NN")
    p.add_argument("--sigma-grid", type=_sigma_grid, default=None,
                   help="'auto' or comma-separated ascending scales")
    p.add_argument("--sigma-init", type=_sigma_init, default="auto",
                   help="'auto' (median distance), 'min', 'max' or a number")
    p.add_argument("--max-iter", type=int, default=TrainConfig.max_iter)
    p.add_argument("--tol", type=float, default=TrainConfig.rel_tol)
    p.add_argument("--ridge", type=float, default=TrainConfig.ridge)
    p.add_argument("--standardize", action="store_true",
                   help="standardize features; the record is stored in the model")
    p.add_argument("--seed", type=int, default=0)


def _load_labeled(args):
    return load_csv(args.data, args.label_col, not args.no_header)


def _config_from_args(args, X):
    grid = args.sigma_grid if args.sigma_grid is not None else list(default_sigma_grid(X))
    init = args.sigma_init
    if init == "min":
        init = grid[0]
    elif init == "max":
        init = grid[-1]
    elif init == "auto":
        init = None
    return TrainConfig(d=args.dim, mu1=args.mu1, mu2=args.mu2, mu3=args.mu3, k=args.k,
                       sigma_grid=grid, sigma_init=init, max_iter=args.max_iter,
                       rel_tol=args.tol, ridge=args.ridge, seed=args.seed,
                       mutual=args.mutual, standardize=args.standardize)


def _grid_source(args, ds):
    # the auto grid is computed in the space the optimizer sees
    if args.standardize and args.sigma_grid is None:
        from .dataset import standardize
        return standardize(ds)[0].X
    return ds.X


def cmd_train(args, argv, started):
    ds = _load_labeled(args)
    if args.dim > ds.n_samples:
        raise CLIError(f"--dim {args.dim} exceeds the number of samples N={ds.n_samples}")
    cfg = _config_from_args(args, _grid_source(args, ds))
    model, trace = train(ds, cfg)
    save(model, args.out_model)
    trace_path = args.out_trace or f"{args.out_model}.trace.csv"
    with open(trace_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trace.CSV_COLUMNS)
        for row in trace.rows():
            w.writerow([row[0]] + [_fmt(v) for v in row[1:]])
    _write_manifest(args.out_model, "train", argv, cfg.to_dict(), [args.data], args.seed, started)
    print(f"iterations {len(trace)}  objective {trace.objectives[-1]:.10g}  "
          f"sigma {model.sigma:.6g}  ridge {model.ridge:g}")
    return 0


def _labels_for_model(model, raw_labels):
    if model.class_names:
        index = {name: i for i, name in enumerate(model.class_names)}
        unknown = sorted({lab for lab in raw_labels if lab not in index})
        if unknown:
            raise CLIError(f"labels not seen in training: {', '.join(unknown[:5])}")
        return np.array([index[lab] for lab in raw_labels], dtype=np.int64)
    try:
        return np.array([int(lab) for lab in raw_labels], dtype=np.int64)
    except ValueError:
        raise CLIError("model has no class names and test labels are not integers") from None


def cmd_classify(args, argv, started):
    model = load(args.model)
    X, raw, _ = read_table(args.data, args.label_col, not args.no_header)
    if X.shape[0] == 0:
        raise CLIError("test set is empty")
    if X.shape[1] != model.n_features:
        raise CLIError(f"dimension mismatch: data has {X.shape[1]} features, "
                       f"model expects {model.n_features}")
    labels = _labels_for_model(model, raw)
    pred = nn_predict(model.Y, model.labels, model.embed_batch(X))
    report = report_from_predictions(labels, pred, model.n_classes)
    if args.out_report:
        with open(args.out_report, "w", newline="", encoding="utf-8") as fh:
            fh.write(report.to_csv(model.class_names))
        _write_manifest(args.out_report, "classify", argv, {}, [args.model, args.data],
                        None, started)
    print(f"{100 * report.error_rate:.2f}")
    return 0


def cmd_embed(args, argv, started):
    model = load(args.model)
    X, raw, _ = read_table(args.data, args.label_col, not args.no_header)
    if X.shape[0] and X.shape[1] != model.n_features:
        raise CLIError(f"dimension mismatch: data has {X.shape[1]} features, "
                       f"model expects {model.n_features}")
    Z = model.embed_batch(X) if X.shape[0] else np.zeros((0, model.dim))
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"y{j}" for j in range(model.dim)] + (["label"] if raw is not None else []))
        for i, z in enumerate(Z):
            w.writerow([_fmt(v) for v in z] + ([raw[i]] if raw is not None else []))
    _write_manifest(args.out, "embed", argv, {}, [args.model, args.data], None, started)
    return 0


def cmd_cv(args, argv, started):
    ds = _load_labeled(args)
    base = _config_from_args(args, _grid_source(args, ds))
    grids = {"mu1": args.mu1_grid, "mu2": args.mu2_grid, "mu3": args.mu3_grid}
    cfg, scores = cross_validate(ds, base, grids, folds=args.folds, seed=args.seed,
                                 return_scores=True)
    flags = [f"--dim={cfg.d}", f"--mu1={cfg.mu1!r}", f"--mu2={cfg.mu2!r}",
             f"--mu3={cfg.mu3!r}", f"--k={cfg.k}",
             "--sigma-grid=" + ",".join(repr(s) for s in cfg.sigma_grid),
             f"--max-iter={cfg.max_iter}", f"--tol={cfg.rel_tol!r}", f"--ridge={cfg.ridge!r}"]
    if cfg.mutual:
        flags.append("--mutual")
    if cfg.standardize:
        flags.append("--standardize")
    if args.out_flags:
        with open(args.out_flags, "w", encoding="utf-8") as fh:
            fh.write("\n".join(flags) + "\n")
        config = cfg.to_dict()
        config["cv_scores"] = {k: {repr(v): e for v, e in s.items()} for k, s in scores.items()}
        _write_manifest(args.out_flags, "cv", argv, config, [args.data], args.seed, started)
    print(f"mu1={cfg.mu1!r} mu2={cfg.mu2!r} mu3={cfg.mu3!r}")
    return 0


def cmd_diagnose(args, argv, started):
    model = load(args.model)
    rep = diagnose(model, args.delta, args.epsilon)
    print(rep.summary())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(rep.to_json())
        _write_manifest(args.out, "diagnose", argv, {"delta": args.delta,
                        "epsilon": args.epsilon}, [args.model], None, started)
    return 0


def _benchmark_cell(ds, cfg_args, method, size, seed, timing):
    try:
        train_ds, test_ds = split(ds, SplitSpec(size, seed))
    except DatasetError:
        return None
    t0 = time.perf_counter()
    if method == "nn":
        report, dim = ambient_nn(train_ds, test_ds), ds.n_features
    else:
        cfg = _config_from_args(cfg_args, _grid_source(cfg_args, train_ds))
        if cfg.d > train_ds.n_samples or cfg.k > train_ds.n_samples - 1:
            return None
        if cfg_args.cv:
            cfg = cross_validate(train_ds, cfg, folds=cfg_args.folds, seed=seed)
        if method == "nsse":
            model, _ = train(train_ds, cfg)
        else:
            model = train_suplap(train_ds, cfg.d, mu=cfg.mu1, k=cfg.k,
                                 sigma_grid=cfg.sigma_grid, ridge=cfg.ridge, mu2=cfg.mu2,
                                 mu3=cfg.mu3, mutual=cfg.mutual,
                                 standardize_features=cfg.standardize)
        report, dim = evaluate(model, test_ds), cfg.d
    wall_ms = (time.perf_counter() - t0) * 1000 if timing else 0.0
    return report.error_rate, dim, wall_ms


def cmd_benchmark(args, argv, started):
    ds = _load_labeled(args)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        raise CLIError(f"unknown methods {bad}; choose from {','.join(METHODS)}")
    if args.seeds < 1:
        raise CLIError("--seeds must be positive")
    if args.dim is None and set(methods) - {"nn"}:
        raise CLIError("--dim is required for methods nsse and suplap")
    cells = [(size, args.seed + s, method) for size in args.per_class_train
             for s in range(args.seeds) for method in methods]
    results = pmap(lambda c: _benchmark_cell(ds, args, c[2], c[0], c[1], not args.no_timing),
                   cells)
    rows = []
    for (size, seed, method), res in zip(cells, results):
        if res is None:
            print(f"warning: skipped method={method} per_class_train={size} seed={seed}: "
                  f"infeasible training size", file=sys.stderr)
            rows.append([method, size, seed, "", "", ""])
        else:
            err, dim, ms = res
            rows.append([method, size, seed, dim, _fmt(err), f"{ms:.3f}"])
    order = {m: i for i, m in enumerate(methods)}
    rows.sort(key=lambda r: (r[1], r[2], order[r[0]]))
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "per_class_train", "seed", "dim", "error_rate", "wall_ms"])
        w.writerows(rows)

    summary = [["per_class_train"] + methods]
    for size in args.per_class_train:
        line = [size]
        for m in methods:
            errs = [float(r[4]) for r in rows if r[0] == m and r[1] == size and r[4] != ""]
            line.append(f"{100 * np.mean(errs):.2f} ± {100 * np.std(errs):.2f}"
                        if errs else "n/a")
        summary.append(line)
    summary_path = args.summary or f"{args.out}.summary.csv"
    with open(summary_path, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh, lineterminator="\n").writerows(summary)
    widths = [max(len(str(r[j])) for r in summary) for j in range(len(summary[0]))]
    for r in summary:
        print("  ".join(str(v).rjust(wd) for v, wd in zip(r, widths)))
    config = {k: v for k, v in vars(args).items() if k != "func"}
    _write_manifest(args.out, "benchmark", argv, config, [args.data], args.seed, started)
    return 0


def build_parser():
    parser = _Parser(prog="nsse", fromfile_prefix_chars="@",
                     description="Supervised smooth embeddings with RBF out-of-sample maps.")
    parser.add_argument("--version", action="version", version=f"nsse {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="learn an embedding and interpolator",
                       fromfile_prefix_chars="@")
    _add_data_args(p)
    _add_train_args(p)
    p.add_argument("--out-model", required=True)
    p.add_argument("--out-trace", help="per-iteration CSV (default: <out-model>.trace.csv)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("classify", help="1-NN classification of a labeled CSV")
    p.add_argument("--model", required=True)
    _add_data_args(p)
    p.add_argument("--out-report", help="per-class report CSV")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("embed", help="map CSV rows through the interpolator")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--label-col", type=_label_col, default=None,
                   help="label column to pass through (default: none)")
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("cv", help="sequential cross-validation of mu1, mu2, mu3",
                       fromfile_prefix_chars="@")
    _add_data_args(p)
    _add_train_args(p)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--mu1-grid", type=_floats, default=list(DEFAULT_GRIDS["mu1"]))
    p.add_argument("--mu2-grid", type=_floats, default=list(DEFAULT_GRIDS["mu2"]))
    p.add_argument("--mu3-grid", type=_floats, default=list(DEFAULT_GRIDS["mu3"]))
    p.add_argument("--out-flags", help="write the selected config as a flags file (use @file)")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("diagnose", help="check the margin/regularity condition")
    p.add_argument("--model", required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--out", help="write the report as JSON")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("benchmark", help="repeated split/train/evaluate sweep",
                       fromfile_prefix_chars="@")
    _add_data_args(p)
    _add_train_args(p, dim_required=False)
    p.add_argument("--per-class-train", type=_ints, required=True)
    p.add_argument("--seeds", type=int, default=20, help="number of random splits")
    p.add_argument("--methods", default="nsse,suplap,nn")
    p.add_argument("--cv", action="store_true", help="cross-validate mu1..mu3 per split")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--out", required=True, help="long-format results CSV")
    p.add_argument("--summary", help="summary table CSV (default: <out>.summary.csv)")
    p.add_argument("--no-timing", action="store_true",
                   help="write wall_ms as 0 so the CSV is byte-reproducible")
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    started = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        with threadpool_limits(limits=1):
            return args.func(args, argv, started)
    except SystemExit as exc:
        # --help / --version
        return 0 if exc.code in (0, None) else 1
    except Exception as exc:  # noqa: BLE001 - single-line contract
        kind = "usage" if isinstance(exc, CLIError) else type(exc).__name__
        msg = " ".join(str(exc).split())
        print(f"error: {kind}: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
