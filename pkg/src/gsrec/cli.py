"""Command-line front end.

Every subcommand exits 0 on success, 2 on a configuration problem (bad flags
or config files), 3 on a data problem (unreadable or malformed inputs), and 4
when a solver finishes without meeting its convergence test; in the last case
the outputs are still written so the run can be inspected.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from .datagen import (
    FeatureTable,
    GraphBuildSpec,
    SyntheticSpec,
    build_knn_graph,
    sample_mask,
    synth_instance,
)
from .errors import ConfigError, DataError, GsrecError
from .experiments import (
    COMBINE_METHODS,
    DETECT_METHODS,
    MATRIX_METHODS,
    ExperimentSpec,
    combine_opinions,
    evaluate,
    run_experiment,
    solve_recovery,
)
from .graph import normalize_shift
from .io import (
    load_graph,
    load_mask_csv,
    load_signal_csv,
    load_solver_config,
    result_to_dict,
    save_bundle,
    save_graph_dense,
    save_graph_edges,
    save_signal_csv,
)
from .solvers import SolverConfig


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0,
                        help="base seed for every random draw (default 0)")
    parser.add_argument("--config", type=str, default=None,
                        help="JSON file with solver parameters")
    parser.add_argument("--out", type=str, default=None,
                        help="output file or directory")
    parser.add_argument("--threads", type=int, default=None,
                        help="cap BLAS thread count for reproducible timing")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gsrec",
        description="Graph signal recovery: inpainting, matrix completion, "
                    "anomaly detection, and opinion combination.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-graph", help="build a kNN graph from features")
    _add_common(p)
    p.add_argument("--features", required=True, help="CSV of node features")
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--metric", choices=("euclidean", "manhattan", "precomputed"),
                   default="euclidean")
    p.add_argument("--normalization", choices=("row", "column"), default="row")
    p.add_argument("--symmetrize", action="store_true")
    p.add_argument("--missing", choices=("mean", "exclude"), default="mean")
    p.add_argument("--format", choices=("dense", "edges"), default="dense")

    p = sub.add_parser("synth", help="generate a synthetic problem bundle")
    _add_common(p)
    p.add_argument("--graph", required=True, help="graph CSV (with sidecar)")
    p.add_argument("--l", type=int, default=1, help="number of signal columns")
    p.add_argument("--recipe", choices=("eigen", "diffusion"), default="eigen")
    p.add_argument("--rank", type=int, default=None)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--outliers-per-column", type=int, default=0)
    p.add_argument("--outlier-lo", type=float, default=5.0)
    p.add_argument("--outlier-hi", type=float, default=10.0)
    p.add_argument("--ratio", type=float, default=0.5,
                   help="accessible-entry fraction for the bundled mask")

    p = sub.add_parser("inpaint", help="recover a single signal from a subset of nodes")
    _add_common(p)
    p.add_argument("--graph", required=True)
    p.add_argument("--signal", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--method", choices=("gtvm", "gtvr", "laplacian"),
                   default="gtvm")

    p = sub.add_parser("complete", help="recover a signal matrix from observed entries")
    _add_common(p)
    p.add_argument("--graph", required=True)
    p.add_argument("--signal", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--method", choices=MATRIX_METHODS, default="gmcm")

    p = sub.add_parser("detect", help="split a signal into smooth part and outliers")
    _add_common(p)
    p.add_argument("--graph", required=True)
    p.add_argument("--signal", required=True)
    p.add_argument("--method", choices=DETECT_METHODS, default="anomaly")
    p.add_argument("--beta", type=float, default=None,
                   help="sparsity weight for method 'anomaly'")
    p.add_argument("--eta-smooth", type=float, default=None,
                   help="variation budget for method 'anomaly-constrained'")

    p = sub.add_parser("robust", help="inpaint while rejecting outliers")
    _add_common(p)
    p.add_argument("--graph", required=True)
    p.add_argument("--signal", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--method", choices=("rgtvr", "admm"), default="rgtvr")

    p = sub.add_parser("combine", help="fuse per-expert opinion columns into labels")
    _add_common(p)
    p.add_argument("--opinions", required=True, help="CSV of +/-1 opinions")
    p.add_argument("--graph", default=None,
                   help="graph CSV; required for the denoise methods")
    p.add_argument("--method", choices=COMBINE_METHODS, default="avg")

    p = sub.add_parser("eval", help="score an estimate against ground truth")
    _add_common(p)
    p.add_argument("--truth", required=True)
    p.add_argument("--estimate", required=True)
    p.add_argument("--score", choices=("regression", "classification"),
                   default="regression")
    p.add_argument("--mask", default=None,
                   help="restrict scoring relative to this accessibility mask")
    p.add_argument("--on", choices=("hidden", "all"), default="all")

    p = sub.add_parser("run", help="run a full experiment description")
    _add_common(p)

    return parser


def _limit_threads(threads: int | None):
    """Best-effort BLAS thread cap; a no-op context when unavailable."""
    import contextlib

    if threads is None:
        return contextlib.nullcontext()
    if threads < 1:
        raise ConfigError(f"--threads must be positive, got {threads}")
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        warnings.warn("threadpoolctl is not installed; --threads ignored",
                      stacklevel=2)
        return contextlib.nullcontext()
    return threadpool_limits(limits=threads)


def _load_config(path: str | None) -> SolverConfig:
    if path is None:
        return SolverConfig()
    return load_solver_config(path)


def _out_dir(args) -> Path:
    if not args.out:
        raise ConfigError(f"{args.command} needs --out")
    path = Path(args.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_normalized_graph(path: str):
    shift = load_graph(path)
    return shift if shift.normalized else normalize_shift(shift)


def _write_result(out: Path, result) -> None:
    save_signal_csv(out / "estimate.csv", result.x)
    if result.outliers is not None:
        save_signal_csv(out / "outliers.csv", result.outliers)
    (out / "result.json").write_text(
        json.dumps(result_to_dict(result), indent=2, sort_keys=True) + "\n")


def _finish(result) -> int:
    if not result.converged:
        print("warning: solver stopped before meeting its convergence test",
              file=sys.stderr)
        return 4
    return 0


def _cmd_build_graph(args) -> int:
    features = load_signal_csv(args.features, allow_nan=True)
    table = FeatureTable(features, allow_missing=bool(np.isnan(features).any()))
    spec = GraphBuildSpec(k=args.k, metric=args.metric,
                          normalization=args.normalization,
                          symmetrize=args.symmetrize, missing=args.missing)
    shift = build_knn_graph(table, spec)
    out = args.out
    if not out:
        raise ConfigError("build-graph needs --out")
    if args.format == "edges":
        save_graph_edges(out, shift)
    else:
        save_graph_dense(out, shift)
    print(f"wrote graph with {shift.n} nodes to {out}")
    return 0


def _cmd_synth(args) -> int:
    shift = _load_normalized_graph(args.graph)
    spec = SyntheticSpec(
        n=shift.n, l=args.l, recipe=args.recipe, rank=args.rank,
        noise_sigma=args.noise_sigma,
        outliers_per_column=args.outliers_per_column,
        outlier_lo=args.outlier_lo, outlier_hi=args.outlier_hi)
    instance = synth_instance(shift, spec, args.seed)
    mask = sample_mask(instance.observed.shape, args.ratio, args.seed)
    out = _out_dir(args)
    save_bundle(out, shift, instance, mask)
    print(f"wrote bundle to {out}")
    return 0


def _cmd_recovery(args, methods_with_mask: bool = True) -> int:
    shift = _load_normalized_graph(args.graph)
    observed = load_signal_csv(args.signal)
    mask = None
    if methods_with_mask:
        mask = load_mask_csv(args.mask, observed.shape)
    config = _load_config(args.config)
    eta_smooth = getattr(args, "eta_smooth", None)
    if args.command == "detect" and args.method == "anomaly":
        if args.beta is not None:
            config = config.replace(gamma=args.beta)
        if config.gamma <= 0:
            raise ConfigError("method 'anomaly' needs --beta > 0")
    result = solve_recovery(args.method, observed, mask, shift, config,
                            eta_smooth)
    out = _out_dir(args)
    _write_result(out, result)
    print(f"{args.method}: {result.iterations} iterations, "
          f"converged={result.converged}")
    return _finish(result)


def _cmd_combine(args) -> int:
    opinions = load_signal_csv(args.opinions)
    shift = None
    if args.method != "avg":
        if not args.graph:
            raise ConfigError(f"method {args.method!r} needs --graph")
        shift = _load_normalized_graph(args.graph)
    labels = combine_opinions(opinions, args.method, shift,
                              _load_config(args.config))
    out = _out_dir(args)
    save_signal_csv(out / "labels.csv", labels)
    print(f"wrote labels for {labels.shape[0]} nodes to {out / 'labels.csv'}")
    return 0


def _cmd_eval(args) -> int:
    truth = load_signal_csv(args.truth)
    estimate = load_signal_csv(args.estimate)
    if truth.shape != estimate.shape:
        raise DataError(
            f"truth shape {truth.shape} vs estimate shape {estimate.shape}")
    if args.mask is not None:
        mask = load_mask_csv(args.mask, truth.shape)
        select = ~mask if args.on == "hidden" else np.ones_like(mask)
        truth = truth[select]
        estimate = estimate[select]
    report = evaluate(truth, estimate, args.score)
    payload = {"mse": report.mse, "rmse": report.rmse, "mae": report.mae,
               "count": report.count}
    if report.acc is not None:
        payload["acc"] = report.acc
    text = json.dumps(payload, indent=2, sort_keys=True)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    return 0


def _cmd_run(args) -> int:
    if not args.config:
        raise ConfigError("run needs --config with an experiment description")
    try:
        with open(args.config) as handle:
            data = json.load(handle)
    except OSError as exc:
        raise DataError(f"cannot read {args.config}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{args.config}: {exc}") from exc
    if args.seed:
        data["seed"] = args.seed
    spec = ExperimentSpec.from_dict(data)
    report = run_experiment(spec, _out_dir(args))
    print(f"wrote {report['rows']} trial rows to {args.out}")
    if not report["all_converged"]:
        print("warning: some trials stopped before convergence", file=sys.stderr)
        return 4
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "build-graph": _cmd_build_graph,
        "synth": _cmd_synth,
        "inpaint": _cmd_recovery,
        "complete": _cmd_recovery,
        "detect": lambda a: _cmd_recovery(a, methods_with_mask=False),
        "robust": _cmd_recovery,
        "combine": _cmd_combine,
        "eval": _cmd_eval,
        "run": _cmd_run,
    }
    try:
        with _limit_threads(args.threads):
            return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except GsrecError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
