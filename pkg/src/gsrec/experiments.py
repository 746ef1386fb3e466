"""Evaluation metrics, model selection, baselines, and the experiment runner.

The runner consumes a plain-dict experiment description (usually parsed from a
JSON config), executes a deterministic grid of trials, and writes two files
into the output directory:

* ``trials.csv``: one row per (ratio, trial, method) with fixed column order
  and ``%.17g`` float formatting.  Re-running the same description with the
  same seed reproduces this file byte for byte, so it doubles as a regression
  fixture.  Wall-clock timing is deliberately kept out of it.
* ``report.json``: the echoed description, library versions, per-method
  aggregates, parameter-selection modes, and timing.
"""

from __future__ import annotations

import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .datagen import (
    STREAM_SPLIT,
    GraphBuildSpec,
    SyntheticSpec,
    build_knn_graph,
    corrupt_labels,
    laplacian_from_shift,
    random_features,
    round_half_up,
    sample_mask,
    stream_rng,
    synth_instance,
    synth_opinion_instance,
)
from .errors import (
    ConfigError,
    DimensionMismatch,
    EmptyGrid,
    EmptyMask,
    NonBinaryInput,
    NonSymmetricLaplacian,
)
from .graph import GraphShift, cycle_shift, normalize_shift
from .io import load_bundle, load_graph, solver_config_from_dict
from .prox import regularized_solve
from .solvers import (
    RecoveryResult,
    SolverConfig,
    anomaly_detect,
    anomaly_detect_constrained,
    gmcm,
    gmcr,
    gsr_admm,
    gtvm,
    gtvr,
    rgtvr,
)

VECTOR_METHODS = ("gtvm", "gtvr", "rgtvr", "laplacian")
MATRIX_METHODS = ("gmcm", "gmcr", "admm")
DETECT_METHODS = ("anomaly", "anomaly-constrained")
COMBINE_METHODS = ("avg", "gtvr-denoise", "gmcr-denoise")

TRIALS_HEADER = "task,method,ratio,trial,seed,acc,mse,rmse,mae,iterations,converged"


@dataclass(frozen=True)
class MetricReport:
    """Point-estimate quality summary; ``acc`` only for classification."""

    mse: float
    rmse: float
    mae: float
    count: int
    acc: float | None = None


def threshold_labels(estimate: np.ndarray) -> np.ndarray:
    """Map real scores to +/-1 labels.  Exact zeros go to -1."""
    return np.where(np.asarray(estimate, dtype=float) > 0.0, 1.0, -1.0)


def evaluate(truth: np.ndarray, estimate: np.ndarray,
             score: str = "regression") -> MetricReport:
    """Compare an estimate against ground truth.

    ``score="classification"`` additionally thresholds the estimate at zero
    and reports label accuracy against +/-1 truth.
    """
    truth = np.asarray(truth, dtype=float)
    estimate = np.asarray(estimate, dtype=float)
    if truth.shape != estimate.shape:
        raise DimensionMismatch(
            f"truth shape {truth.shape} vs estimate shape {estimate.shape}")
    if truth.size == 0:
        raise EmptyMask("cannot evaluate on an empty selection")
    if score not in ("regression", "classification"):
        raise ConfigError(f"unknown score mode {score!r}")
    err = estimate - truth
    mse = float(np.mean(err * err))
    report = MetricReport(
        mse=mse,
        rmse=float(np.sqrt(mse)),
        mae=float(np.mean(np.abs(err))),
        count=int(truth.size),
    )
    if score == "classification":
        labels = threshold_labels(estimate)
        acc = float(np.mean(labels == truth))
        report = MetricReport(mse=report.mse, rmse=report.rmse, mae=report.mae,
                              count=report.count, acc=acc)
    return report


def laplacian_baseline(t: np.ndarray, mask: np.ndarray, laplacian: np.ndarray,
                       alpha: float) -> RecoveryResult:
    """Classic Laplacian-regularized inpainting, solved in closed form.

    Minimizes the squared misfit on accessible nodes plus ``alpha * x' L x``.
    The Laplacian must be symmetric; this is the reference point the
    shift-based solvers are compared against.
    """
    t = np.asarray(t, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    laplacian = np.asarray(laplacian, dtype=float)
    n = t.shape[0]
    if t.ndim != 1:
        raise DimensionMismatch(f"expected a vector, got shape {t.shape}")
    if mask.shape != (n,):
        raise DimensionMismatch(f"mask shape {mask.shape} vs signal length {n}")
    if laplacian.shape != (n, n):
        raise DimensionMismatch(
            f"laplacian shape {laplacian.shape} vs signal length {n}")
    if alpha < 0:
        raise ConfigError(f"alpha must be nonnegative, got {alpha}")
    asym = float(np.linalg.norm(laplacian - laplacian.T))
    if asym > 1e-10 * (1.0 + float(np.linalg.norm(laplacian))):
        raise NonSymmetricLaplacian(
            f"laplacian asymmetry {asym:.3e} exceeds tolerance")
    if not np.any(mask):
        raise EmptyMask("no accessible nodes")
    selector = np.diag(mask.astype(float))
    system = selector + alpha * laplacian
    x = regularized_solve(system, np.where(mask, t, 0.0))
    misfit = float(np.sum((x[mask] - t[mask]) ** 2))
    smooth = float(x @ (laplacian @ x))
    objective = misfit + alpha * smooth
    return RecoveryResult(
        x=x,
        objective_trace=np.asarray([objective]),
        iterations=1,
        converged=True,
        meta={"solver": "laplacian", "alpha": float(alpha)},
    )


@dataclass(frozen=True)
class CvSelection:
    """Outcome of a holdout search over a configuration grid."""

    index: int
    config: SolverConfig
    val_mse: tuple[float, ...]
    train_count: int
    val_count: int


def cross_validate(method: str, observed: np.ndarray, mask: np.ndarray,
                   shift: GraphShift, grid: Sequence[SolverConfig], seed: int,
                   *subkeys: int) -> CvSelection:
    """Pick a configuration by an 80/20 holdout on the accessible entries.

    The split is drawn from a dedicated seeded stream, so repeated calls with
    the same arguments select the same configuration.  Validation score is
    mean squared error against the held-out observed values; ties resolve to
    the earliest grid entry, and non-finite scores are treated as infinitely
    bad.
    """
    grid = list(grid)
    if not grid:
        raise EmptyGrid("empty configuration grid")
    observed = np.asarray(observed, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    if observed.shape != mask.shape:
        raise DimensionMismatch(
            f"observed shape {observed.shape} vs mask shape {mask.shape}")
    flat = np.flatnonzero(mask.ravel())
    if flat.size < 2:
        raise EmptyMask("holdout selection needs at least two accessible entries")
    train_count = round_half_up(0.8 * flat.size)
    train_count = min(max(train_count, 1), flat.size - 1)
    perm = stream_rng(seed, STREAM_SPLIT, *subkeys).permutation(flat.size)
    train_idx = flat[perm[:train_count]]
    val_idx = flat[perm[train_count:]]
    train_mask = np.zeros(mask.size, dtype=bool)
    train_mask[train_idx] = True
    train_mask = train_mask.reshape(mask.shape)
    target = observed.ravel()[val_idx]
    scores = []
    for config in grid:
        result = solve_recovery(method, observed, train_mask, shift, config)
        pred = np.asarray(result.x, dtype=float).ravel()[val_idx]
        mse = float(np.mean((pred - target) ** 2))
        scores.append(mse if np.isfinite(mse) else np.inf)
    best = int(np.argmin(scores))
    return CvSelection(
        index=best,
        config=grid[best],
        val_mse=tuple(scores),
        train_count=int(train_count),
        val_count=int(flat.size - train_count),
    )


def combine_opinions(opinions: np.ndarray, method: str,
                     shift: GraphShift | None = None,
                     config: SolverConfig | None = None) -> np.ndarray:
    """Fuse per-expert +/-1 opinions into one +/-1 label per node.

    ``avg`` takes the sign of the mean opinion.  The denoise variants treat
    scores as a graph signal and smooth them before thresholding:
    ``gtvr-denoise`` smooths the mean-score vector, ``gmcr-denoise`` runs the
    low-rank recovery on the full opinion matrix and averages afterwards.
    Ties threshold to +1.
    """
    opinions = np.asarray(opinions, dtype=float)
    if opinions.ndim != 2:
        raise DimensionMismatch(
            f"expected an (n, experts) matrix, got shape {opinions.shape}")
    if not np.all(np.isin(opinions, (-1.0, 1.0))):
        raise NonBinaryInput("opinions must be +/-1 valued")
    if method not in COMBINE_METHODS:
        raise ConfigError(f"unknown combination method {method!r}")
    config = config if config is not None else SolverConfig()
    scores = opinions.mean(axis=1)
    if method == "avg":
        return np.where(scores >= 0.0, 1.0, -1.0)
    if shift is None:
        raise ConfigError(f"method {method!r} needs a graph shift")
    if shift.n != opinions.shape[0]:
        raise DimensionMismatch(
            f"shift has {shift.n} nodes, opinions have {opinions.shape[0]} rows")
    full = np.ones(opinions.shape[0], dtype=bool)
    if method == "gtvr-denoise":
        smoothed = gtvr(scores, full, shift, config.alpha).x
        return np.where(smoothed >= 0.0, 1.0, -1.0)
    result = gmcr(opinions, np.ones(opinions.shape, dtype=bool), shift, config)
    fused = np.asarray(result.x, dtype=float).mean(axis=1)
    return np.where(fused >= 0.0, 1.0, -1.0)


def solve_recovery(method: str, observed: np.ndarray, mask: np.ndarray | None,
                   shift: GraphShift, config: SolverConfig | None = None,
                   eta_smooth: float | None = None) -> RecoveryResult:
    """Dispatch one recovery method by name against uniform array handling.

    Vector-only methods accept an (n, 1) matrix and squeeze it; matrix
    methods lift a vector to a single column.  The anomaly methods ignore the
    mask.  ``config.gamma`` doubles as the sparsity weight for ``anomaly``.
    """
    config = config if config is not None else SolverConfig()
    observed = np.asarray(observed, dtype=float)
    if method in DETECT_METHODS:
        t = observed[:, 0] if observed.ndim == 2 and observed.shape[1] == 1 else observed
        if method == "anomaly":
            return anomaly_detect(t, shift, config.gamma, config)
        if eta_smooth is None:
            raise ConfigError("anomaly-constrained needs an eta_smooth value")
        return anomaly_detect_constrained(t, shift, eta_smooth, config)
    if mask is None:
        raise ConfigError(f"method {method!r} needs an accessibility mask")
    mask = np.asarray(mask, dtype=bool)
    if observed.shape != mask.shape:
        raise DimensionMismatch(
            f"observed shape {observed.shape} vs mask shape {mask.shape}")
    if method in VECTOR_METHODS:
        if observed.ndim == 2:
            if observed.shape[1] != 1:
                raise ConfigError(
                    f"method {method!r} handles single signals, got shape {observed.shape}")
            observed = observed[:, 0]
            mask = mask[:, 0]
        if method == "gtvm":
            return gtvm(observed, mask, shift)
        if method == "gtvr":
            return gtvr(observed, mask, shift, config.alpha)
        if method == "rgtvr":
            return rgtvr(observed, mask, shift, config)
        return laplacian_baseline(observed, mask, laplacian_from_shift(shift),
                                  config.alpha)
    if method in MATRIX_METHODS:
        if observed.ndim == 1:
            observed = observed[:, None]
            mask = mask[:, None]
        if method == "gmcm":
            return gmcm(observed, mask, shift, config)
        if method == "gmcr":
            return gmcr(observed, mask, shift, config)
        return gsr_admm(observed, mask, shift, config)
    raise ConfigError(f"unknown recovery method {method!r}")


@dataclass(frozen=True)
class SolverEntry:
    """One method to run inside an experiment, with its parameter policy."""

    name: str
    method: str
    config: SolverConfig
    grid: tuple[SolverConfig, ...] = ()
    eta_smooth: float | None = None

    @property
    def selection_mode(self) -> str:
        return "grid" if self.grid else "fixed"


@dataclass(frozen=True)
class ExperimentSpec:
    """Validated experiment description.

    ``raw`` keeps the original dict for echoing into the report; everything
    else is normalized.  ``ratios`` are accessible-entry fractions and
    collapse to a single dummy value for the detect and combine tasks.
    """

    task: str
    seed: int
    trials: int
    ratios: tuple[float, ...]
    solvers: tuple[SolverEntry, ...]
    graph: dict | None
    signal: dict
    corrupt: dict | None
    score: str
    eval_on: str
    oracle_select: bool
    raw: dict = field(repr=False, default_factory=dict)

    @staticmethod
    def from_dict(data: dict) -> "ExperimentSpec":
        return _spec_from_dict(data)


_TASKS = ("inpaint", "robust-inpaint", "complete", "detect", "combine")
_TASK_METHODS = {
    "inpaint": VECTOR_METHODS + MATRIX_METHODS,
    "robust-inpaint": VECTOR_METHODS + MATRIX_METHODS,
    "complete": VECTOR_METHODS + MATRIX_METHODS,
    "detect": DETECT_METHODS,
    "combine": COMBINE_METHODS,
}
_SPEC_KEYS = {"task", "seed", "trials", "ratios", "solvers", "graph", "signal",
              "corrupt", "score", "eval_on", "oracle_select"}


def _config_from(data: dict | None, where: str) -> SolverConfig:
    if data is None:
        return SolverConfig()
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a config object, got {type(data).__name__}")
    return solver_config_from_dict(data)


def _solver_entry(data: dict, index: int, task: str) -> SolverEntry:
    if not isinstance(data, dict):
        raise ConfigError(f"solvers[{index}]: expected an object")
    allowed = {"name", "method", "config", "grid", "eta_smooth"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"solvers[{index}]: unknown keys {sorted(unknown)}")
    method = data.get("method")
    if method not in _TASK_METHODS[task]:
        raise ConfigError(
            f"solvers[{index}]: method {method!r} is not valid for task {task!r} "
            f"(choose from {list(_TASK_METHODS[task])})")
    name = data.get("name", method)
    if not isinstance(name, str) or not name:
        raise ConfigError(f"solvers[{index}]: name must be a nonempty string")
    grid_raw = data.get("grid", [])
    if not isinstance(grid_raw, list):
        raise ConfigError(f"solvers[{index}]: grid must be a list of config objects")
    grid = tuple(_config_from(g, f"solvers[{index}].grid[{j}]")
                 for j, g in enumerate(grid_raw))
    eta_smooth = data.get("eta_smooth")
    if eta_smooth is not None:
        eta_smooth = float(eta_smooth)
        if eta_smooth < 0:
            raise ConfigError(f"solvers[{index}]: eta_smooth must be nonnegative")
    if method == "anomaly-constrained" and eta_smooth is None:
        raise ConfigError(f"solvers[{index}]: anomaly-constrained needs eta_smooth")
    return SolverEntry(
        name=name,
        method=method,
        config=_config_from(data.get("config"), f"solvers[{index}].config"),
        grid=grid,
        eta_smooth=eta_smooth,
    )


def _spec_from_dict(data: dict) -> ExperimentSpec:
    if not isinstance(data, dict):
        raise ConfigError("experiment description must be an object")
    unknown = set(data) - _SPEC_KEYS
    if unknown:
        raise ConfigError(f"unknown experiment keys {sorted(unknown)}")
    task = data.get("task")
    if task == "combine-opinions":
        task = "combine"
    if task not in _TASKS:
        raise ConfigError(f"task must be one of {list(_TASKS)}, got {task!r}")
    try:
        seed = int(data.get("seed", 0))
        trials = int(data.get("trials", 1))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"seed and trials must be integers: {exc}") from None
    if seed < 0:
        raise ConfigError(f"seed must be nonnegative, got {seed}")
    if trials < 1:
        raise ConfigError(f"trials must be positive, got {trials}")
    ratios_raw = data.get("ratios")
    if task in ("detect", "combine"):
        if ratios_raw not in (None, [1.0]):
            raise ConfigError(f"task {task!r} does not sweep accessibility ratios")
        ratios = (1.0,)
    else:
        if ratios_raw is None:
            ratios_raw = [0.5]
        if not isinstance(ratios_raw, list) or not ratios_raw:
            raise ConfigError("ratios must be a nonempty list of fractions")
        ratios = tuple(float(r) for r in ratios_raw)
        for r in ratios:
            if not 0.0 < r <= 1.0:
                raise ConfigError(f"ratios must lie in (0, 1], got {r}")
    solvers_raw = data.get("solvers")
    if not isinstance(solvers_raw, list) or not solvers_raw:
        raise ConfigError("solvers must be a nonempty list")
    solvers = tuple(_solver_entry(s, i, task) for i, s in enumerate(solvers_raw))
    names = [s.name for s in solvers]
    if len(set(names)) != len(names):
        raise ConfigError(f"solver names must be unique, got {names}")
    graph = data.get("graph")
    if graph is not None and not isinstance(graph, dict):
        raise ConfigError("graph must be an object")
    signal = data.get("signal")
    if not isinstance(signal, dict):
        raise ConfigError("signal must be an object")
    corrupt = data.get("corrupt")
    if corrupt is not None:
        if task in ("detect", "combine"):
            raise ConfigError(f"task {task!r} does not take a corrupt block")
        if not isinstance(corrupt, dict):
            raise ConfigError("corrupt must be an object")
        unknown = set(corrupt) - {"fraction", "mode"}
        if unknown:
            raise ConfigError(f"corrupt: unknown keys {sorted(unknown)}")
        fraction = float(corrupt.get("fraction", 0.0))
        mode = corrupt.get("mode", "regression")
        if not 0.0 <= fraction <= 1.0:
            raise ConfigError(f"corrupt.fraction must lie in [0, 1], got {fraction}")
        if mode not in ("classification", "regression"):
            raise ConfigError("corrupt.mode must be classification or regression")
        corrupt = {"fraction": fraction, "mode": mode}
    score = data.get("score", "regression")
    if score not in ("regression", "classification"):
        raise ConfigError(f"score must be regression or classification, got {score!r}")
    eval_on = data.get("eval_on", "hidden" if task in ("inpaint", "robust-inpaint", "complete") else "all")
    if eval_on not in ("hidden", "all"):
        raise ConfigError(f"eval_on must be hidden or all, got {eval_on!r}")
    oracle_select = bool(data.get("oracle_select", False))
    if task in ("detect", "combine"):
        for entry in solvers:
            if entry.grid and not oracle_select:
                raise ConfigError(
                    f"task {task!r} has no holdout to tune on; "
                    f"set oracle_select to search a grid")
    return ExperimentSpec(
        task=task, seed=seed, trials=trials, ratios=ratios, solvers=solvers,
        graph=graph, signal=signal, corrupt=corrupt, score=score,
        eval_on=eval_on, oracle_select=oracle_select, raw=dict(data),
    )


def _resolve_graph(spec: ExperimentSpec) -> GraphShift:
    graph = spec.graph
    if graph is None:
        raise ConfigError(f"task {spec.task!r} needs a graph block")
    kind = graph.get("kind")
    if kind == "cycle":
        n = int(graph.get("n", 0))
        if n < 2:
            raise ConfigError(f"cycle graph needs n >= 2, got {n}")
        return normalize_shift(cycle_shift(n))
    if kind == "knn":
        allowed = {"kind", "n", "dim", "k", "symmetrize", "normalization"}
        unknown = set(graph) - allowed
        if unknown:
            raise ConfigError(f"graph: unknown keys {sorted(unknown)}")
        n = int(graph.get("n", 0))
        dim = int(graph.get("dim", 2))
        if n < 2 or dim < 1:
            raise ConfigError("knn graph needs n >= 2 and dim >= 1")
        build = GraphBuildSpec(
            k=int(graph.get("k", 8)),
            symmetrize=bool(graph.get("symmetrize", False)),
            normalization=graph.get("normalization", "row"),
        )
        features = random_features(n, dim, stream_rng(spec.seed, 5).integers(2**31))
        return build_knn_graph(features, build)
    if kind == "file":
        path = graph.get("path")
        if not path:
            raise ConfigError("graph kind 'file' needs a path")
        shift = load_graph(path)
        return shift if shift.normalized else normalize_shift(shift)
    raise ConfigError(f"graph.kind must be cycle, knn, or file, got {kind!r}")


def _synth_spec(spec: ExperimentSpec, n: int) -> SyntheticSpec:
    block = spec.signal.get("synthetic")
    if not isinstance(block, dict):
        raise ConfigError(f"task {spec.task!r} needs signal.synthetic")
    allowed = {"l", "recipe", "rank", "diffusion_steps", "noise_sigma",
               "outliers_per_column", "outlier_lo", "outlier_hi"}
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"signal.synthetic: unknown keys {sorted(unknown)}")
    try:
        return SyntheticSpec(n=n, **block)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"signal.synthetic: {exc}") from None


def _oracle_pick(entry: SolverEntry, solve: Callable[[SolverConfig], RecoveryResult],
                 score_of: Callable[[RecoveryResult], MetricReport],
                 classification: bool) -> tuple[SolverConfig, RecoveryResult, MetricReport]:
    """Search the grid with access to ground truth; used for ceiling studies."""
    best = None
    for config in entry.grid:
        result = solve(config)
        report = score_of(result)
        key = -report.acc if classification and report.acc is not None else report.mse
        if not np.isfinite(key):
            key = np.inf
        if best is None or key < best[0]:
            best = (key, config, result, report)
    assert best is not None
    return best[1], best[2], best[3]


def _format_value(value: float | None) -> str:
    if value is None:
        return ""
    return "%.17g" % float(value)


def _trial_row(task: str, method: str, ratio: float, trial: int, seed: int,
               report: MetricReport, result: RecoveryResult) -> str:
    fields = [
        task,
        method,
        "%.17g" % ratio,
        str(trial),
        str(seed),
        _format_value(report.acc),
        _format_value(report.mse),
        _format_value(report.rmse),
        _format_value(report.mae),
        str(result.iterations),
        "true" if result.converged else "false",
    ]
    return ",".join(fields)


def _aggregate(rows: list[dict]) -> list[dict]:
    groups: dict[tuple[str, float], list[dict]] = {}
    for row in rows:
        groups.setdefault((row["method"], row["ratio"]), []).append(row)
    out = []
    for (method, ratio), members in sorted(groups.items()):
        accs = [m["acc"] for m in members if m["acc"] is not None]
        out.append({
            "method": method,
            "ratio": ratio,
            "trials": len(members),
            "converged": sum(1 for m in members if m["converged"]),
            "mean_mse": float(np.mean([m["mse"] for m in members])),
            "mean_rmse": float(np.mean([m["rmse"] for m in members])),
            "mean_mae": float(np.mean([m["mae"] for m in members])),
            "mean_acc": float(np.mean(accs)) if accs else None,
            "mean_iterations": float(np.mean([m["iterations"] for m in members])),
        })
    return out


def _versions() -> dict:
    import scipy

    try:
        from importlib.metadata import version

        own = version("gsrec")
    except Exception:
        own = "unknown"
    return {
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "gsrec": own,
    }


def run_experiment(spec: ExperimentSpec, out_dir: str | Path) -> dict:
    """Execute every (ratio, trial, method) cell and write the two outputs.

    Returns the report dict.  The trial grid is fully determined by the seed:
    masks, corruption, and synthetic draws all come from per-cell seeded
    streams, and methods never share random state.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    per_method_ms = {entry.name: 0.0 for entry in spec.solvers}
    rows: list[dict] = []
    lines = [TRIALS_HEADER]

    if spec.task == "combine":
        _run_combine(spec, rows, lines, per_method_ms)
    elif spec.task == "detect":
        _run_detect(spec, rows, lines, per_method_ms)
    else:
        _run_recovery(spec, rows, lines, per_method_ms)

    total_ms = (time.perf_counter() - started) * 1000.0
    trials_path = out_dir / "trials.csv"
    trials_path.write_text("\n".join(lines) + "\n", newline="\n")
    selection = {}
    for entry in spec.solvers:
        if entry.grid:
            selection[entry.name] = "oracle" if spec.oracle_select else "holdout"
        else:
            selection[entry.name] = "fixed"
    report = {
        "spec": spec.raw,
        "task": spec.task,
        "seed": spec.seed,
        "versions": _versions(),
        "selection": selection,
        "aggregates": _aggregate(rows),
        "all_converged": all(row["converged"] for row in rows),
        "rows": len(rows),
        "timing_ms": {"total": total_ms, "per_method": per_method_ms},
        "trials_csv": trials_path.name,
    }
    report_path = out_dir / "report.json"
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n",
                           newline="\n")
    return report


def _record(rows: list[dict], lines: list[str], spec: ExperimentSpec,
            entry: SolverEntry, ratio: float, trial: int,
            report: MetricReport, result: RecoveryResult) -> None:
    rows.append({
        "method": entry.name,
        "ratio": ratio,
        "trial": trial,
        "acc": report.acc,
        "mse": report.mse,
        "rmse": report.rmse,
        "mae": report.mae,
        "iterations": result.iterations,
        "converged": result.converged,
    })
    lines.append(_trial_row(spec.task, entry.name, ratio, trial, spec.seed,
                            report, result))


def _load_fixed_signal(spec: ExperimentSpec):
    """Bundle-backed signal: one fixed instance shared by every trial."""
    bundle_dir = spec.signal.get("bundle")
    if not isinstance(bundle_dir, str) or not bundle_dir:
        raise ConfigError("signal.bundle must be a directory path")
    shift, instance, _ = load_bundle(bundle_dir)
    return shift, instance


def _run_recovery(spec: ExperimentSpec, rows: list[dict], lines: list[str],
                  per_method_ms: dict) -> None:
    fixed_instance = None
    if "bundle" in spec.signal:
        shift, fixed_instance = _load_fixed_signal(spec)
    else:
        shift = _resolve_graph(spec)
    vector_task = spec.task in ("inpaint", "robust-inpaint")
    for ratio_index, ratio in enumerate(spec.ratios):
        for trial in range(spec.trials):
            if fixed_instance is not None:
                instance = fixed_instance
            else:
                sspec = _synth_spec(spec, shift.n)
                instance = synth_instance(shift, sspec, spec.seed,
                                          ratio_index, trial)
            truth = instance.x0
            observed = instance.observed
            if vector_task:
                if truth.shape[1] != 1:
                    raise ConfigError(
                        f"task {spec.task!r} needs a single-column signal, "
                        f"got {truth.shape[1]} columns")
                truth = truth[:, 0]
                observed = observed[:, 0]
            mask = sample_mask(observed.shape, ratio, spec.seed,
                               ratio_index, trial)
            if spec.corrupt is not None and spec.corrupt["fraction"] > 0:
                observed, _ = corrupt_labels(observed, mask,
                                             spec.corrupt["fraction"],
                                             spec.corrupt["mode"], spec.seed,
                                             ratio_index, trial)
            eval_mask = ~mask if spec.eval_on == "hidden" else np.ones_like(mask)
            if not np.any(eval_mask):
                raise EmptyMask(
                    "nothing to evaluate: mask covers every entry and "
                    "eval_on is 'hidden'")
            for entry in spec.solvers:
                tick = time.perf_counter()
                if entry.grid:
                    if spec.oracle_select:
                        def solve(config: SolverConfig, _e=entry) -> RecoveryResult:
                            return solve_recovery(_e.method, observed, mask,
                                                  shift, config, _e.eta_smooth)

                        def score_of(result: RecoveryResult) -> MetricReport:
                            est = np.asarray(result.x, dtype=float)
                            return evaluate(truth[eval_mask], est[eval_mask],
                                            spec.score)

                        _, result, report = _oracle_pick(
                            entry, solve, score_of,
                            spec.score == "classification")
                    else:
                        choice = cross_validate(entry.method, observed, mask,
                                                shift, entry.grid, spec.seed,
                                                ratio_index, trial)
                        result = solve_recovery(entry.method, observed, mask,
                                                shift, choice.config,
                                                entry.eta_smooth)
                        est = np.asarray(result.x, dtype=float)
                        report = evaluate(truth[eval_mask], est[eval_mask],
                                          spec.score)
                else:
                    result = solve_recovery(entry.method, observed, mask,
                                            shift, entry.config,
                                            entry.eta_smooth)
                    est = np.asarray(result.x, dtype=float)
                    report = evaluate(truth[eval_mask], est[eval_mask],
                                      spec.score)
                per_method_ms[entry.name] += (time.perf_counter() - tick) * 1000.0
                _record(rows, lines, spec, entry, ratio, trial, report, result)


def _run_detect(spec: ExperimentSpec, rows: list[dict], lines: list[str],
                per_method_ms: dict) -> None:
    shift = _resolve_graph(spec)
    for trial in range(spec.trials):
        sspec = _synth_spec(spec, shift.n)
        if sspec.l != 1:
            raise ConfigError("detect runs on single-column signals")
        if sspec.outliers_per_column < 1:
            raise ConfigError(
                "detect needs signal.synthetic.outliers_per_column >= 1")
        instance = synth_instance(shift, sspec, spec.seed, trial)
        t = instance.observed[:, 0]
        clean = instance.x0[:, 0] + instance.noise[:, 0]
        true_support = instance.outliers[:, 0] != 0.0
        for entry in spec.solvers:
            tick = time.perf_counter()

            def solve(config: SolverConfig, _e=entry) -> RecoveryResult:
                return solve_recovery(_e.method, t, None, shift, config,
                                      _e.eta_smooth)

            def score_of(result: RecoveryResult) -> MetricReport:
                est = np.asarray(result.x, dtype=float)
                found = np.asarray(result.outliers, dtype=float) != 0.0
                base = evaluate(clean, est, "regression")
                support_acc = float(np.mean(found == true_support))
                return MetricReport(mse=base.mse, rmse=base.rmse,
                                    mae=base.mae, count=base.count,
                                    acc=support_acc)

            if entry.grid:
                _, result, report = _oracle_pick(entry, solve, score_of,
                                                 classification=True)
            else:
                result = solve(entry.config)
                report = score_of(result)
            per_method_ms[entry.name] += (time.perf_counter() - tick) * 1000.0
            _record(rows, lines, spec, entry, 1.0, trial, report, result)


def _run_combine(spec: ExperimentSpec, rows: list[dict], lines: list[str],
                 per_method_ms: dict) -> None:
    block = spec.signal.get("opinions")
    if not isinstance(block, dict):
        raise ConfigError("task 'combine' needs signal.opinions")
    allowed = {"n", "experts", "easy_acc", "hard_acc", "hard_fraction", "k"}
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"signal.opinions: unknown keys {sorted(unknown)}")
    try:
        n = int(block.get("n", 200))
        experts = int(block.get("experts", 20))
        easy_acc = float(block.get("easy_acc", 0.9))
        hard_acc = float(block.get("hard_acc", 0.3))
        hard_fraction = float(block.get("hard_fraction", 0.25))
        k = int(block.get("k", 8))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"signal.opinions: {exc}") from None
    for trial in range(spec.trials):
        shift, truth, opinions, _hard = synth_opinion_instance(
            n, experts, easy_acc, hard_acc, hard_fraction, k, spec.seed, trial)
        for entry in spec.solvers:
            tick = time.perf_counter()

            def solve(config: SolverConfig, _e=entry) -> RecoveryResult:
                labels = combine_opinions(opinions, _e.method, shift, config)
                return RecoveryResult(x=labels,
                                      objective_trace=np.asarray([0.0]),
                                      iterations=1, converged=True,
                                      meta={"solver": _e.method})

            def score_of(result: RecoveryResult) -> MetricReport:
                return evaluate(truth, np.asarray(result.x), "classification")

            if entry.grid:
                _, result, report = _oracle_pick(entry, solve, score_of,
                                                 classification=True)
            else:
                result = solve(entry.config)
                report = score_of(result)
            per_method_ms[entry.name] += (time.perf_counter() - tick) * 1000.0
            _record(rows, lines, spec, entry, 1.0, trial, report, result)
