"""Seed-sweep evaluation: recall/accuracy tables and the F-trend check.

Protocol for every (window length, seed) cell: generate a labeled series,
difference it to stationarity, train on the leading fraction, tile the rest
with non-overlapping windows, score every ordered channel pair per window,
and call a window detected when any pair fires. Recall counts detected
among labeled-causal windows; accuracy counts windows where the detection
flag matches the label. Means and sample standard deviations aggregate over
seeds. The same plumbing feeds the empirical check that P(F > 1) on causal
windows grows with window length.
"""

from __future__ import annotations

import csv
import json
import time
import warnings
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed

from .indexing import IndexingConfig, run_dwgc
from .nar import NarConfig, derive_model_seed, fit
from .series import SplitSpec, WindowSpec, difference_to_stationary, windows
from .synth import ArSimConfig, NarSimConfig, gen_ar, gen_nar, label_windows
from .wgc import WindowResult, scan

__all__ = [
    "EvalError",
    "EvalReport",
    "SeedOutcome",
    "Theorem1Result",
    "recall",
    "accuracy",
    "sweep",
    "theorem1_check",
    "theorem1_nondecreasing_within_se",
    "theorem1_to_json",
    "report_to_dict",
    "report_to_json",
    "report_to_text",
    "scatter_to_csv",
]

# Ordered (target, source) pairs among the two driven channels. The gate
# channel of the nonlinear simulator is deterministic and excluded.
PAIRS = [(0, 1), (1, 0)]

METHODS = ("naive_dwgc", "dwgc")


class EvalError(ValueError):
    """Invalid evaluation request."""


def _detected_by_window(results: list[WindowResult]) -> dict[tuple[int, int], bool]:
    flags: dict[tuple[int, int], bool] = {}
    for r in results:
        flags[r.window] = flags.get(r.window, False) or r.causal
    return flags


def recall(results: list[WindowResult], labels) -> float | None:
    """Among labeled-causal windows, the detected fraction; None if there are none."""
    flags = _detected_by_window(results)
    label_map = dict(zip(labels.windows, labels.causal_any))
    missing = [w for w in flags if w not in label_map]
    if missing:
        raise EvalError(f"labels missing for windows {missing[:3]}")
    causal = [w for w in flags if label_map[w]]
    if not causal:
        return None
    return sum(1 for w in causal if flags[w]) / len(causal)


def accuracy(results: list[WindowResult], labels) -> float | None:
    """Fraction of all windows whose detection flag equals the label; None on zero windows."""
    flags = _detected_by_window(results)
    label_map = dict(zip(labels.windows, labels.causal_any))
    missing = [w for w in flags if w not in label_map]
    if missing:
        raise EvalError(f"labels missing for windows {missing[:3]}")
    if not flags:
        return None
    return sum(1 for w, d in flags.items() if d == label_map[w]) / len(flags)


@dataclass(frozen=True)
class SeedOutcome:
    """One (window length, seed) cell."""

    k: int
    seed: int
    recall: float | None
    accuracy: float | None
    n_windows: int
    n_causal_windows: int


@dataclass
class EvalReport:
    """Aggregated sweep results; means are None where undefined on all seeds."""

    method: str
    dataset: str
    window_lengths: list[int]
    seeds: list[int]
    recall_mean: dict[int, float | None]
    recall_std: dict[int, float | None]
    accuracy_mean: dict[int, float | None]
    accuracy_std: dict[int, float | None]
    runtime: float
    failures: list[dict]
    complete: bool
    outcomes: list[SeedOutcome] = field(repr=False, default_factory=list)


def _dataset_name(config) -> str:
    if isinstance(config, ArSimConfig):
        return "ar_sim"
    if isinstance(config, NarSimConfig):
        return "nar_sim"
    raise EvalError(f"unsupported dataset config {type(config).__name__}")


def _prepare_case(dataset_config, seed: int, lag_order: int, train_fraction: float):
    cfg = replace(dataset_config, seed=seed)
    if isinstance(cfg, ArSimConfig):
        series, truth = gen_ar(cfg)
    else:
        series, truth = gen_nar(cfg)
    stat = difference_to_stationary(series, max_order=2)
    ntr = SplitSpec(train_fraction).train_size(stat.series.length, lag_order)
    return stat, truth, ntr


def _fit_case_models(series, ntr: int, nar_config: NarConfig, data_seed: int):
    self_models = {}
    cause_models = {}
    for tgt in sorted({t for t, _ in PAIRS}):
        cfg = replace(nar_config, seed=derive_model_seed(data_seed, tgt, False))
        self_models[tgt] = fit(series, tgt, None, (0, ntr), cfg)
    for tgt, src in sorted(PAIRS):
        cfg = replace(nar_config, seed=derive_model_seed(data_seed, tgt, True))
        cause_models[(tgt, src)] = fit(series, tgt, src, (0, ntr), cfg)
    return self_models, cause_models


def _sweep_seed(
    dataset_config,
    method: str,
    window_lengths: tuple[int, ...],
    seed: int,
    nar_config: NarConfig,
    indexing_config: IndexingConfig,
    epsilon: float,
    train_fraction: float,
) -> tuple[list[SeedOutcome], list[dict]]:
    """All window lengths for one seed. Returns (outcomes, failures)."""
    outcomes: list[SeedOutcome] = []
    failures: list[dict] = []
    try:
        stat, truth, ntr = _prepare_case(
            dataset_config, seed, nar_config.lag_order, train_fraction
        )
        if method == "naive_dwgc":
            self_models, cause_models = _fit_case_models(
                stat.series, ntr, nar_config, seed
            )
    except Exception as exc:  # noqa: BLE001 - recorded, not swallowed silently
        return [], [{"seed": seed, "k": None, "error": str(exc)}]

    for k in window_lengths:
        try:
            spec = WindowSpec(k=k, origin=ntr)
            window_list = windows(stat.series.length, spec)
            labels = label_windows(truth, window_list, time_shift=stat.shift)
            if method == "naive_dwgc":
                results = scan(
                    stat.series, PAIRS, spec, epsilon, self_models, cause_models
                )
            else:
                run = run_dwgc(
                    stat.series,
                    PAIRS,
                    spec,
                    replace(nar_config, seed=seed),
                    indexing_config,
                    epsilon,
                    train_size=ntr,
                )
                results = run.window_results
            outcomes.append(
                SeedOutcome(
                    k=k,
                    seed=seed,
                    recall=recall(results, labels),
                    accuracy=accuracy(results, labels),
                    n_windows=len(window_list),
                    n_causal_windows=sum(labels.causal_any),
                )
            )
        except Exception as exc:  # noqa: BLE001
            failures.append({"seed": seed, "k": k, "error": str(exc)})
    return outcomes, failures


def _mean_std(values: list[float]) -> tuple[float | None, float | None]:
    if not values:
        return None, None
    mean = float(np.mean(values))
    std = float(np.std(values, ddof=1)) if len(values) >= 2 else None
    return mean, std


def sweep(
    dataset_config,
    method: str = "naive_dwgc",
    window_lengths: tuple[int, ...] = (10, 20, 30, 100),
    n_seeds: int = 20,
    nar_config: NarConfig | None = None,
    indexing_config: IndexingConfig | None = None,
    epsilon: float = 1.0,
    train_fraction: float = 0.3,
    jobs: int = 1,
) -> EvalReport:
    """Mean/std recall and accuracy over seeds 0..n_seeds-1 per window length.

    Deterministic given the seed list: per-model seeds derive from the data
    seed, so reruns reproduce every number exactly. A failed cell is
    recorded under failures (with a warning) and excluded from aggregation;
    ``complete`` is False in that case.
    """
    if method not in METHODS:
        raise EvalError(f"method must be one of {METHODS}; got {method!r}")
    if n_seeds < 1:
        raise EvalError("n_seeds must be >= 1")
    if not window_lengths:
        raise EvalError("window_lengths must not be empty")
    nar_config = nar_config or NarConfig()
    indexing_config = indexing_config or IndexingConfig()
    seeds = list(range(n_seeds))
    lengths = tuple(int(k) for k in window_lengths)

    t0 = time.monotonic()
    per_seed = Parallel(n_jobs=jobs)(
        delayed(_sweep_seed)(
            dataset_config,
            method,
            lengths,
            seed,
            nar_config,
            indexing_config,
            epsilon,
            train_fraction,
        )
        for seed in seeds
    )
    runtime = time.monotonic() - t0

    outcomes: list[SeedOutcome] = []
    failures: list[dict] = []
    for outs, fails in per_seed:
        outcomes.extend(outs)
        failures.extend(fails)
    for failure in failures:
        warnings.warn(
            f"seed {failure['seed']} k={failure['k']} failed: {failure['error']}",
            stacklevel=2,
        )

    recall_mean: dict[int, float | None] = {}
    recall_std: dict[int, float | None] = {}
    accuracy_mean: dict[int, float | None] = {}
    accuracy_std: dict[int, float | None] = {}
    for k in lengths:
        rec_vals = [o.recall for o in outcomes if o.k == k and o.recall is not None]
        acc_vals = [o.accuracy for o in outcomes if o.k == k and o.accuracy is not None]
        recall_mean[k], recall_std[k] = _mean_std(rec_vals)
        accuracy_mean[k], accuracy_std[k] = _mean_std(acc_vals)

    return EvalReport(
        method=method,
        dataset=_dataset_name(dataset_config),
        window_lengths=list(lengths),
        seeds=seeds,
        recall_mean=recall_mean,
        recall_std=recall_std,
        accuracy_mean=accuracy_mean,
        accuracy_std=accuracy_std,
        runtime=runtime,
        failures=failures,
        complete=not failures,
        outcomes=outcomes,
    )


def report_to_dict(report: EvalReport) -> dict:
    """JSON-ready document. Runtime is dropped so reruns serialize identically."""
    return {
        "method": report.method,
        "dataset": report.dataset,
        "window_lengths": report.window_lengths,
        "seeds": report.seeds,
        "recall_mean": {str(k): v for k, v in report.recall_mean.items()},
        "recall_std": {str(k): v for k, v in report.recall_std.items()},
        "accuracy_mean": {str(k): v for k, v in report.accuracy_mean.items()},
        "accuracy_std": {str(k): v for k, v in report.accuracy_std.items()},
        "failures": report.failures,
        "complete": report.complete,
        "notes": (
            "accuracy = share of all windows whose any-direction detection flag "
            "matches the any-direction impulse label; recall restricts to "
            "labeled-causal windows"
        ),
    }


def report_to_json(report: EvalReport, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report_to_dict(report), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cell(mean: float | None, std: float | None) -> str:
    if mean is None:
        return "n/a"
    if std is None:
        return f"{mean:.3f}"
    return f"{mean:.3f} ({std:.3f})"


def report_to_text(report: EvalReport) -> str:
    lines = [
        f"method: {report.method}   dataset: {report.dataset}   seeds: {len(report.seeds)}",
        f"{'k':>6}  {'recall':>16}  {'accuracy':>16}",
    ]
    for k in report.window_lengths:
        lines.append(
            f"{k:>6}  {_cell(report.recall_mean[k], report.recall_std[k]):>16}  "
            f"{_cell(report.accuracy_mean[k], report.accuracy_std[k]):>16}"
        )
    if not report.complete:
        lines.append(f"warning: {len(report.failures)} cell(s) failed and were excluded")
    return "\n".join(lines)


@dataclass
class Theorem1Result:
    """Empirical P(F > 1) on labeled-causal windows per window length."""

    window_lengths: list[int]
    seeds: list[int]
    p_hat: dict[int, float | None]
    n_causal: dict[int, int]
    n_hits: dict[int, int]
    scatter: list[tuple[int, int, float, bool]] = field(repr=False, default_factory=list)


def _theorem1_seed(
    ar_config: ArSimConfig,
    window_lengths: tuple[int, ...],
    seed: int,
    nar_config: NarConfig,
    epsilon: float,
    train_fraction: float,
) -> tuple[list[tuple[int, int, float, bool]], dict[int, tuple[int, int]]]:
    stat, truth, ntr = _prepare_case(ar_config, seed, nar_config.lag_order, train_fraction)
    self_models, cause_models = _fit_case_models(stat.series, ntr, nar_config, seed)
    rows: list[tuple[int, int, float, bool]] = []
    counts: dict[int, tuple[int, int]] = {}
    for k in window_lengths:
        spec = WindowSpec(k=k, origin=ntr)
        window_list = windows(stat.series.length, spec)
        labels = label_windows(truth, window_list, time_shift=stat.shift)
        results = scan(stat.series, PAIRS, spec, epsilon, self_models, cause_models)
        f_max: dict[tuple[int, int], float] = {}
        for r in results:
            f_max[r.window] = max(f_max.get(r.window, -np.inf), r.f_statistic)
        causal = hits = 0
        for window, labeled in zip(labels.windows, labels.causal_any):
            f_val = f_max[window]
            rows.append((k, window[0], f_val, bool(labeled)))
            if labeled:
                causal += 1
                if f_val > 1.0:
                    hits += 1
        counts[k] = (causal, hits)
    return rows, counts


def theorem1_check(
    ar_config: ArSimConfig,
    window_lengths: tuple[int, ...] = (10, 20, 30, 100),
    n_seeds: int = 20,
    nar_config: NarConfig | None = None,
    epsilon: float = 1.0,
    train_fraction: float = 0.3,
    jobs: int = 1,
) -> Theorem1Result:
    """For each window length, the detected share of labeled-causal windows.

    Every (k, seed, window) triple contributes one scatter row with the
    largest F over the two directions; P-hat restricts to the
    labeled-causal rows. With impulse_prob = 0 no window is labeled and
    p_hat entries are None (the scatter is still emitted).
    """
    if n_seeds < 1:
        raise EvalError("n_seeds must be >= 1")
    nar_config = nar_config or NarConfig()
    lengths = tuple(int(k) for k in window_lengths)
    seeds = list(range(n_seeds))
    per_seed = Parallel(n_jobs=jobs)(
        delayed(_theorem1_seed)(
            ar_config, lengths, seed, nar_config, epsilon, train_fraction
        )
        for seed in seeds
    )

    scatter: list[tuple[int, int, float, bool]] = []
    n_causal = {k: 0 for k in lengths}
    n_hits = {k: 0 for k in lengths}
    for rows, counts in per_seed:
        scatter.extend(rows)
        for k, (causal, hits) in counts.items():
            n_causal[k] += causal
            n_hits[k] += hits
    p_hat = {
        k: (n_hits[k] / n_causal[k] if n_causal[k] else None) for k in lengths
    }
    return Theorem1Result(
        window_lengths=list(lengths),
        seeds=seeds,
        p_hat=p_hat,
        n_causal=n_causal,
        n_hits=n_hits,
        scatter=scatter,
    )


def theorem1_nondecreasing_within_se(result: Theorem1Result) -> bool:
    """True when each adjacent step down is within one pooled binomial SE."""
    ks = [k for k in result.window_lengths if result.p_hat[k] is not None]
    for a, b in zip(ks, ks[1:]):
        pa, pb = result.p_hat[a], result.p_hat[b]
        na, nb = result.n_causal[a], result.n_causal[b]
        pooled = (result.n_hits[a] + result.n_hits[b]) / (na + nb)
        se = float(np.sqrt(max(pooled * (1 - pooled), 0.0) * (1 / na + 1 / nb)))
        if pb < pa - se:
            return False
    return True


def theorem1_to_json(result: Theorem1Result, path: str) -> None:
    doc = {
        "window_lengths": result.window_lengths,
        "seeds": result.seeds,
        "p_hat": {str(k): result.p_hat[k] for k in result.window_lengths},
        "n_causal": {str(k): result.n_causal[k] for k in result.window_lengths},
        "n_hits": {str(k): result.n_hits[k] for k in result.window_lengths},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def scatter_to_csv(result: Theorem1Result, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "window_start", "f_statistic", "labeled_causal"])
        for k, start, f_val, labeled in result.scatter:
            writer.writerow([k, start, f"{f_val:.17g}", int(labeled)])
