"""Naive dynamic window-level Granger causality: windowed MSEs and the F ratio.

For each (window, ordered channel pair) the F-statistic is L1/L2, where L1 is
the window MSE of the self-only forecaster for the target channel and L2 the
window MSE of the forecaster that also sees the candidate cause channel. A
pair is causal on a window when F exceeds the threshold epsilon.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, asdict

import numpy as np

from .nar import NarModel, predict_window
from .series import MultiChannelSeries, WindowSpec, windows

__all__ = [
    "WindowResult",
    "WgcError",
    "window_mse",
    "f_statistic",
    "test_pair",
    "scan",
    "results_to_csv",
    "results_to_json",
    "load_results_csv",
]

FLOOR = 1e-12


class WgcError(ValueError):
    """Invalid window-test request."""


@dataclass(frozen=True)
class WindowResult:
    """One (window, ordered pair) F-test outcome."""

    window: tuple[int, int]
    source: int
    target: int
    l1: float
    l2: float
    f_statistic: float
    causal: bool
    degenerate: bool
    epsilon: float


def window_mse(predictions: np.ndarray, actuals: np.ndarray) -> float:
    """Mean squared residual over the window."""
    predictions = np.asarray(predictions, dtype=float)
    actuals = np.asarray(actuals, dtype=float)
    if predictions.shape != actuals.shape:
        raise WgcError(
            f"length mismatch: {predictions.shape} predictions vs {actuals.shape} actuals"
        )
    if predictions.size < 1:
        raise WgcError("window must contain at least one point")
    r = predictions - actuals
    return float(np.mean(r * r))


def f_statistic(l1: float, l2: float) -> tuple[float, bool]:
    """L1/L2 with both sides floored at 1e-12 when L2 degenerates.

    Returns (value, degenerate). The flag fires exactly when flooring was
    needed, i.e. when L2 < 1e-12.
    """
    if l1 < 0 or l2 < 0:
        raise WgcError("losses must be nonnegative")
    if l2 < FLOOR:
        return max(l1, FLOOR) / FLOOR, True
    return l1 / l2, False


def test_pair(
    series: MultiChannelSeries,
    target: int,
    source: int,
    window: tuple[int, int],
    self_model: NarModel,
    cause_model: NarModel,
    epsilon: float = 1.0,
) -> WindowResult:
    """F-test one ordered pair (source -> target) on one window."""
    start, end = window
    actual = series.values[target][start:end + 1]
    pred_self = predict_window(self_model, series, window)
    pred_cause = predict_window(cause_model, series, window)
    l1 = window_mse(pred_self, actual)
    l2 = window_mse(pred_cause, actual)
    f, degenerate = f_statistic(l1, l2)
    return WindowResult(
        window=window,
        source=source,
        target=target,
        l1=l1,
        l2=l2,
        f_statistic=f,
        causal=bool(f > epsilon),
        degenerate=degenerate,
        epsilon=epsilon,
    )


def scan(
    series: MultiChannelSeries,
    pairs: list[tuple[int, int]],
    window_spec: WindowSpec,
    epsilon: float,
    self_models: dict[int, NarModel],
    cause_models: dict[tuple[int, int], NarModel],
) -> list[WindowResult]:
    """F-test every (window, ordered pair), ordered by (start, target, source).

    ``pairs`` lists (target, source) ordered pairs; each needs a self model
    for the target and a cause model keyed (target, source).
    """
    window_list = windows(series.length, window_spec)
    out: list[WindowResult] = []
    for window in window_list:
        for target, source in sorted(pairs):
            out.append(
                test_pair(
                    series,
                    target,
                    source,
                    window,
                    self_models[target],
                    cause_models[(target, source)],
                    epsilon,
                )
            )
    return out


_CSV_COLUMNS = [
    "window_start",
    "window_end",
    "source",
    "target",
    "L1",
    "L2",
    "f",
    "causal",
    "degenerate",
]


def results_to_csv(results: list[WindowResult], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_COLUMNS)
        for r in results:
            writer.writerow(
                [
                    r.window[0],
                    r.window[1],
                    r.source,
                    r.target,
                    f"{r.l1:.17g}",
                    f"{r.l2:.17g}",
                    f"{r.f_statistic:.17g}",
                    int(r.causal),
                    int(r.degenerate),
                ]
            )


def results_to_json(results: list[WindowResult], path: str) -> None:
    docs = []
    for r in results:
        d = asdict(r)
        d["window"] = list(r.window)
        docs.append(d)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(docs, fh, indent=2)


def load_results_csv(path: str) -> list[WindowResult]:
    """Re-read a results CSV (used by the independent recount check)."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            out.append(
                WindowResult(
                    window=(int(row["window_start"]), int(row["window_end"])),
                    source=int(row["source"]),
                    target=int(row["target"]),
                    l1=float(row["L1"]),
                    l2=float(row["L2"]),
                    f_statistic=float(row["f"]),
                    causal=bool(int(row["causal"])),
                    degenerate=bool(int(row["degenerate"])),
                    epsilon=float("nan"),
                )
            )
    return out
