"""Causality-index optimization over windows.

A per-sample index matrix Phi (channel by time, clamped to [0.1, 2.0], all
ones at the start) reweights the series before the window-level F scan. On
windows where causality fired, Phi is pushed by gradient descent toward the
shape of the forecast residuals through a KL loss: the window's Phi entries,
normalized, should look like the normalized values of h(r^2) where
h(x) = alpha - tanh(x). Poorly predicted points therefore get their weight
scaled down, which damps the auto-correlation spikes that inflate the
self-forecast error. The alternating loop (reweight, refit, rescan, update)
runs until both the forecaster training MSE and the KL loss settle. Causal
windows are then localized to point pairs by maximizing
Phi[i, t1] + Phi[j, t2] with t1 < t2.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .nar import NarConfig, NarModel, derive_model_seed, fit, predict_window
from .series import MultiChannelSeries, WindowSpec, windows
from .wgc import WindowResult, scan

__all__ = [
    "CausalityIndex",
    "ReweightedSeries",
    "IndexingConfig",
    "IndexingError",
    "PointLink",
    "DwgcResult",
    "scale_h",
    "reweight",
    "indexing_loss",
    "optimize_phi_step",
    "regularizer_value",
    "run_dwgc",
    "locate_points",
    "write_phi_csv",
    "write_trace_jsonl",
    "write_point_links_csv",
]


class IndexingError(ValueError):
    """Invalid indexing input or configuration."""


@dataclass(frozen=True)
class CausalityIndex:
    """Per-sample weights, one row per channel, clamped to [phi_min, phi_max]."""

    phi: np.ndarray
    phi_min: float = 0.1
    phi_max: float = 2.0
    alpha: float = 6.0 / 5.0

    def __post_init__(self) -> None:
        arr = np.asarray(self.phi, dtype=float)
        if arr.ndim != 2:
            raise IndexingError(f"phi must be 2-d (channel, time); got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise IndexingError("phi entries must be finite")
        if self.alpha <= 1:
            raise IndexingError("alpha must exceed 1")
        if not (0 < self.phi_min <= self.phi_max):
            raise IndexingError("need 0 < phi_min <= phi_max")
        if arr.min() < self.phi_min or arr.max() > self.phi_max:
            raise IndexingError(
                f"phi entries outside [{self.phi_min}, {self.phi_max}]"
            )
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "phi", arr)

    @classmethod
    def ones(cls, n_channels: int, length: int, **kw) -> "CausalityIndex":
        return cls(phi=np.ones((n_channels, length)), **kw)

    def with_phi(self, new_phi: np.ndarray) -> "CausalityIndex":
        return CausalityIndex(
            phi=new_phi, phi_min=self.phi_min, phi_max=self.phi_max, alpha=self.alpha
        )


@dataclass(frozen=True)
class ReweightedSeries:
    """Hadamard product phi * Y, remembering where it came from."""

    values: np.ndarray
    channel_names: tuple[str, ...]
    source: MultiChannelSeries
    phi_version: int = 0

    def as_series(self) -> MultiChannelSeries:
        return MultiChannelSeries(values=self.values, channel_names=self.channel_names)


@dataclass(frozen=True)
class IndexingConfig:
    """Settings for the alternating optimization.

    The three trailing switches pick between readings of ambiguous pieces:
    whether h acts on the squared residual or is squared after acting on the
    raw residual, whether residuals come from the self-only or the
    with-cause forecaster, and whether point localization seeks peaks or
    troughs of the index.
    """

    phi_learning_rate: float = 0.05
    phi_steps_per_outer: int = 1
    kl_epsilon: float = 1e-8
    outer_max_iters: int = 50
    converge_tol: float = 1e-3
    regularizer: str = "off"
    reg_alpha_s: float = 1.0
    reg_beta_r: float = 1.0
    h_on_squared_residual: bool = True
    residual_source: str = "self"
    localization: str = "peak"

    def __post_init__(self) -> None:
        if self.phi_learning_rate < 0:
            raise IndexingError("phi_learning_rate must be nonnegative")
        if self.phi_steps_per_outer < 1:
            raise IndexingError("phi_steps_per_outer must be >= 1")
        if self.kl_epsilon <= 0:
            raise IndexingError("kl_epsilon must be positive")
        if self.outer_max_iters < 1:
            raise IndexingError("outer_max_iters must be >= 1")
        if self.converge_tol <= 0:
            raise IndexingError("converge_tol must be positive")
        if self.regularizer not in ("off", "smoothness", "smoothness+relu"):
            raise IndexingError(f"unknown regularizer mode {self.regularizer!r}")
        if self.reg_alpha_s < 0 or self.reg_beta_r < 0:
            raise IndexingError("regularizer weights must be nonnegative")
        if self.residual_source not in ("self", "conditional"):
            raise IndexingError(f"unknown residual_source {self.residual_source!r}")
        if self.localization not in ("peak", "inverted"):
            raise IndexingError(f"unknown localization mode {self.localization!r}")


@dataclass(frozen=True)
class PointLink:
    """A localized cause point (channel i, t1) and effect point (channel j, t2)."""

    source: tuple[int, int]
    target: tuple[int, int]
    score: float
    window: tuple[int, int]

    def __post_init__(self) -> None:
        t1 = self.source[1]
        t2 = self.target[1]
        start, end = self.window
        if not t1 < t2:
            raise IndexingError("cause time must precede effect time")
        if not (start <= t1 <= end and start <= t2 <= end):
            raise IndexingError("linked points must lie inside the window")


def scale_h(x, alpha: float = 6.0 / 5.0):
    """alpha - tanh(x); maps 0 to alpha and large x toward alpha - 1."""
    if alpha <= 1:
        raise IndexingError("alpha must exceed 1")
    return alpha - np.tanh(x)


def reweight(
    series: MultiChannelSeries,
    phi: "CausalityIndex | np.ndarray",
    phi_version: int = 0,
) -> ReweightedSeries:
    """Elementwise product of the index and the series values."""
    arr = phi.phi if isinstance(phi, CausalityIndex) else np.asarray(phi, dtype=float)
    if arr.shape != series.values.shape:
        raise IndexingError(
            f"phi shape {arr.shape} does not match series shape {series.values.shape}"
        )
    return ReweightedSeries(
        values=arr * series.values,
        channel_names=series.channel_names,
        source=series,
        phi_version=phi_version,
    )


def _q_raw(residuals: np.ndarray, alpha: float, h_on_squared: bool) -> np.ndarray:
    r = np.asarray(residuals, dtype=float)
    if h_on_squared:
        return scale_h(r * r, alpha)
    return scale_h(r, alpha) ** 2


def _kl_and_grad(
    phi_window: np.ndarray,
    residuals: np.ndarray,
    alpha: float,
    kl_epsilon: float,
    h_on_squared: bool,
) -> tuple[float, np.ndarray]:
    p_raw = phi_window + kl_epsilon
    s = p_raw.sum()
    p = p_raw / s
    q_raw = _q_raw(residuals, alpha, h_on_squared) + kl_epsilon
    q = q_raw / q_raw.sum()
    log_ratio = np.log(p / q)
    kl_value = float(np.dot(p, log_ratio))
    grad = (log_ratio - kl_value) / s
    return kl_value, grad


def indexing_loss(
    phi_window: np.ndarray,
    residuals: np.ndarray,
    alpha: float = 6.0 / 5.0,
    kl_epsilon: float = 1e-8,
    h_on_squared: bool = True,
) -> float:
    """KL divergence of the normalized index row from the normalized h(r^2) row.

    Both vectors get kl_epsilon added to every entry and are then normalized
    to sum one. Zero exactly when the two normalized vectors coincide.
    """
    phi_window = np.asarray(phi_window, dtype=float)
    residuals = np.asarray(residuals, dtype=float)
    if phi_window.shape != residuals.shape or phi_window.ndim != 1:
        raise IndexingError("phi_window and residuals must be 1-d and equally long")
    if np.any(phi_window <= 0):
        raise IndexingError("phi entries must be positive")
    kl_value, _ = _kl_and_grad(phi_window, residuals, alpha, kl_epsilon, h_on_squared)
    return max(kl_value, 0.0)


def regularizer_value(
    phi_window: np.ndarray,
    alpha_s: float,
    beta_r: float,
    k: int | None = None,
) -> float:
    """Smoothness plus clamped Relu penalty on a window's index slice.

    The smoothness part sums |phi[2l] - phi[2l+1]| over consecutive pairs
    (a trailing unpaired entry under odd length is ignored). The Relu part
    compares Gamma(k-1)/Gamma(k/2)^2 times the worst mean(phi)^2/phi_p^2
    ratio against sum over q of 1 / (ph_q^2 prod_{j != q}(1 - ph_j^2/ph_q^2))
    with ph_m the pair means; it is evaluated in log magnitude with explicit
    sign tracking because the products overflow and change sign freely, and
    the result is clamped to [0, 1e6] (non-finite values count as blow-ups
    and take the cap). Skipped entirely when beta_r is zero.
    """
    phi_window = np.asarray(phi_window, dtype=float)
    if phi_window.ndim != 1 or phi_window.size < 2:
        raise IndexingError("phi_window must be 1-d with at least 2 entries")
    if np.any(phi_window <= 0):
        raise IndexingError("phi entries must be positive")
    if k is None:
        k = phi_window.size

    n_pairs = phi_window.size // 2
    a = phi_window[0 : 2 * n_pairs : 2]
    b = phi_window[1 : 2 * n_pairs : 2]
    smooth = float(np.abs(a - b).sum())
    if beta_r == 0:
        return alpha_s * smooth

    pair_means = (a + b) / 2.0
    gamma_ratio = math.exp(math.lgamma(k - 1) - 2.0 * math.lgamma(k / 2.0))
    mean_phi = float(phi_window.mean())
    worst_ratio = (mean_phi * mean_phi) / float(np.min(phi_window) ** 2)

    sq = pair_means * pair_means
    total = 0.0
    for q in range(n_pairs):
        log_mag = -2.0 * math.log(pair_means[q])
        sign = 1.0
        singular = False
        for j in range(n_pairs):
            if j == q:
                continue
            factor = 1.0 - sq[j] / sq[q]
            if abs(factor) < 1e-300:
                singular = True
                break
            log_mag -= math.log(abs(factor))
            if factor < 0:
                sign = -sign
        if singular:
            total = math.inf if sign > 0 else -math.inf
            break
        with np.errstate(over="ignore"):
            total += sign * float(np.exp(log_mag))

    relu_arg = gamma_ratio * worst_ratio - total
    if not math.isfinite(relu_arg):
        relu = 0.0 if relu_arg == -math.inf else 1e6
    else:
        relu = min(max(relu_arg, 0.0), 1e6)
    return alpha_s * smooth + beta_r * relu


def _regularizer_grad(phi_window: np.ndarray, config: IndexingConfig) -> np.ndarray:
    """Central-difference gradient of the enabled regularizer terms."""
    beta = config.reg_beta_r if config.regularizer == "smoothness+relu" else 0.0
    step = 1e-6
    grad = np.zeros_like(phi_window)
    for idx in range(phi_window.size):
        bumped = phi_window.copy()
        bumped[idx] += step
        up = regularizer_value(bumped, config.reg_alpha_s, beta)
        bumped[idx] -= 2 * step
        down = regularizer_value(bumped, config.reg_alpha_s, beta)
        grad[idx] = (up - down) / (2 * step)
    return grad


def optimize_phi_step(
    phi: CausalityIndex,
    detected_windows: list[tuple[int, int]],
    residuals: dict[tuple[int, tuple[int, int]], np.ndarray],
    config: IndexingConfig,
) -> CausalityIndex:
    """One gradient-descent step on the summed KL loss, then clamp.

    Only entries inside detected windows move, and only for channels that
    have a residual vector recorded (keys are (channel, window)). Gradients
    from overlapping windows accumulate before the single step. The
    regularizer, when enabled, is differenced numerically on the same
    slices.
    """
    arr = phi.phi.copy()
    grad = np.zeros_like(arr)
    for window in detected_windows:
        start, end = window
        for (channel, win), res in residuals.items():
            if win != window:
                continue
            seg = arr[channel][start : end + 1]
            if res.shape != seg.shape:
                raise IndexingError(
                    f"residual length {res.shape} does not match window {window}"
                )
            _, g = _kl_and_grad(
                seg, res, phi.alpha, config.kl_epsilon, config.h_on_squared_residual
            )
            if config.regularizer != "off":
                g = g + _regularizer_grad(seg, config)
            grad[channel][start : end + 1] += g
    arr -= config.phi_learning_rate * grad
    np.clip(arr, phi.phi_min, phi.phi_max, out=arr)
    return phi.with_phi(arr)


def _total_indexing_loss(
    phi: CausalityIndex,
    detected_windows: list[tuple[int, int]],
    residuals: dict[tuple[int, tuple[int, int]], np.ndarray],
    config: IndexingConfig,
) -> float:
    total = 0.0
    for window in detected_windows:
        start, end = window
        for (channel, win), res in residuals.items():
            if win != window:
                continue
            total += indexing_loss(
                phi.phi[channel][start : end + 1],
                res,
                alpha=phi.alpha,
                kl_epsilon=config.kl_epsilon,
                h_on_squared=config.h_on_squared_residual,
            )
            if config.regularizer != "off":
                beta = (
                    config.reg_beta_r
                    if config.regularizer == "smoothness+relu"
                    else 0.0
                )
                total += regularizer_value(
                    phi.phi[channel][start : end + 1], config.reg_alpha_s, beta
                )
    return total


def locate_points(
    phi: "CausalityIndex | np.ndarray",
    window: tuple[int, int],
    i: int,
    j: int,
    invert: bool = False,
) -> PointLink:
    """Best ordered point pair in the window: argmax of phi[i,t1] + phi[j,t2].

    Requires t1 < t2; ties go to the smallest t1, then the smallest t2. With
    ``invert`` the sum is minimized instead (the reading where causal points
    dent the index rather than peak it); the reported score is always the
    plain sum.
    """
    arr = phi.phi if isinstance(phi, CausalityIndex) else np.asarray(phi, dtype=float)
    start, end = window
    if end - start + 1 < 2:
        raise IndexingError("window must contain at least 2 points")
    if end >= arr.shape[1] or start < 0:
        raise IndexingError(f"window {window} outside index of length {arr.shape[1]}")
    row_i = -arr[i] if invert else arr[i]
    row_j = -arr[j] if invert else arr[j]

    best: tuple[float, int, int] | None = None
    best_t1 = start
    best_v1 = row_i[start]
    for t2 in range(start + 1, end + 1):
        cand = (-(best_v1 + row_j[t2]), best_t1, t2)
        if best is None or cand < best:
            best = cand
        if row_i[t2] > best_v1:
            best_v1 = row_i[t2]
            best_t1 = t2
    assert best is not None
    _, t1, t2 = best
    return PointLink(
        source=(i, t1),
        target=(j, t2),
        score=float(arr[i][t1] + arr[j][t2]),
        window=window,
    )


@dataclass(frozen=True)
class DwgcResult:
    """Output of the alternating loop: final scan, index, links, and history."""

    window_results: list[WindowResult]
    phi: CausalityIndex
    point_links: list[PointLink]
    trace: list[dict] = field(repr=False)
    converged: bool = False


def _fit_iteration_models(
    a_series: MultiChannelSeries,
    pairs: list[tuple[int, int]],
    train_range: tuple[int, int],
    nar_config: NarConfig,
) -> tuple[dict[int, NarModel], dict[tuple[int, int], NarModel], float]:
    """Fresh models for one outer iteration, same seeds every time."""
    targets = sorted({t for t, _ in pairs})
    self_models: dict[int, NarModel] = {}
    cause_models: dict[tuple[int, int], NarModel] = {}
    mses = []
    for tgt in targets:
        cfg = replace(nar_config, seed=derive_model_seed(nar_config.seed, tgt, False))
        model = fit(a_series, tgt, None, train_range, cfg)
        self_models[tgt] = model
        mses.append(model.train_mse)
    for tgt, src in sorted(pairs):
        cfg = replace(nar_config, seed=derive_model_seed(nar_config.seed, tgt, True))
        model = fit(a_series, tgt, src, train_range, cfg)
        cause_models[(tgt, src)] = model
        mses.append(model.train_mse)
    return self_models, cause_models, float(np.mean(mses))


def run_dwgc(
    series: MultiChannelSeries,
    pairs: list[tuple[int, int]],
    window_spec: WindowSpec,
    nar_config: NarConfig,
    indexing_config: IndexingConfig | None = None,
    epsilon: float = 1.0,
    train_size: int | None = None,
    alpha: float = 6.0 / 5.0,
) -> DwgcResult:
    """Alternate reweighting, refitting, scanning, and index updates.

    Each outer iteration reweights the series by the current index, refits
    every forecaster from scratch on the first ``train_size`` points of the
    reweighted values (fixed per-model seeds, so iterations differ only
    through the index), scans all windows, and takes gradient steps on the
    KL loss over the windows that fired. The loop stops once both the mean
    training MSE and the KL loss change by less than converge_tol relative
    between consecutive iterations (needs at least two), else runs
    outer_max_iters and reports converged=False. Point links are produced
    for every causal result of the final scan.

    ``train_size`` defaults to the window origin, the usual layout where
    windows tile everything after the training prefix.
    """
    cfg = indexing_config or IndexingConfig()
    if train_size is None:
        train_size = window_spec.origin
    if train_size <= nar_config.lag_order:
        raise IndexingError(
            f"training prefix of {train_size} points is too short for "
            f"lag order {nar_config.lag_order}"
        )
    index = CausalityIndex.ones(series.n_channels, series.length, alpha=alpha)
    targets = sorted({t for t, _ in pairs})
    first_source = {}
    for tgt, src in sorted(pairs):
        first_source.setdefault(tgt, src)

    trace: list[dict] = []
    results: list[WindowResult] = []
    converged = False
    prev_nar = prev_kl = None
    for iteration in range(1, cfg.outer_max_iters + 1):
        rw = reweight(series, index, phi_version=iteration - 1)
        a_series = rw.as_series()
        self_models, cause_models, nar_mse = _fit_iteration_models(
            a_series, pairs, (0, train_size), nar_config
        )
        results = scan(a_series, pairs, window_spec, epsilon, self_models, cause_models)
        detected = sorted({r.window for r in results if r.causal})

        residuals: dict[tuple[int, tuple[int, int]], np.ndarray] = {}
        for window in detected:
            start, end = window
            for tgt in targets:
                if cfg.residual_source == "self":
                    model = self_models[tgt]
                else:
                    model = cause_models[(tgt, first_source[tgt])]
                pred = predict_window(model, a_series, window)
                residuals[(tgt, window)] = a_series.values[tgt][start : end + 1] - pred

        kl = _total_indexing_loss(index, detected, residuals, cfg)
        trace.append(
            {
                "iteration": iteration,
                "nar_mse": nar_mse,
                "indexing_loss": kl,
                "n_detected": len(detected),
            }
        )
        for _ in range(cfg.phi_steps_per_outer):
            index = optimize_phi_step(index, detected, residuals, cfg)

        if prev_nar is not None:
            tiny = 1e-300
            d_nar = abs(nar_mse - prev_nar) / max(abs(prev_nar), tiny)
            d_kl = abs(kl - prev_kl) / max(abs(prev_kl), tiny)
            if d_nar < cfg.converge_tol and d_kl < cfg.converge_tol:
                converged = True
                break
        prev_nar, prev_kl = nar_mse, kl

    links = [
        locate_points(
            index, r.window, r.source, r.target, invert=cfg.localization == "inverted"
        )
        for r in results
        if r.causal
    ]
    return DwgcResult(
        window_results=results,
        phi=index,
        point_links=links,
        trace=trace,
        converged=converged,
    )


def write_phi_csv(phi: CausalityIndex, channel_names: tuple[str, ...], path: str) -> None:
    """One row per channel: name, then the index value at every time step."""
    arr = phi.phi
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["channel"] + [f"t{t}" for t in range(arr.shape[1])])
        for i, name in enumerate(channel_names):
            writer.writerow([name] + [f"{v:.17g}" for v in arr[i]])


def write_trace_jsonl(trace: list[dict], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for entry in trace:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")


def write_point_links_csv(
    links: list[PointLink], channel_names: tuple[str, ...], path: str
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "t1", "j", "t2", "score"])
        for link in links:
            writer.writerow(
                [
                    channel_names[link.source[0]],
                    link.source[1],
                    channel_names[link.target[0]],
                    link.target[1],
                    f"{link.score:.17g}",
                ]
            )
