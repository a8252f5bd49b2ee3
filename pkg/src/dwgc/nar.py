"""Nonlinear autoregressive forecaster: one hidden tanh layer, linear output.

Two variants share one implementation: self-only (predict channel i from its
own p lags) and with-cause (predict channel i from the p lags of i and of a
candidate cause channel j). Training is plain full-batch gradient descent so
runs are deterministic and the gradient is easy to verify against finite
differences. Inputs and the target are standardized by train-range mean/std
per channel; predictions are mapped back to raw units.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .series import MultiChannelSeries

__all__ = [
    "NarConfig",
    "NarModel",
    "NarError",
    "NarDivergenceError",
    "build_design",
    "derive_model_seed",
    "fit",
    "predict_window",
    "gradient_check",
    "save_model",
    "load_model",
]


class NarError(ValueError):
    """Invalid fit/predict request."""


class NarDivergenceError(RuntimeError):
    """Training loss became non-finite; message names the epoch."""


@dataclass(frozen=True)
class NarConfig:
    """Trainer settings. Defaults follow the experimental setup."""

    lag_order: int = 10
    hidden_units: int = 16
    learning_rate: float = 0.01
    max_epochs: int = 500
    early_stop_tol: float = 1e-5
    early_stop_epochs: int = 20
    seed: int = 0

    def __post_init__(self) -> None:
        if self.lag_order < 1:
            raise NarError("lag_order must be >= 1")
        if self.hidden_units < 1:
            raise NarError("hidden_units must be >= 1")
        if self.learning_rate <= 0:
            raise NarError("learning_rate must be positive")
        if self.max_epochs < 1:
            raise NarError("max_epochs must be >= 1")
        if self.early_stop_tol <= 0:
            raise NarError("early_stop_tol must be positive")


@dataclass
class NarModel:
    """Trained forecaster with its standardization constants.

    ``w_hidden`` is (hidden, input_width), ``b_hidden`` (hidden,),
    ``w_out`` (hidden,), ``b_out`` scalar. ``mu_in``/``sd_in`` hold one value
    per input column (the channel statistic repeated across that channel's p
    lag columns); ``mu_out``/``sd_out`` standardize the target.
    """

    config: NarConfig
    target_channel: int
    cause_channel: int | None
    input_width: int
    w_hidden: np.ndarray
    b_hidden: np.ndarray
    w_out: np.ndarray
    b_out: float
    mu_in: np.ndarray
    sd_in: np.ndarray
    mu_out: float
    sd_out: float
    train_range: tuple[int, int] = (0, 0)
    train_mse: float = field(default=float("nan"))

    def forward_std(self, x_std: np.ndarray) -> np.ndarray:
        """Standardized-space prediction for standardized design rows."""
        z = np.tanh(x_std @ self.w_hidden.T + self.b_hidden)
        return z @ self.w_out + self.b_out

    def predict_rows(self, x_raw: np.ndarray) -> np.ndarray:
        """Raw-unit predictions for raw-unit design rows."""
        x_std = (x_raw - self.mu_in) / self.sd_in
        return self.forward_std(x_std) * self.sd_out + self.mu_out


def build_design(
    values: np.ndarray,
    target: int,
    cause: int | None,
    p: int,
    t_start: int,
    t_end: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Design matrix and targets for one-step-ahead prediction.

    Rows cover times t in [t_start, t_end); row t holds the p most recent
    lags of the target channel (y[t-1] first) followed, when a cause channel
    is given, by the p most recent lags of the cause. Times below p are
    rejected: every row must be fully backed by observed history.
    """
    if t_start < p:
        raise NarError(f"need {p} points of history; window starts at t={t_start}")
    if t_end <= t_start:
        raise NarError("empty time range")
    times = np.arange(t_start, t_end)
    lag_idx = times[:, None] - np.arange(1, p + 1)[None, :]
    cols = [values[target][lag_idx]]
    if cause is not None:
        cols.append(values[cause][lag_idx])
    x = np.hstack(cols)
    y = values[target][times]
    return x, y


def _loss_and_grads(
    w1: np.ndarray,
    b1: np.ndarray,
    w2: np.ndarray,
    b2: float,
    x: np.ndarray,
    y: np.ndarray,
) -> tuple[float, np.ndarray, np.ndarray, np.ndarray, float]:
    n = x.shape[0]
    a = x @ w1.T + b1
    z = np.tanh(a)
    pred = z @ w2 + b2
    r = pred - y
    loss = float(np.mean(r * r))
    g_pred = (2.0 / n) * r
    g_w2 = z.T @ g_pred
    g_b2 = float(np.sum(g_pred))
    g_z = np.outer(g_pred, w2)
    g_a = g_z * (1.0 - z * z)
    g_w1 = g_a.T @ x
    g_b1 = g_a.sum(axis=0)
    return loss, g_w1, g_b1, g_w2, g_b2


def derive_model_seed(base_seed: int, target_channel: int, with_cause: bool) -> int:
    """Stable per-model seed so refits reproduce exactly.

    Spreads the base seed so the self and with-cause models of each target
    start from different weights, while repeated fits of the same model get
    identical initialization.
    """
    return base_seed * 7919 + 2 * target_channel + (1 if with_cause else 0)


def fit(
    series: MultiChannelSeries,
    target_channel: int,
    cause_channel: int | None,
    train_range: tuple[int, int],
    config: NarConfig,
) -> NarModel:
    """Train by full-batch gradient descent on standardized data.

    Deterministic given (data, config): weights start uniform in
    [-1/sqrt(fan_in), +1/sqrt(fan_in)] from a generator seeded with
    config.seed. Stops early when the relative MSE improvement over the last
    early_stop_epochs epochs falls below early_stop_tol, or when an epoch
    fails to decrease the loss (beyond a 1e-9 slack). A non-finite loss
    raises, naming the epoch.
    """
    if cause_channel is not None and cause_channel == target_channel:
        raise NarError("cause channel must differ from target channel")
    p = config.lag_order
    t0, t1 = train_range
    t0 = max(t0, p)
    if t1 - t0 < p + 1:
        raise NarError(
            f"train range [{t0},{t1}) too short: need at least {p + 1} usable points"
        )
    x_raw, y_raw = build_design(series.values, target_channel, cause_channel, p, t0, t1)

    def channel_stats(ch: int) -> tuple[float, float]:
        seg = series.values[ch][t0:t1]
        mu = float(seg.mean())
        sd = float(seg.std())
        return mu, max(sd, 1e-12)

    mu_t, sd_t = channel_stats(target_channel)
    mus = [mu_t] * p
    sds = [sd_t] * p
    if cause_channel is not None:
        mu_c, sd_c = channel_stats(cause_channel)
        mus += [mu_c] * p
        sds += [sd_c] * p
    mu_in = np.array(mus)
    sd_in = np.array(sds)
    x = (x_raw - mu_in) / sd_in
    y = (y_raw - mu_t) / sd_t

    width = x.shape[1]
    h = config.hidden_units
    rng = np.random.default_rng(config.seed)
    s1 = 1.0 / np.sqrt(width)
    s2 = 1.0 / np.sqrt(h)
    w1 = rng.uniform(-s1, s1, size=(h, width))
    b1 = rng.uniform(-s1, s1, size=h)
    w2 = rng.uniform(-s2, s2, size=h)
    b2 = float(rng.uniform(-s2, s2))

    history: list[float] = []
    lr = config.learning_rate
    prev_state = None
    for epoch in range(config.max_epochs):
        loss, g_w1, g_b1, g_w2, g_b2 = _loss_and_grads(w1, b1, w2, b2, x, y)
        if not np.isfinite(loss):
            raise NarDivergenceError(f"training diverged: non-finite loss at epoch {epoch}")
        if history and loss > history[-1] + 1e-9 * max(1.0, history[-1]):
            # An uphill step means the fixed learning rate overshot here;
            # keep the previous (better) weights and stop.
            w1, b1, w2, b2 = prev_state
            break
        history.append(loss)
        m = config.early_stop_epochs
        if len(history) > m:
            past = history[-m - 1]
            if past - history[-1] <= config.early_stop_tol * max(past, 1e-300):
                break
        prev_state = (w1, b1, w2, b2)
        w1 = w1 - lr * g_w1
        b1 = b1 - lr * g_b1
        w2 = w2 - lr * g_w2
        b2 = b2 - lr * g_b2

    final_loss = _loss_and_grads(w1, b1, w2, b2, x, y)[0]
    if not np.isfinite(final_loss):
        raise NarDivergenceError(
            f"training diverged: non-finite loss at epoch {config.max_epochs}"
        )
    train_mse = final_loss * sd_t * sd_t
    return NarModel(
        config=config,
        target_channel=target_channel,
        cause_channel=cause_channel,
        input_width=width,
        w_hidden=w1,
        b_hidden=b1,
        w_out=w2,
        b_out=b2,
        mu_in=mu_in,
        sd_in=sd_in,
        mu_out=mu_t,
        sd_out=sd_t,
        train_range=(t0, t1),
        train_mse=train_mse,
    )


def predict_window(
    model: NarModel,
    series: MultiChannelSeries,
    window: tuple[int, int],
) -> np.ndarray:
    """One-step-ahead predictions over [start, end], ends inclusive.

    Teacher forcing: every prediction at time t is computed from the true
    observed values strictly before t, never from earlier predictions.
    """
    start, end = window
    p = model.config.lag_order
    if start < p:
        raise NarError(f"insufficient history: window starts at {start}, need {p} lags")
    if end >= series.length:
        raise NarError(f"window end {end} outside series of length {series.length}")
    x_raw, _ = build_design(
        series.values, model.target_channel, model.cause_channel, p, start, end + 1
    )
    return model.predict_rows(x_raw)


def gradient_check(model: NarModel, x_std: np.ndarray, y_std: np.ndarray) -> float:
    """Max relative deviation of analytic gradients vs central differences.

    Operates in standardized space on the given batch with step 1e-5. The
    deviation for each weight is |analytic - numeric| / max(|analytic|,
    |numeric|, 1e-8), so a zero gradient on both sides scores 0.
    """
    if x_std.shape[0] == 0:
        raise NarError("gradient_check needs a non-empty batch")
    w1 = model.w_hidden.copy()
    b1 = model.b_hidden.copy()
    w2 = model.w_out.copy()
    b2 = float(model.b_out)
    _, g_w1, g_b1, g_w2, g_b2 = _loss_and_grads(w1, b1, w2, b2, x_std, y_std)

    step = 1e-5
    worst = 0.0

    def loss_at(w1a, b1a, w2a, b2a) -> float:
        return _loss_and_grads(w1a, b1a, w2a, b2a, x_std, y_std)[0]

    def compare(analytic: float, plus: float, minus: float) -> None:
        nonlocal worst
        numeric = (plus - minus) / (2 * step)
        denom = max(abs(analytic), abs(numeric), 1e-8)
        worst = max(worst, abs(analytic - numeric) / denom)

    for idx in np.ndindex(w1.shape):
        w1[idx] += step
        up = loss_at(w1, b1, w2, b2)
        w1[idx] -= 2 * step
        down = loss_at(w1, b1, w2, b2)
        w1[idx] += step
        compare(g_w1[idx], up, down)
    for i in range(b1.size):
        b1[i] += step
        up = loss_at(w1, b1, w2, b2)
        b1[i] -= 2 * step
        down = loss_at(w1, b1, w2, b2)
        b1[i] += step
        compare(g_b1[i], up, down)
    for i in range(w2.size):
        w2[i] += step
        up = loss_at(w1, b1, w2, b2)
        w2[i] -= 2 * step
        down = loss_at(w1, b1, w2, b2)
        w2[i] += step
        compare(g_w2[i], up, down)
    compare(g_b2, loss_at(w1, b1, w2, b2 + step), loss_at(w1, b1, w2, b2 - step))
    return worst


def save_model(model: NarModel, path: str) -> None:
    """Serialize config plus flat weight arrays as JSON (17 significant digits)."""

    def flat(a: np.ndarray) -> list[float]:
        return [float(f"{v:.17g}") for v in np.asarray(a, dtype=float).ravel()]

    doc = {
        "config": {
            "lag_order": model.config.lag_order,
            "hidden_units": model.config.hidden_units,
            "learning_rate": model.config.learning_rate,
            "max_epochs": model.config.max_epochs,
            "early_stop_tol": model.config.early_stop_tol,
            "early_stop_epochs": model.config.early_stop_epochs,
            "seed": model.config.seed,
        },
        "target_channel": model.target_channel,
        "cause_channel": model.cause_channel,
        "input_width": model.input_width,
        "w_hidden": flat(model.w_hidden),
        "b_hidden": flat(model.b_hidden),
        "w_out": flat(model.w_out),
        "b_out": float(f"{model.b_out:.17g}"),
        "mu_in": flat(model.mu_in),
        "sd_in": flat(model.sd_in),
        "mu_out": float(f"{model.mu_out:.17g}"),
        "sd_out": float(f"{model.sd_out:.17g}"),
        "train_range": list(model.train_range),
        "train_mse": float(f"{model.train_mse:.17g}"),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)


def load_model(path: str) -> NarModel:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    cfg = NarConfig(**doc["config"])
    h = cfg.hidden_units
    width = doc["input_width"]
    return NarModel(
        config=cfg,
        target_channel=doc["target_channel"],
        cause_channel=doc["cause_channel"],
        input_width=width,
        w_hidden=np.array(doc["w_hidden"]).reshape(h, width),
        b_hidden=np.array(doc["b_hidden"]),
        w_out=np.array(doc["w_out"]),
        b_out=doc["b_out"],
        mu_in=np.array(doc["mu_in"]),
        sd_in=np.array(doc["sd_in"]),
        mu_out=doc["mu_out"],
        sd_out=doc["sd_out"],
        train_range=tuple(doc["train_range"]),
        train_mse=doc["train_mse"],
    )
