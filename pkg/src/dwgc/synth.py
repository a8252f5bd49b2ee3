"""Ground-truth-labeled synthetic generators.

Two benchmark processes over a pair of mutually driving channels:

* a linear one, where each channel is 0.9 times the other channel's lagged
  value plus small noise, and the coefficient jumps to 10 at random impulse
  times (the planted causal events);
* a nonlinear one, where the coupling goes through Re(sqrt(x^2 - 1)) with
  unit noise and the impulse coefficient is gated by a third sine channel.

Both record the impulse times per direction as ground truth.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .series import MultiChannelSeries

__all__ = [
    "ArSimConfig",
    "NarSimConfig",
    "GroundTruth",
    "SynthError",
    "gen_ar",
    "gen_nar",
    "label_windows",
    "save_ground_truth",
    "load_ground_truth",
]

_INIT = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 5.0, 4.0, 3.0, 2.0, 1.0])


class SynthError(ValueError):
    """Invalid generator configuration; message names the offending field."""


def _check_lag(lag) -> None:
    if lag == "random":
        return
    if not isinstance(lag, (int, np.integer)) or not 1 <= int(lag) <= 9:
        raise SynthError(f"lag must be 'random' or an integer in [1, 9]; got {lag!r}")


@dataclass(frozen=True)
class ArSimConfig:
    """Linear simulator settings."""

    T: int = 1000
    lag: int | str = "random"
    noise_scale: float = 0.02
    impulse_prob: float = 0.05
    base_coeff: float = 0.9
    impulse_coeff: float = 10.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.T < len(_INIT) + 1:
            raise SynthError(f"T must exceed the {len(_INIT)}-point initial segment")
        _check_lag(self.lag)
        if not 0.0 <= self.impulse_prob <= 1.0:
            raise SynthError("impulse_prob must lie in [0, 1]")
        if self.noise_scale < 0:
            raise SynthError("noise_scale must be nonnegative")


@dataclass(frozen=True)
class NarSimConfig:
    """Nonlinear simulator settings. noise_scale exists so tests can mute noise."""

    T: int = 1000
    lag: int | str = "random"
    gate_freq: float = 0.1
    gate_threshold: float = 0.9
    base_coeff: float = 0.9
    impulse_coeff: float = 10.0
    noise_scale: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.T < len(_INIT) + 1:
            raise SynthError(f"T must exceed the {len(_INIT)}-point initial segment")
        _check_lag(self.lag)
        if not 0.0 < self.gate_threshold < 1.0:
            raise SynthError("gate_threshold must lie in (0, 1)")
        if self.noise_scale < 0:
            raise SynthError("noise_scale must be nonnegative")


@dataclass(frozen=True)
class GroundTruth:
    """Planted causal events: impulse times per direction, plus the lag used.

    Times in impulse_times_2to1 are steps where channel 1's update drew the
    impulse coefficient (so channel 2's past spiked channel 1), and
    symmetrically for impulse_times_1to2. Only steps at or after the
    10-point initial segment count; earlier draws never enter the recursion.
    """

    impulse_times_1to2: tuple[int, ...]
    impulse_times_2to1: tuple[int, ...]
    lag: int

    def __post_init__(self) -> None:
        if list(self.impulse_times_1to2) != sorted(self.impulse_times_1to2):
            raise SynthError("impulse_times_1to2 must be sorted")
        if list(self.impulse_times_2to1) != sorted(self.impulse_times_2to1):
            raise SynthError("impulse_times_2to1 must be sorted")


def gen_ar(config: ArSimConfig) -> tuple[MultiChannelSeries, GroundTruth]:
    """Generate the linear benchmark pair.

    Draw order from the seeded generator is frozen: lag (when random), the
    per-(channel, time) coefficient uniforms, then the noise matrix. The
    first 10 points of both channels are the fixed triangular ramp.
    """
    rng = np.random.default_rng(config.seed)
    lag = int(rng.integers(1, 10)) if config.lag == "random" else int(config.lag)
    T = config.T
    m = np.where(
        rng.random((2, T)) < config.impulse_prob,
        config.impulse_coeff,
        config.base_coeff,
    )
    noise = config.noise_scale * rng.standard_normal((2, T))

    y = np.zeros((2, T))
    y[0, :10] = _INIT
    y[1, :10] = _INIT
    for t in range(10, T):
        y[0, t] = m[0, t] * y[1, t - lag] + noise[0, t]
        y[1, t] = m[1, t] * y[0, t - lag] + noise[1, t]

    is_imp = m == config.impulse_coeff
    # m[0] multiplies channel 2's past inside channel 1's update: direction 2->1.
    t2to1 = tuple(int(t) for t in np.where(is_imp[0])[0] if t >= 10)
    t1to2 = tuple(int(t) for t in np.where(is_imp[1])[0] if t >= 10)
    series = MultiChannelSeries(values=y, channel_names=("T1", "T2"))
    return series, GroundTruth(impulse_times_1to2=t1to2, impulse_times_2to1=t2to1, lag=lag)


def _real_sqrt_sq_minus_one(x: np.ndarray) -> np.ndarray:
    """Re(sqrt(x^2 - 1)): zero where |x| < 1."""
    return np.sqrt(np.maximum(x * x - 1.0, 0.0))


def gen_nar(config: NarSimConfig) -> tuple[MultiChannelSeries, GroundTruth]:
    """Generate the nonlinear benchmark triple (T1, T2, gate channel T3).

    T3_t = sin(gate_freq * t) exactly, with 0-based time. The impulse
    coefficient applies to channel 1's update when T3 > gate_threshold and
    to channel 2's when T3 < -gate_threshold; those gate times are the
    ground-truth impulse times.
    """
    rng = np.random.default_rng(config.seed)
    lag = int(rng.integers(1, 10)) if config.lag == "random" else int(config.lag)
    T = config.T
    t_axis = np.arange(T, dtype=float)
    t3 = np.sin(config.gate_freq * t_axis)
    m1 = np.where(t3 > config.gate_threshold, config.impulse_coeff, config.base_coeff)
    m2 = np.where(t3 < -config.gate_threshold, config.impulse_coeff, config.base_coeff)
    noise = config.noise_scale * rng.standard_normal((2, T))

    y = np.zeros((3, T))
    y[0, :10] = _INIT
    y[1, :10] = _INIT
    y[2] = t3
    for t in range(10, T):
        y[0, t] = m1[t] * _real_sqrt_sq_minus_one(y[1, t - lag:t - lag + 1])[0] + noise[0, t]
        y[1, t] = m2[t] * _real_sqrt_sq_minus_one(y[0, t - lag:t - lag + 1])[0] + noise[1, t]

    t2to1 = tuple(int(t) for t in np.where(m1 == config.impulse_coeff)[0] if t >= 10)
    t1to2 = tuple(int(t) for t in np.where(m2 == config.impulse_coeff)[0] if t >= 10)
    series = MultiChannelSeries(values=y, channel_names=("T1", "T2", "T3"))
    return series, GroundTruth(impulse_times_1to2=t1to2, impulse_times_2to1=t2to1, lag=lag)


@dataclass(frozen=True)
class WindowLabels:
    """Per-window causal flags, directional plus the any-direction union."""

    windows: tuple[tuple[int, int], ...]
    causal_2to1: tuple[bool, ...]
    causal_1to2: tuple[bool, ...]

    @property
    def causal_any(self) -> tuple[bool, ...]:
        return tuple(a or b for a, b in zip(self.causal_2to1, self.causal_1to2))


def label_windows(
    truth: GroundTruth,
    window_list: list[tuple[int, int]],
    include_lag_leadin: bool = False,
    time_shift: int = 0,
) -> WindowLabels:
    """Flag each window causal per direction by impulse containment.

    A window (start, end) is causal in a direction when it contains at least
    one impulse time of that direction. ``include_lag_leadin`` widens the
    match to impulses within ``lag`` steps before the window start (so a
    window also owns events whose propagated effect lands inside it).
    ``time_shift`` subtracts a constant from every impulse time first, for
    series whose front was trimmed by stationarity differencing.
    """
    lead = truth.lag if include_lag_leadin else 0

    def flags(times: tuple[int, ...]) -> tuple[bool, ...]:
        arr = np.array(times, dtype=int) - time_shift
        out = []
        for start, end in window_list:
            out.append(bool(np.any((arr >= start - lead) & (arr <= end))))
        return tuple(out)

    return WindowLabels(
        windows=tuple(window_list),
        causal_2to1=flags(truth.impulse_times_2to1),
        causal_1to2=flags(truth.impulse_times_1to2),
    )


def save_ground_truth(truth: GroundTruth, path: str) -> None:
    doc = {
        "impulse_times_1to2": list(truth.impulse_times_1to2),
        "impulse_times_2to1": list(truth.impulse_times_2to1),
        "lag": truth.lag,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)


def load_ground_truth(path: str) -> GroundTruth:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return GroundTruth(
        impulse_times_1to2=tuple(doc["impulse_times_1to2"]),
        impulse_times_2to1=tuple(doc["impulse_times_2to1"]),
        lag=doc["lag"],
    )
