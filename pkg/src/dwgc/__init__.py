"""Dynamic window-level Granger causality.

Detects, per sliding window rather than per whole series, whether one
channel's past improves the forecast of another, using the ratio of
windowed forecast errors of a small nonlinear autoregressor. A per-sample
causality index can additionally reweight the series between refits to
damp auto-correlation artifacts, and causal windows are localized to
cause/effect point pairs.

Layout: series (containers, CSV, windows, stationarity), nar (the
forecaster), wgc (windowed F-test), indexing (the index optimization
loop), synth (labeled benchmark generators), eval (seed sweeps), theory
(supporting Monte Carlo checks), cli (command-line front end).
"""

from .indexing import (
    CausalityIndex,
    DwgcResult,
    IndexingConfig,
    PointLink,
    locate_points,
    run_dwgc,
)
from .nar import NarConfig, NarModel, fit, predict_window
from .series import (
    MultiChannelSeries,
    SplitSpec,
    WindowSpec,
    difference_to_stationary,
    load_csv,
    save_csv,
    windows,
)
from .synth import ArSimConfig, GroundTruth, NarSimConfig, gen_ar, gen_nar, label_windows
from .wgc import WindowResult, f_statistic, scan, test_pair, window_mse

__version__ = "0.1.0"

__all__ = [
    "ArSimConfig",
    "CausalityIndex",
    "DwgcResult",
    "GroundTruth",
    "IndexingConfig",
    "MultiChannelSeries",
    "NarConfig",
    "NarModel",
    "NarSimConfig",
    "PointLink",
    "SplitSpec",
    "WindowResult",
    "WindowSpec",
    "difference_to_stationary",
    "f_statistic",
    "fit",
    "gen_ar",
    "gen_nar",
    "label_windows",
    "load_csv",
    "locate_points",
    "predict_window",
    "run_dwgc",
    "save_csv",
    "scan",
    "test_pair",
    "window_mse",
    "windows",
    "__version__",
]
