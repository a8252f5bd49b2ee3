"""Multi-channel time series: data model, windowing, CSV I/O, stationarity prep.

Values are stored as a (channels, time) float array. Series objects are
immutable after construction: the underlying array is marked read-only.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MultiChannelSeries",
    "WindowSpec",
    "SplitSpec",
    "StationarityResult",
    "SeriesError",
    "CsvParseError",
    "windows",
    "load_csv",
    "save_csv",
    "difference_to_stationary",
]


class SeriesError(ValueError):
    """Invalid series construction or operation."""


class CsvParseError(SeriesError):
    """CSV ingestion failure; message names the offending row/column."""


@dataclass(frozen=True)
class MultiChannelSeries:
    """Observation matrix indexed (channel, time) with channel names.

    Every value must be finite. ``values`` is made read-only so instances
    can be shared freely between threads.
    """

    values: np.ndarray
    channel_names: tuple[str, ...]

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise SeriesError(f"values must be 2-D (channels, time); got shape {v.shape}")
        if v.shape[1] < 1:
            raise SeriesError("series must contain at least one time point")
        if not np.all(np.isfinite(v)):
            bad = np.argwhere(~np.isfinite(v))[0]
            raise SeriesError(f"non-finite value at channel {bad[0]}, time {bad[1]}")
        names = tuple(str(n) for n in self.channel_names)
        if len(names) != v.shape[0]:
            raise SeriesError(
                f"{len(names)} channel names for {v.shape[0]} channels"
            )
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "channel_names", names)

    @property
    def n_channels(self) -> int:
        return self.values.shape[0]

    @property
    def length(self) -> int:
        return self.values.shape[1]

    def channel(self, i: int) -> np.ndarray:
        return self.values[i]


@dataclass(frozen=True)
class WindowSpec:
    """Sliding-window layout: length k, stride (defaults to k), start offset."""

    k: int
    stride: int | None = None
    origin: int = 0

    def __post_init__(self) -> None:
        if self.k < 2:
            raise SeriesError("window length k must be >= 2 (a single-point MSE makes the F ratio degenerate)")
        stride = self.k if self.stride is None else self.stride
        if stride < 1:
            raise SeriesError("stride must be >= 1")
        if self.origin < 0:
            raise SeriesError("origin must be >= 0")
        object.__setattr__(self, "stride", stride)


@dataclass(frozen=True)
class SplitSpec:
    """Train/test split as a leading fraction of the series."""

    train_fraction: float = 0.3

    def __post_init__(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise SeriesError("train_fraction must lie strictly between 0 and 1")

    def train_size(self, series_length: int, lag_order: int) -> int:
        n = int(series_length * self.train_fraction)
        if n < lag_order + 1:
            raise SeriesError(
                f"train prefix of {n} points is too short for lag order {lag_order}"
            )
        return n


def windows(series_length: int, spec: WindowSpec) -> list[tuple[int, int]]:
    """All (start, end) index pairs, ends inclusive, fully inside [0, T).

    Returns an empty list when the series is too short; that is the caller's
    call to handle, not an error.
    """
    out = []
    start = spec.origin
    while start + spec.k - 1 < series_length:
        out.append((start, start + spec.k - 1))
        start += spec.stride
    return out


def load_csv(path: str, has_header: bool | None = None, time_column: bool = False) -> MultiChannelSeries:
    """Read a rectangular numeric CSV (rows = time points, columns = channels).

    ``has_header=None`` sniffs the first row: if any cell fails to parse as a
    number it is treated as a header. ``time_column=True`` drops the leftmost
    column (timestamps kept out of the computation).
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and not all(c.strip() == "" for c in r)]
    if not rows:
        raise CsvParseError(f"{path}: empty file")

    def is_number(cell: str) -> bool:
        try:
            float(cell)
            return True
        except ValueError:
            return False

    header: list[str] | None = None
    if has_header is True or (has_header is None and not all(is_number(c) for c in rows[0])):
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
        if not rows:
            raise CsvParseError(f"{path}: header only, no data rows")

    width = len(rows[0])
    data = np.empty((len(rows), width), dtype=float)
    for r, row in enumerate(rows):
        if len(row) != width:
            raise CsvParseError(
                f"{path}: ragged row {r + (1 if header is not None else 0)}: "
                f"{len(row)} cells, expected {width}"
            )
        for c, cell in enumerate(row):
            try:
                data[r, c] = float(cell)
            except ValueError:
                raise CsvParseError(
                    f"{path}: non-numeric cell {cell!r} at row "
                    f"{r + (1 if header is not None else 0)}, column {c}"
                ) from None

    if time_column:
        if width < 2:
            raise CsvParseError(f"{path}: time_column requested but only one column present")
        data = data[:, 1:]
        if header is not None:
            header = header[1:]
        width -= 1

    names = tuple(header) if header is not None else tuple(f"ch{i}" for i in range(width))
    if not np.all(np.isfinite(data)):
        bad = np.argwhere(~np.isfinite(data))[0]
        raise CsvParseError(f"{path}: non-finite value at row {bad[0]}, column {bad[1]}")
    return MultiChannelSeries(values=data.T, channel_names=names)


def save_csv(series: MultiChannelSeries, path: str, write_header: bool = True) -> None:
    """Write the series with 17 significant digits so reads round-trip bit-exactly."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if write_header:
            writer.writerow(series.channel_names)
        for t in range(series.length):
            writer.writerow(f"{v:.17g}" for v in series.values[:, t])


def _segment_stationary(channel: np.ndarray) -> bool:
    """Four-segment drift heuristic.

    Stationary when (a) segment means differ pairwise by less than half the
    pooled std, and (b) the segment stds are within a factor of two of each
    other. A constant channel counts as stationary.
    """
    n = channel.size // 4
    if n < 2:
        return True
    segs = [channel[i * n:(i + 1) * n] for i in range(4)]
    means = np.array([s.mean() for s in segs])
    stds = np.array([s.std() for s in segs])
    pooled = float(np.sqrt(np.mean(stds**2)))
    if pooled == 0.0:
        return bool(means.max() - means.min() == 0.0)
    if means.max() - means.min() >= 0.5 * pooled:
        return False
    smax, smin = stds.max(), stds.min()
    if smin == 0.0:
        return bool(smax == 0.0)
    return bool(smax / smin < 2.0)


@dataclass(frozen=True)
class StationarityResult:
    """Differenced series plus the order applied per channel.

    ``warning`` is set when some channel still failed the heuristic at
    max_order; that is reported, never raised. Output index t corresponds to
    input time t + max(orders): channels differenced less than the maximum
    are trimmed from the front so all channels stay time-aligned at the end.
    """

    series: MultiChannelSeries
    orders: tuple[int, ...]
    stationary: tuple[bool, ...]
    warning: bool = field(default=False)

    @property
    def shift(self) -> int:
        return max(self.orders) if self.orders else 0


def difference_to_stationary(series: MultiChannelSeries, max_order: int) -> StationarityResult:
    """First-difference each channel 0..max_order times until the heuristic passes."""
    if max_order < 0:
        raise SeriesError("max_order must be >= 0")
    channels: list[np.ndarray] = []
    orders: list[int] = []
    flags: list[bool] = []
    for i in range(series.n_channels):
        ch = series.values[i].copy()
        order = 0
        ok = _segment_stationary(ch)
        while not ok and order < max_order:
            ch = np.diff(ch)
            order += 1
            ok = _segment_stationary(ch)
        channels.append(ch)
        orders.append(order)
        flags.append(ok)
    shift = max(orders) if orders else 0
    if shift > 0:
        aligned = [ch[shift - d:] if shift - d > 0 else ch for ch, d in zip(channels, orders)]
    else:
        aligned = channels
    out = MultiChannelSeries(values=np.vstack(aligned), channel_names=series.channel_names)
    return StationarityResult(
        series=out,
        orders=tuple(orders),
        stationary=tuple(flags),
        warning=not all(flags),
    )
