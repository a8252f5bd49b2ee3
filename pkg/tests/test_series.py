"""Series container, windowing, CSV round-trips, stationarity prep."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dwgc.series import (
    CsvParseError,
    MultiChannelSeries,
    SeriesError,
    SplitSpec,
    StationarityResult,
    WindowSpec,
    difference_to_stationary,
    load_csv,
    save_csv,
    windows,
)


def make_series(values, names=None):
    arr = np.asarray(values, dtype=float)
    if names is None:
        names = tuple(f"ch{i}" for i in range(arr.shape[0]))
    return MultiChannelSeries(values=arr, channel_names=names)


class TestWindows:
    def test_exact_tiling(self):
        assert windows(10, WindowSpec(k=5, stride=5)) == [(0, 4), (5, 9)]

    def test_partial_tail_dropped(self):
        assert windows(10, WindowSpec(k=4, stride=4)) == [(0, 3), (4, 7)]

    def test_short_series_empty(self):
        assert windows(3, WindowSpec(k=5)) == []

    def test_origin_offsets_windows(self):
        assert windows(12, WindowSpec(k=4, stride=4, origin=2)) == [(2, 5), (6, 9)]

    def test_overlapping_stride(self):
        assert windows(8, WindowSpec(k=4, stride=2)) == [(0, 3), (2, 5), (4, 7)]

    def test_stride_defaults_to_k(self):
        spec = WindowSpec(k=7)
        assert spec.stride == 7

    def test_k_below_two_rejected(self):
        with pytest.raises(SeriesError):
            WindowSpec(k=1)

    @given(
        length=st.integers(min_value=0, max_value=300),
        k=st.integers(min_value=2, max_value=40),
        stride=st.integers(min_value=1, max_value=40),
        origin=st.integers(min_value=0, max_value=50),
    )
    def test_windows_inside_bounds_and_sorted(self, length, k, stride, origin):
        out = windows(length, WindowSpec(k=k, stride=stride, origin=origin))
        for s, e in out:
            assert 0 <= s <= e < length
            assert e - s + 1 == k
        starts = [s for s, _ in out]
        assert starts == sorted(starts)
        if len(starts) > 1:
            assert all(b - a == stride for a, b in zip(starts, starts[1:]))


class TestMultiChannelSeries:
    def test_values_read_only(self):
        s = make_series([[1.0, 2.0, 3.0]])
        with pytest.raises(ValueError):
            s.values[0, 0] = 9.0

    def test_nan_rejected_with_location(self):
        with pytest.raises(SeriesError, match="channel 1"):
            make_series([[1.0, 2.0], [np.nan, 4.0]])

    def test_name_count_mismatch(self):
        with pytest.raises(SeriesError):
            MultiChannelSeries(values=np.zeros((2, 5)), channel_names=("only",))

    def test_accessors(self):
        s = make_series([[1.0, 2.0], [3.0, 4.0]], names=("a", "b"))
        assert s.n_channels == 2
        assert s.length == 2
        assert s.channel(1).tolist() == [3.0, 4.0]


class TestSplitSpec:
    def test_default_fraction_floor(self):
        # int(1000 * 0.3) = 300
        assert SplitSpec().train_size(1000, 10) == 300

    def test_floor_not_round(self):
        assert SplitSpec(train_fraction=0.3).train_size(9, 1) == 2

    def test_too_short_for_lag(self):
        with pytest.raises(SeriesError):
            SplitSpec(train_fraction=0.04).train_size(260, 10)

    def test_fraction_bounds(self):
        with pytest.raises(SeriesError):
            SplitSpec(train_fraction=0.0)
        with pytest.raises(SeriesError):
            SplitSpec(train_fraction=1.0)


class TestCsv:
    def test_roundtrip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(5)
        s = make_series(rng.standard_normal((3, 40)), names=("x", "y", "z"))
        p = tmp_path / "s.csv"
        save_csv(s, str(p))
        back = load_csv(str(p))
        assert back.channel_names == ("x", "y", "z")
        assert np.array_equal(back.values, s.values)

    def test_header_names_used(self, tmp_path):
        p = tmp_path / "named.csv"
        p.write_text("enso,mke\n1.0,2.0\n3.0,4.0\n")
        s = load_csv(str(p))
        assert s.channel_names == ("enso", "mke")
        assert s.values.shape == (2, 2)

    def test_headerless_autodetect(self, tmp_path):
        p = tmp_path / "plain.csv"
        p.write_text("1.0,2.0\n3.0,4.0\n")
        s = load_csv(str(p))
        assert s.channel_names == ("ch0", "ch1")
        assert s.values[0].tolist() == [1.0, 3.0]

    def test_non_numeric_cell_names_row(self, tmp_path):
        p = tmp_path / "bad.csv"
        lines = ["a,b"] + [f"{i}.0,{i}.5" for i in range(6)] + ["abc,7.5", "8.0,8.5"]
        p.write_text("\n".join(lines) + "\n")
        with pytest.raises(CsvParseError, match="row 7"):
            load_csv(str(p))

    def test_ragged_row_rejected(self, tmp_path):
        p = tmp_path / "ragged.csv"
        p.write_text("1.0,2.0\n3.0\n")
        with pytest.raises(CsvParseError, match="ragged"):
            load_csv(str(p))

    def test_time_column_dropped(self, tmp_path):
        p = tmp_path / "timed.csv"
        p.write_text("t,v\n0,1.5\n1,2.5\n2,3.5\n")
        s = load_csv(str(p), time_column=True)
        assert s.channel_names == ("v",)
        assert s.values[0].tolist() == [1.5, 2.5, 3.5]

    def test_empty_file(self, tmp_path):
        p = tmp_path / "empty.csv"
        p.write_text("")
        with pytest.raises(CsvParseError):
            load_csv(str(p))


class TestStationarity:
    def test_linear_trend_needs_one_difference(self):
        t = np.arange(200, dtype=float)
        s = make_series([t])
        res = difference_to_stationary(s, max_order=2)
        assert res.orders == (1,)
        assert res.stationary == (True,)
        assert res.shift == 1
        assert res.series.length == 199

    def test_white_noise_left_alone(self):
        hits = 0
        for seed in range(20):
            rng = np.random.default_rng(seed)
            s = make_series([rng.standard_normal(400)])
            res = difference_to_stationary(s, max_order=2)
            if res.orders == (0,):
                hits += 1
        assert hits >= 18

    def test_mixed_orders_stay_aligned(self):
        t = np.arange(300, dtype=float)
        rng = np.random.default_rng(11)
        flat = rng.standard_normal(300)
        s = make_series([t, flat])
        res = difference_to_stationary(s, max_order=2)
        assert res.orders == (1, 0)
        assert res.shift == 1
        # both channels end at the original final time step
        assert res.series.length == 299
        assert res.series.values[1, -1] == flat[-1]

    def test_quadratic_trend_order_two(self):
        t = np.arange(300, dtype=float)
        s = make_series([t * t])
        res = difference_to_stationary(s, max_order=2)
        assert res.orders == (2,)

    def test_warning_when_max_order_insufficient(self):
        t = np.arange(300, dtype=float)
        s = make_series([t * t * t])
        res = difference_to_stationary(s, max_order=1)
        assert res.warning
        assert res.stationary == (False,)

    def test_shift_empty_guard(self):
        r = StationarityResult(
            series=make_series([[1.0, 2.0]]), orders=(0,), stationary=(True,)
        )
        assert r.shift == 0
