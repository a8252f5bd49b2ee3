"""Forecaster: fitting, prediction, gradient correctness, serialization."""

import math

import numpy as np
import pytest

from dwgc.nar import (
    NarConfig,
    NarDivergenceError,
    NarError,
    NarModel,
    build_design,
    derive_model_seed,
    fit,
    gradient_check,
    load_model,
    predict_window,
    save_model,
)
from dwgc.series import MultiChannelSeries


def series_of(*channels):
    arr = np.asarray(channels, dtype=float)
    return MultiChannelSeries(values=arr, channel_names=tuple(f"c{i}" for i in range(arr.shape[0])))


def ar1(seed, T=500, coeff=0.9, noise=0.02):
    rng = np.random.default_rng(seed)
    y = np.zeros(T)
    e = noise * rng.standard_normal(T)
    for t in range(1, T):
        y[t] = coeff * y[t - 1] + e[t]
    return y


def hand_model(w1, b1, w2, b2, p=1, mu_in=None, sd_in=None, mu_out=0.0, sd_out=1.0):
    w1 = np.asarray(w1, dtype=float)
    width = w1.shape[1]
    return NarModel(
        config=NarConfig(lag_order=p, hidden_units=w1.shape[0]),
        target_channel=0,
        cause_channel=None,
        input_width=width,
        w_hidden=w1,
        b_hidden=np.asarray(b1, dtype=float),
        w_out=np.asarray(w2, dtype=float),
        b_out=float(b2),
        mu_in=np.zeros(width) if mu_in is None else np.asarray(mu_in, dtype=float),
        sd_in=np.ones(width) if sd_in is None else np.asarray(sd_in, dtype=float),
        mu_out=mu_out,
        sd_out=sd_out,
    )


class TestFit:
    def test_ar1_residual_near_noise_floor(self):
        y = ar1(seed=3)
        s = series_of(y)
        model = fit(s, 0, None, (0, 500), NarConfig(seed=0))
        # noise variance is 0.02^2 = 4e-4; the fit should approach that floor
        assert model.train_mse <= 2 * 4e-4

    def test_constant_series_is_learned_exactly(self):
        s = series_of(np.full(120, 3.7))
        model = fit(s, 0, None, (0, 120), NarConfig(lag_order=5, hidden_units=4, seed=1))
        assert model.train_mse <= 1e-10

    def test_informative_cause_beats_self_fit(self):
        # Channel 1 exposes, one step early, the driver that channel 0 will
        # receive; the with-cause model can exploit it, the self model cannot.
        wins = 0
        for seed in range(20):
            rng = np.random.default_rng(seed)
            T = 400
            d = rng.standard_normal(T)
            y0 = np.zeros(T)
            for t in range(2, T):
                y0[t] = 0.5 * y0[t - 1] + d[t - 2]
            y1 = np.concatenate([[0.0], d[:-1]])
            s = series_of(y0, y1)
            cfg = NarConfig(lag_order=4, hidden_units=16, seed=seed)
            m_self = fit(s, 0, None, (0, T), cfg)
            m_cause = fit(s, 0, 1, (0, T), cfg)
            if m_cause.train_mse < m_self.train_mse:
                wins += 1
        assert wins >= 18

    def test_deterministic_weights(self):
        y = ar1(seed=9, T=200)
        s = series_of(y)
        cfg = NarConfig(lag_order=5, hidden_units=8, seed=42)
        a = fit(s, 0, None, (0, 200), cfg)
        b = fit(s, 0, None, (0, 200), cfg)
        assert np.array_equal(a.w_hidden, b.w_hidden)
        assert np.array_equal(a.b_hidden, b.b_hidden)
        assert np.array_equal(a.w_out, b.w_out)
        assert a.b_out == b.b_out
        assert a.train_mse == b.train_mse

    def test_range_too_short(self):
        s = series_of(np.arange(30.0))
        with pytest.raises(NarError, match="too short"):
            fit(s, 0, None, (0, 15), NarConfig(lag_order=10))

    def test_cause_equal_target_rejected(self):
        s = series_of(np.arange(60.0), np.arange(60.0))
        with pytest.raises(NarError):
            fit(s, 1, 1, (0, 60), NarConfig(lag_order=3))

    def test_divergence_names_epoch(self):
        y = ar1(seed=2, T=200)
        s = series_of(y)
        cfg = NarConfig(lag_order=3, hidden_units=4, learning_rate=1e300, seed=0)
        with pytest.raises(NarDivergenceError, match=r"epoch \d+"):
            fit(s, 0, None, (0, 200), cfg)

    def test_overshoot_step_reverts_to_finite_weights(self):
        # an aggressive but finite rate trips the uphill guard rather than
        # diverging; the returned weights must be the pre-overshoot ones
        y = ar1(seed=4, T=300)
        s = series_of(y)
        cfg = NarConfig(lag_order=3, hidden_units=8, learning_rate=10.0, seed=0)
        model = fit(s, 0, None, (0, 300), cfg)
        assert np.all(np.isfinite(model.w_hidden))
        assert np.all(np.isfinite(model.w_out))
        assert np.isfinite(model.train_mse)

    def test_all_weights_finite_after_training(self):
        y = ar1(seed=7)
        s = series_of(y)
        m = fit(s, 0, None, (0, 500), NarConfig(seed=3))
        for arr in (m.w_hidden, m.b_hidden, m.w_out):
            assert np.all(np.isfinite(arr))
        assert math.isfinite(m.b_out)

    def test_input_width_matches_variant(self):
        y = ar1(seed=1, T=200)
        z = ar1(seed=2, T=200)
        s = series_of(y, z)
        p = 6
        cfg = NarConfig(lag_order=p, hidden_units=4, seed=0)
        assert fit(s, 0, None, (0, 200), cfg).input_width == p
        assert fit(s, 0, 1, (0, 200), cfg).input_width == 2 * p


class TestPredictWindow:
    def test_identity_on_last_value(self):
        # near-linear tanh regime: hidden weight tiny, output weight huge
        model = hand_model(w1=[[1e-8]], b1=[0.0], w2=[1e8], b2=0.0, p=1)
        y = np.array([0.3, -1.2, 0.7, 2.0, -0.4, 1.1])
        s = series_of(y)
        pred = predict_window(model, s, (1, 5))
        assert pred == pytest.approx(y[0:5], abs=1e-9)

    def test_single_point_window(self):
        model = hand_model(w1=[[1e-8]], b1=[0.0], w2=[1e8], b2=0.0, p=1)
        s = series_of(np.array([1.0, 2.0, 3.0]))
        pred = predict_window(model, s, (2, 2))
        assert pred.shape == (1,)
        assert pred[0] == pytest.approx(2.0, abs=1e-9)

    def test_hand_forward_pass(self):
        model = hand_model(
            w1=[[0.5]], b1=[0.2], w2=[0.7], b2=-0.1,
            p=1, mu_in=[1.0], sd_in=[2.0], mu_out=0.5, sd_out=3.0,
        )
        y = np.array([0.4, 1.6, -0.8, 2.2, 0.9])
        s = series_of(y)
        pred = predict_window(model, s, (1, 3))
        for idx, t in enumerate(range(1, 4)):
            x_std = (y[t - 1] - 1.0) / 2.0
            expect = (0.7 * math.tanh(0.5 * x_std + 0.2) - 0.1) * 3.0 + 0.5
            assert abs(pred[idx] - expect) <= 1e-12

    def test_insufficient_history_rejected(self):
        model = hand_model(w1=[[0.1, 0.1]], b1=[0.0], w2=[1.0], b2=0.0, p=2)
        s = series_of(np.arange(10.0))
        with pytest.raises(NarError, match="history"):
            predict_window(model, s, (1, 4))

    def test_window_end_out_of_range(self):
        model = hand_model(w1=[[0.1]], b1=[0.0], w2=[1.0], b2=0.0, p=1)
        s = series_of(np.arange(10.0))
        with pytest.raises(NarError):
            predict_window(model, s, (5, 10))

    def test_temporal_precedence(self):
        y = ar1(seed=5, T=120)
        s = series_of(y)
        model = fit(s, 0, None, (0, 100), NarConfig(lag_order=4, hidden_units=4, seed=0))
        base = predict_window(model, s, (50, 60))

        # corrupting everything at and after the window's last input time + 1
        mutated = y.copy()
        mutated[60:] = 1e6
        pred = predict_window(model, series_of(mutated), (50, 60))
        # predictions at t use lags t-1..t-4 only, so t=60 reads up to 59
        assert np.array_equal(pred, base)

        # the first prediction (t=50) must ignore everything from t=50 on
        mutated2 = y.copy()
        mutated2[50:] = -1e6
        pred2 = predict_window(model, series_of(mutated2), (50, 60))
        assert pred2[0] == base[0]


class TestBuildDesign:
    def test_lag_layout_most_recent_first(self):
        vals = np.array([[10.0, 11.0, 12.0, 13.0, 14.0]])
        x, y = build_design(vals, 0, None, 2, 2, 4)
        assert y.tolist() == [12.0, 13.0]
        assert x.tolist() == [[11.0, 10.0], [12.0, 11.0]]

    def test_cause_columns_appended(self):
        vals = np.array([[1.0, 2.0, 3.0, 4.0], [10.0, 20.0, 30.0, 40.0]])
        x, _ = build_design(vals, 0, 1, 2, 2, 3)
        assert x.tolist() == [[2.0, 1.0, 20.0, 10.0]]


class TestGradientCheck:
    def test_random_instances_within_tolerance(self):
        for seed in range(5):
            rng = np.random.default_rng(seed)
            model = hand_model(
                w1=rng.uniform(-0.5, 0.5, size=(4, 3)),
                b1=rng.uniform(-0.5, 0.5, size=4),
                w2=rng.uniform(-0.5, 0.5, size=4),
                b2=float(rng.uniform(-0.5, 0.5)),
                p=3,
            )
            x = rng.standard_normal((32, 3))
            y = rng.standard_normal(32)
            assert gradient_check(model, x, y) <= 1e-4

    def test_zero_model_zero_batch(self):
        model = hand_model(w1=np.zeros((2, 1)), b1=np.zeros(2), w2=np.zeros(2), b2=0.0, p=1)
        dev = gradient_check(model, np.zeros((4, 1)), np.zeros(4))
        assert dev <= 1e-12

    def test_empty_batch_rejected(self):
        model = hand_model(w1=np.zeros((2, 1)), b1=np.zeros(2), w2=np.zeros(2), b2=0.0, p=1)
        with pytest.raises(NarError):
            gradient_check(model, np.zeros((0, 1)), np.zeros(0))


class TestSeedDerivation:
    def test_distinct_within_base(self):
        seen = {
            derive_model_seed(5, t, wc) for t in range(3) for wc in (False, True)
        }
        assert len(seen) == 6

    def test_disjoint_across_bases(self):
        a = {derive_model_seed(1, t, wc) for t in range(4) for wc in (False, True)}
        b = {derive_model_seed(2, t, wc) for t in range(4) for wc in (False, True)}
        assert not (a & b)


class TestSerialization:
    def test_roundtrip_predictions_bit_exact(self, tmp_path):
        y = ar1(seed=6, T=250)
        z = ar1(seed=7, T=250)
        s = series_of(y, z)
        model = fit(s, 0, 1, (0, 200), NarConfig(lag_order=6, hidden_units=8, seed=2))
        p = tmp_path / "m.json"
        save_model(model, str(p))
        back = load_model(str(p))
        w = (210, 240)
        assert np.array_equal(predict_window(back, s, w), predict_window(model, s, w))
        assert back.config == model.config
        assert back.train_range == model.train_range
