"""Smoke tests for the python module: thin checks that the bound
operations work end to end, not a re-test of the C++ suite."""

import math

import pytest

import sbn


def test_parameter_counts_match_the_standard_configurations():
    assert sbn.make_model(["none"]).parameter_count == 238
    assert sbn.make_model(["weekly"]).parameter_count == 399
    assert sbn.make_model(["daily"]).parameter_count == 527
    assert sbn.make_model(["weekly", "daily"]).parameter_count == 624
    full = sbn.make_model(["weekly", "daily", "hourly"])
    assert full.parameter_count == 1457
    assert full.layer_count == 9
    assert full.stages == [("weekly", 2), ("daily", 6), ("hourly", 24)]


def test_synthetic_generation_is_deterministic():
    a = sbn.generate_synthetic(n_hours=500, seed=11)
    b = sbn.generate_synthetic(n_hours=500, seed=11)
    c = sbn.generate_synthetic(n_hours=500, seed=12)
    assert len(a) == 500
    assert a.energy == b.energy
    assert a.energy != c.energy
    assert a.start == "2013-01-01T00:00:00"


def test_nrmse_hand_case():
    assert sbn.nrmse([1.0, 3.0], [0.0, 2.0]) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        sbn.nrmse([1.0, 2.0], [3.0, 3.0])


def test_train_forecast_evaluate_roundtrip(tmp_path):
    series = sbn.generate_synthetic(n_hours=24 * 130, seed=3)
    model = sbn.make_model(["weekly"], dropout=0.2, seed=3)
    history = sbn.train(model, series, 0, len(series) - 1, epochs=3, seed=3)
    assert len(history) == 3
    assert all(math.isfinite(h["weighted_loss"]) for h in history)

    origin = 24 * 100
    window = sbn.forecast(model, series, origin, horizon=24)
    assert len(window) == 24
    assert len(window[0]["forecasts"]) == 2  # instant + weekly output

    path = str(tmp_path / "model.json")
    sbn.save_model(model, path)
    back = sbn.load_model(path)
    window2 = sbn.forecast(back, series, origin, horizon=24)
    assert window[5]["forecasts"] == window2[5]["forecasts"]

    report = sbn.evaluate(model, series, 24 * 110, 24 * 130 - 1, horizon=24)
    assert report["n_origins"] > 0
    assert all(v >= 0 for v in report["stage_nrmse_pct"])


def test_csv_roundtrip(tmp_path):
    series = sbn.generate_synthetic(n_hours=200, seed=5)
    path = str(tmp_path / "series.csv")
    sbn.write_csv(series, path)
    back, info = sbn.ingest_csv(path)
    assert info["rows"] == 200
    assert back.energy == series.energy


def test_historical_residuals_skip_signal():
    series = sbn.generate_synthetic(n_hours=600, seed=7)
    model = sbn.make_model(["none"], seed=7)
    sbn.fit_normalizer(model, series, 0, 599)
    values = sbn.historical_residuals(model, series, [5, 100], 0)
    assert math.isnan(values[0])  # not enough temperature history
    assert math.isfinite(values[1])
