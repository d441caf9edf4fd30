import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from core.market_model import ScenarioConfig
from core.risk import (
    VarQuery,
    closed_form_var,
    exact_lognormal_var,
    fan_chart,
    market_aggregate_var,
    mc_var,
    percentile_for_z,
    residual_profile_frame,
    residual_var_durations,
    residual_var_profile,
    var_report,
    z_for_percentile,
)
from core.utils.errors import ParameterError

ANNUAL_252 = ScenarioConfig(sigma_annual=0.35, horizon_days=125, trading_days_per_year=252,
                            master_seed=11)
ANNUAL_250 = ANNUAL_252.with_changes(trading_days_per_year=250)


@pytest.mark.parametrize("value, z, days_per_year, expected", [
    (870e6, 1.0, 250, 215e6),
    (280e9, 2.33, 252, 161e9),
    (280e9, 1.96, 252, 135e9),
    (1.12e12, 2.33, 252, 643e9),
    (1.12e12, 1.96, 252, 541e9),
])
def test_closed_form_reproduces_published_figures(value, z, days_per_year, expected):
    var = closed_form_var(VarQuery(value, z, 0.35, 125, days_per_year))
    assert var == pytest.approx(expected, rel=0.01)


@pytest.mark.parametrize("z, expected", [(1.0, 70e9), (2.0, 140e9)])
def test_market_aggregate_var(z, expected):
    # the published figures are rounded to the nearest 10bn
    assert market_aggregate_var(1.4e12, 0.2, z, 0.35, 125) == pytest.approx(expected, rel=0.015)


def test_market_aggregate_rejects_bad_share():
    with pytest.raises(ParameterError):
        market_aggregate_var(1e9, 1.5, 1.0, 0.35, 125)


def test_z_and_percentile_are_inverse():
    assert z_for_percentile(0.05) == pytest.approx(1.96, abs=1e-3)
    assert z_for_percentile(0.32) == pytest.approx(0.9945, abs=1e-3)
    assert percentile_for_z(1.0) == pytest.approx(0.3173, abs=1e-4)
    assert percentile_for_z(z_for_percentile(0.2)) == pytest.approx(0.2)


def test_mc_matches_exact_and_closed_form():
    mc = mc_var(ANNUAL_252, 1.0, 0.05, 100_000, workers=4)
    exact = exact_lognormal_var(ANNUAL_252, 1.0, 0.05)
    closed = closed_form_var(VarQuery(1.0, z_for_percentile(0.05), 0.35, 125, 252))
    assert mc == pytest.approx(exact, rel=0.02)
    assert mc == pytest.approx(closed, rel=0.10)


def test_mc_is_identical_across_worker_counts():
    results = {mc_var(ANNUAL_252, 1e6, 0.05, 20_000, workers=w) for w in (1, 4, 8)}
    assert len(results) == 1


def test_mc_changes_with_seed():
    a = mc_var(ANNUAL_252, 1.0, 0.05, 5_000)
    b = mc_var(ANNUAL_252.with_changes(master_seed=12), 1.0, 0.05, 5_000)
    assert a != b


@pytest.mark.parametrize("percentile, n_paths", [(0.05, 999), (0.0, 5_000), (0.6, 5_000)])
def test_mc_argument_checks(percentile, n_paths):
    with pytest.raises(ParameterError):
        mc_var(ANNUAL_252, 1.0, percentile, n_paths)


def test_exact_var_is_zero_without_volatility():
    assert exact_lognormal_var(ANNUAL_252.with_changes(sigma_annual=0.0), 1e6, 0.05) == 0.0


def test_volatility_collapse_lowers_exact_var():
    collapsed = ANNUAL_252.with_changes(regime_change_day=10, sigma_after=0.001)
    assert exact_lognormal_var(collapsed, 1.0, 0.05) < exact_lognormal_var(ANNUAL_252, 1.0, 0.05)


def test_residual_profile_shape():
    profile = residual_var_profile(ANNUAL_250, 870e6, 60, 1.0)
    values = [v for _, v in profile]
    assert len(profile) == 61
    assert values[-1] == 0.0
    assert all(a >= b for a, b in zip(values, values[1:]))
    expected = 1.0 * ANNUAL_250.sigma_daily * 870e6 * np.sqrt(sum((k / 60) ** 2 for k in range(1, 61)))
    assert values[0] == pytest.approx(expected)
    assert list(residual_profile_frame(profile).columns) == ["day_index", "residual_var"]


def test_residual_ratio_long_vs_short_unwind():
    durations = residual_var_durations(ANNUAL_250, 870e6, 1.0)
    assert set(durations) == {30, 60, 90, 120}
    assert 1.9 <= durations[120] / durations[30] <= 2.2


def test_residual_profile_needs_a_day():
    with pytest.raises(ParameterError):
        residual_var_profile(ANNUAL_250, 1.0, 0, 1.0)


def test_fan_chart_curves():
    curves, terminal = fan_chart(ANNUAL_252.with_changes(horizon_days=30), 2_000, value=1.0)
    assert len(curves) == 30
    assert terminal.shape == (2_000,)
    assert (curves["var_0.01"] >= curves["var_0.05"]).all()
    assert curves["var_0.05"].iloc[-1] > curves["var_0.05"].iloc[0]


def test_var_report_bundles_everything():
    report = var_report(ANNUAL_252, 1e6, 0.05, 5_000, unwind_days=30)
    assert report.mc_paths == 5_000
    assert len(report.residual_profile) == 31
    assert report.closed_form == pytest.approx(
        closed_form_var(VarQuery(1e6, z_for_percentile(0.05), 0.35, 125, 252)))
    assert report.exact_lognormal > 0


@given(value=st.floats(1.0, 1e12), z=st.floats(0.1, 5.0), sigma=st.floats(0.01, 2.0),
       days=st.integers(1, 500), factor=st.floats(0.1, 10.0))
def test_closed_form_scales_linearly_and_with_root_time(value, z, sigma, days, factor):
    base = closed_form_var(VarQuery(value, z, sigma, days))
    assert closed_form_var(VarQuery(value * factor, z, sigma, days)) == pytest.approx(base * factor, rel=1e-12)
    assert closed_form_var(VarQuery(value, z * factor, sigma, days)) == pytest.approx(base * factor, rel=1e-12)
    assert closed_form_var(VarQuery(value, z, sigma, 4 * days)) == pytest.approx(2 * base, rel=1e-12)


def test_mc_var_is_zero_without_volatility():
    assert mc_var(ANNUAL_252.with_changes(sigma_annual=0.0), 1e6, 0.05, 5_000) == 0.0


def test_mc_var_settles_as_paths_double():
    smaller = mc_var(ANNUAL_252, 1.0, 0.05, 100_000, workers=4)
    larger = mc_var(ANNUAL_252, 1.0, 0.05, 200_000, workers=4)
    assert larger == pytest.approx(smaller, rel=0.02)


@pytest.mark.parametrize("days", [2, 30, 125])
def test_unwinding_carries_less_risk_than_holding_everything(days):
    config = ANNUAL_250.with_changes(horizon_days=days)
    residual = residual_var_profile(config, 870e6, days, 1.0)[0][1]
    held = closed_form_var(VarQuery(870e6, 1.0, config.sigma_annual, days, config.trading_days_per_year))
    assert residual < held
