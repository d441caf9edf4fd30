import math
from fractions import Fraction

import pytest

from core.experiments import (
    MAX_DP_FLIPS,
    CoinGameSpec,
    StoppingPolicy,
    benchmark_beat_study,
    coin_game_exact,
    coin_game_mc,
    comparison_table,
    fixed_horizon_exact,
    multiplier_sensitivity,
    outperformance_histogram,
    volatility_collapse_comparison,
)
from core.market_model import ScenarioConfig
from core.strategies import RegulatoryLimits, StrategyKind, StrategyParams
from core.utils.errors import ParameterError

STUDY_MARKET = ScenarioConfig(sigma_annual=0.35, horizon_days=125, trading_days_per_year=250,
                              master_seed=21)
STUDY_LIMITS = RegulatoryLimits(max_participation=0.25, max_days=125)
ADAPTIVE = StrategyParams(kind=StrategyKind.ADAPTIVE_BROKER, target_value=1e8)


def test_fixed_horizon_exact_binomial():
    exact = fixed_horizon_exact(100)
    assert exact == Fraction(2 ** 100 - math.comb(100, 50), 2 ** 101)
    assert float(exact) == pytest.approx(0.4602, abs=1e-4)
    assert fixed_horizon_exact(101) == Fraction(1, 2)


def test_dp_fixed_horizon_matches_binomial():
    result = coin_game_exact(CoinGameSpec(100, 100, StoppingPolicy.FIXED_HORIZON))
    assert result.win_probability == pytest.approx(float(fixed_horizon_exact(100)), abs=1e-12)
    assert result.tie_probability == pytest.approx(math.comb(100, 50) / 2 ** 100, abs=1e-12)
    assert result.tie_probability == pytest.approx(0.0796, abs=1e-4)


def test_policy_dominance_chain():
    fixed = coin_game_exact(CoinGameSpec(100, 150, StoppingPolicy.FIXED_HORIZON))
    ahead = coin_game_exact(CoinGameSpec(100, 150, StoppingPolicy.STOP_WHEN_AHEAD))
    optimal = coin_game_exact(CoinGameSpec(100, 150, StoppingPolicy.STOP_OPTIMAL))
    assert ahead.win_probability > fixed.win_probability
    assert optimal.win_probability >= ahead.win_probability - 1e-12
    # stopping whenever ahead is already optimal for this payoff
    assert optimal.win_probability == pytest.approx(ahead.win_probability, abs=1e-12)


def test_single_flip_window_collapses_policies():
    fixed = coin_game_exact(CoinGameSpec(120, 120, StoppingPolicy.FIXED_HORIZON))
    ahead = coin_game_exact(CoinGameSpec(120, 120, StoppingPolicy.STOP_WHEN_AHEAD))
    assert fixed.win_probability == ahead.win_probability


def test_dp_conserves_probability_mass():
    result = coin_game_exact(CoinGameSpec(20, 40, StoppingPolicy.STOP_OPTIMAL))
    assert all(m == pytest.approx(1.0, abs=1e-12) for m in result.layer_masses)


def test_mc_agrees_with_dp():
    spec = CoinGameSpec(100, 150, StoppingPolicy.STOP_WHEN_AHEAD, trials=1_000_000)
    exact = coin_game_exact(spec).win_probability
    assert coin_game_mc(spec, seed=3, workers=4) == pytest.approx(exact, abs=0.005)


def test_mc_is_deterministic_across_workers():
    spec = CoinGameSpec(10, 20, StoppingPolicy.FIXED_HORIZON, trials=50_000)
    assert coin_game_mc(spec, seed=1, workers=1, block_size=8_000) == \
        coin_game_mc(spec, seed=1, workers=4, block_size=8_000)


@pytest.mark.parametrize("kwargs", [
    {"n_min": 0, "n_max": 10},
    {"n_min": 20, "n_max": 10},
    {"n_min": 1, "n_max": 10, "trials": 0},
])
def test_game_parameters_are_validated(kwargs):
    with pytest.raises(ParameterError):
        CoinGameSpec(**kwargs)


def test_dp_size_limit():
    with pytest.raises(ParameterError):
        coin_game_exact(CoinGameSpec(10, MAX_DP_FLIPS + 1))


def test_comparison_table_rows():
    table = comparison_table(30, 40)
    assert list(table["policy"]) == [p.value for p in StoppingPolicy]
    assert "mc_win_probability" not in table.columns


def test_adaptive_broker_rarely_underperforms():
    result = benchmark_beat_study(ADAPTIVE, STUDY_MARKET, 10_000, STUDY_LIMITS, workers=4)
    assert result.n_paths == 10_000
    assert result.underperformance_rate < 0.01
    assert result.win_probability > 0.99
    assert result.completion_rate == pytest.approx(1.0)


def test_twap_without_volatility_never_deviates():
    flat = STUDY_MARKET.with_changes(sigma_annual=0.0, volume_sigma=0.0)
    twap = StrategyParams(kind=StrategyKind.TWAP, target_value=1e8)
    result = benchmark_beat_study(twap, flat, 1_000, STUDY_LIMITS)
    assert result.outperformance_distribution["mean"] == pytest.approx(0.0, abs=1e-12)
    assert max(abs(o) for o in result.outperformance) < 1e-12


def test_study_is_deterministic_across_workers():
    a = benchmark_beat_study(ADAPTIVE, STUDY_MARKET, 1_000, STUDY_LIMITS, workers=1)
    b = benchmark_beat_study(ADAPTIVE, STUDY_MARKET, 1_000, STUDY_LIMITS, workers=4, block_size=300)
    assert a.outperformance == b.outperformance
    assert len(outperformance_histogram(a, bins=20)) == 20


def test_study_needs_enough_paths():
    with pytest.raises(ParameterError):
        benchmark_beat_study(ADAPTIVE, STUDY_MARKET, 10, STUDY_LIMITS)


def test_multiplier_grid():
    table = multiplier_sensitivity(ADAPTIVE, STUDY_MARKET, 1_000, STUDY_LIMITS,
                                   fast_mults=(2.0, 4.0), trickle_mults=(0.15,))
    assert list(table["fast_mult"]) == [2.0, 4.0]
    assert (table["underperformance_rate"] <= 1.0).all()


def test_volatility_collapse_shrinks_outperformance():
    result = volatility_collapse_comparison(ADAPTIVE, STUDY_MARKET, 1_000, STUDY_LIMITS)
    assert result["collapse_mean_outperformance"] < result["constant_mean_outperformance"]


def test_wider_window_never_hurts_optimal_stopping():
    probabilities = [
        coin_game_exact(CoinGameSpec(10, n_max, StoppingPolicy.STOP_OPTIMAL)).win_probability
        for n_max in range(10, 61, 5)
    ]
    for narrow, wide in zip(probabilities, probabilities[1:]):
        assert wide >= narrow - 1e-12
    assert probabilities[-1] > probabilities[0]


def test_study_with_gate_below_every_price_reports_untraded_paths():
    gated = StrategyParams(kind=StrategyKind.VALUATION_GATED, target_value=1e8,
                           valuation_ceiling=1.0)
    result = benchmark_beat_study(gated, STUDY_MARKET, 1_000, STUDY_LIMITS)
    assert result.untraded_paths == 1_000
    assert result.completion_rate == 0.0
    assert result.outperformance == ()
    assert math.isnan(result.win_probability)
    assert math.isnan(result.outperformance_distribution["mean"])
    assert outperformance_histogram(result)["count"].sum() == 0


def test_study_counts_infeasible_twap_paths_instead_of_failing():
    twap = StrategyParams(kind=StrategyKind.TWAP, target_value=1e10)
    result = benchmark_beat_study(twap, STUDY_MARKET, 1_000, STUDY_LIMITS)
    assert result.untraded_paths == 1_000
    assert result.completion_rate == 0.0
