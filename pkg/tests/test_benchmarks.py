import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from core.benchmarks import (
    benchmark_frame,
    benchmark_series,
    bogus_benchmark,
    institutional_vwap,
    purchase_stats,
    realized_bogus_benchmark,
)
from core.market_model import path_from_series
from core.strategies import Fill, TradeBlotter
from core.utils.errors import DomainError


def _blotter(fills, target=None):
    target = target or sum(f.value for f in fills)
    return TradeBlotter(fills=tuple(fills), completed=True, completion_day=len(fills),
                        target_value=target, window_days=len(fills))


def test_bogus_benchmark_is_unweighted_mean():
    assert bogus_benchmark([10.0, 20.0, 30.0]) == pytest.approx(20.0)


def test_institutional_vwap_weights_by_volume():
    days = [(10.0, 1.0), (20.0, 3.0)]
    assert institutional_vwap(days) == pytest.approx(17.5)
    assert bogus_benchmark([10.0, 20.0]) == pytest.approx(15.0)


@pytest.mark.parametrize("vwaps", [[], [10.0, 0.0], [-1.0]])
def test_bogus_benchmark_rejects_bad_input(vwaps):
    with pytest.raises(DomainError):
        bogus_benchmark(vwaps)


def test_institutional_vwap_rejects_zero_volume():
    with pytest.raises(DomainError):
        institutional_vwap([(10.0, 0.0), (11.0, 0.0)])


@given(
    vwaps=st.lists(st.floats(0.01, 1e4), min_size=1, max_size=60),
    volume=st.floats(1.0, 1e9),
)
def test_equal_volume_benchmarks_coincide(vwaps, volume):
    inst = institutional_vwap((v, volume) for v in vwaps)
    assert inst == pytest.approx(bogus_benchmark(vwaps), rel=1e-12)


def test_purchase_stats_average_and_outperformance():
    blotter = _blotter([Fill(0, 100.0, 1000.0, 10.0), Fill(1, 50.0, 1000.0, 20.0)])
    stats = purchase_stats(blotter, benchmark=15.0)
    assert stats.avg_price == pytest.approx(2000.0 / 150.0)
    assert stats.outperformance == pytest.approx((15.0 - 2000.0 / 150.0) / 15.0)
    assert stats.outperformance > 0


def test_purchase_stats_rejects_zero_shares():
    blotter = _blotter([Fill(0, 0.0, 0.0, 10.0)], target=1.0)
    with pytest.raises(DomainError):
        purchase_stats(blotter, benchmark=10.0)


def test_benchmark_series_ends_at_full_window_values():
    path = path_from_series([10.0, 12.0, 11.0], vwaps=[10.0, 12.0, 11.0],
                            volumes=[1.0, 2.0, 1.0])
    series = benchmark_series(path)
    assert len(series) == 3
    assert series[-1].bogus == pytest.approx(11.0)
    assert series[-1].institutional == pytest.approx((10.0 + 24.0 + 11.0) / 4.0)
    assert series[0].twap == pytest.approx(10.0)
    assert list(benchmark_frame(path).columns) == ["day_index", "bogus", "institutional", "twap"]


def test_realized_benchmark_stops_at_last_fill():
    path = path_from_series([10.0, 20.0, 90.0], vwaps=[10.0, 20.0, 90.0])
    blotter = _blotter([Fill(0, 1.0, 10.0, 10.0), Fill(1, 1.0, 20.0, 20.0)])
    assert realized_bogus_benchmark(path, blotter) == pytest.approx(15.0)
    assert np.isclose(bogus_benchmark(path.vwaps), 40.0)


def test_benchmarks_disagree_when_volume_piles_up_late():
    vwaps = [100.0, 110.0, 120.0]
    assert bogus_benchmark(vwaps) == pytest.approx(110.0)
    assert institutional_vwap(zip(vwaps, [1e6, 1e6, 8e6])) == pytest.approx(117.0)


@given(days=st.lists(st.tuples(st.floats(0.01, 1e4), st.floats(1.0, 1e9)), min_size=1, max_size=60))
def test_benchmarks_stay_within_the_price_range(days):
    vwaps = [v for v, _ in days]
    low, high = min(vwaps) * (1 - 1e-12), max(vwaps) * (1 + 1e-12)
    assert low <= bogus_benchmark(vwaps) <= high
    assert low <= institutional_vwap(days) <= high


@given(vwaps=st.lists(st.floats(1.0, 1e4), min_size=1, max_size=60))
def test_one_more_day_moves_the_benchmark_towards_it(vwaps):
    mean = bogus_benchmark(vwaps)
    assert bogus_benchmark(vwaps + [mean * 1.5]) > mean
    assert bogus_benchmark(vwaps + [mean * 0.5]) < mean


@given(scale=st.floats(1e-3, 1e3))
def test_outperformance_ignores_the_currency_unit(scale):
    vwaps = [10.0, 12.0, 11.0]
    fills = [Fill(0, 100.0, 1000.0, 10.0), Fill(1, 50.0, 600.0, 12.0), Fill(2, 80.0, 880.0, 11.0)]
    scaled = [Fill(f.day_index, f.shares, f.value * scale, f.fill_price * scale) for f in fills]
    base = purchase_stats(_blotter(fills), bogus_benchmark(vwaps))
    rescaled = purchase_stats(_blotter(scaled), bogus_benchmark([v * scale for v in vwaps]))
    assert rescaled.outperformance == pytest.approx(base.outperformance, rel=1e-9, abs=1e-12)
    assert rescaled.avg_price == pytest.approx(base.avg_price * scale, rel=1e-12)
