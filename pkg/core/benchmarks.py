"""
Execution benchmarks and purchase-price statistics.

Two multi-day "VWAP" benchmarks are in use for buy-back programmes:

* the bogus benchmark ``B``: unweighted mean of the daily VWAPs, and
* the institutional VWAP: daily VWAPs weighted by each day's market volume.

They coincide only when every day trades the same volume.
"""

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd

from core.utils.errors import DomainError

BENCHMARK_CSV_COLUMNS = ["day_index", "bogus", "institutional", "twap"]


@dataclass(frozen=True)
class BenchmarkSeries:
    day_index: int
    bogus: float
    institutional: float
    twap: float


@dataclass(frozen=True)
class PurchaseStats:
    gross_value: float
    shares: float
    avg_price: float
    outperformance: float


def bogus_benchmark(daily_vwaps: Sequence[float]):
    """Arithmetic mean of daily VWAPs."""
    vwaps = np.asarray(daily_vwaps, dtype=float)
    if vwaps.size == 0:
        raise DomainError("bogus benchmark needs at least one daily VWAP")
    if (vwaps <= 0).any():
        raise DomainError("daily VWAPs must be positive")
    return math.fsum(vwaps) / vwaps.size


def institutional_vwap(days):
    """
    Volume-weighted multi-day VWAP.

    Args:
        days: sequence of ``(vwap, volume)`` pairs

    Returns:
        float: sum(vwap * volume) / sum(volume)
    """
    pairs = np.asarray(list(days), dtype=float).reshape(-1, 2)
    if pairs.shape[0] == 0:
        raise DomainError("institutional VWAP needs at least one day")
    vwaps, volumes = pairs[:, 0], pairs[:, 1]
    if (volumes < 0).any():
        raise DomainError("volumes must be non-negative")
    total_volume = math.fsum(volumes)
    if total_volume <= 0:
        raise DomainError("total volume is zero")
    return math.fsum(vwaps * volumes) / total_volume


def benchmark_series(path):
    """Running benchmarks for every prefix 0..t of a path."""
    vwaps, volumes, closes = path.vwaps, path.volumes, path.closes
    count = np.arange(1, len(vwaps) + 1)
    bogus = np.cumsum(vwaps) / count
    institutional = np.cumsum(vwaps * volumes) / np.cumsum(volumes)
    twap = np.cumsum(closes) / count
    return [
        BenchmarkSeries(i, float(b), float(inst), float(tw))
        for i, (b, inst, tw) in enumerate(zip(bogus, institutional, twap))
    ]


def benchmark_frame(path):
    """Running benchmarks as a DataFrame, ready for CSV export."""
    rows = benchmark_series(path)
    return pd.DataFrame([vars(r) for r in rows], columns=BENCHMARK_CSV_COLUMNS)


def purchase_stats(blotter, benchmark):
    """
    Average purchase price A and outperformance O = (B - A) / B.

    Args:
        blotter (TradeBlotter): executed fills
        benchmark (float): benchmark price B
    """
    fills = blotter.fills
    if not fills:
        raise DomainError("blotter is empty")
    shares = math.fsum(f.shares for f in fills)
    if shares <= 0:
        raise DomainError("blotter bought zero shares")
    if benchmark <= 0:
        raise DomainError("benchmark must be positive")
    gross = math.fsum(f.value for f in fills)
    avg_price = gross / shares
    return PurchaseStats(
        gross_value=gross,
        shares=shares,
        avg_price=avg_price,
        outperformance=(benchmark - avg_price) / benchmark,
    )


def realized_bogus_benchmark(path, blotter):
    """Bogus benchmark over the blotter's realized window (day 0 to its last day)."""
    last_day = blotter.fills[-1].day_index if blotter.fills else 0
    return bogus_benchmark(path.vwaps[: last_day + 1])
