"""
Value-at-Risk for buy-back programmes.

The closed form treats the whole programme value as a one-shot exposure,
VaR = V * z * sigma * sqrt(T) with T in years. The Monte Carlo estimate
simulates driftless GBM terminal prices; the loss of a fixed-value programme
is two-sided (a move either way changes how many shares the money buys), so
its quantile is taken on |S_T / S_0 - 1|.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy import optimize, stats

from core.helper import _rng
from core.utils.errors import ParameterError
from core.utils.event_system import EventSystem

MIN_MC_PATHS = 1_000
DEFAULT_BLOCK_SIZE = 4096


@dataclass(frozen=True)
class VarQuery:
    value: float
    z: float
    sigma_annual: float
    horizon_days: int
    days_per_year: int = 252

    def __post_init__(self):
        if self.value < 0 or self.sigma_annual < 0:
            raise ParameterError("value and sigma must be non-negative")
        if not self.z > 0:
            raise ParameterError("z must be > 0")
        if not self.horizon_days > 0 or not self.days_per_year > 0:
            raise ParameterError("horizon_days and days_per_year must be > 0")

    @property
    def horizon_years(self):
        return self.horizon_days / self.days_per_year


@dataclass(frozen=True)
class VarReport:
    closed_form: float
    mc_estimate: float
    mc_paths: int
    percentile: float
    residual_profile: tuple
    exact_lognormal: float = float("nan")


def closed_form_var(q):
    """V * z * sigma * sqrt(horizon_days / days_per_year)."""
    return q.value * q.z * q.sigma_annual * math.sqrt(q.horizon_years)


def market_aggregate_var(total_buybacks, affected_share, z, sigma_annual, horizon_days,
                         days_per_year=250):
    """Closed-form VaR of the share of market buy-backs run against a given benchmark."""
    if not 0.0 <= affected_share <= 1.0:
        raise ParameterError("affected_share must be in [0, 1]")
    return closed_form_var(VarQuery(total_buybacks * affected_share, z, sigma_annual,
                                    horizon_days, days_per_year))


def z_for_percentile(percentile):
    """Two-sided standard-normal quantile: 0.05 -> 1.96, 0.32 -> ~0.99."""
    return float(stats.norm.ppf(1.0 - percentile / 2.0))


def percentile_for_z(z):
    """Inverse of ``z_for_percentile``."""
    return float(2.0 * stats.norm.sf(z))


def _check_mc(percentile, n_paths):
    if n_paths < MIN_MC_PATHS:
        raise ParameterError(f"need at least {MIN_MC_PATHS} paths, got {n_paths}")
    if not 0.0 < percentile <= 0.5:
        raise ParameterError("percentile must be in (0, 0.5]")


def _log_increments(config, rng, n_paths):
    """Driftless daily log increments, shape (n_paths, horizon)."""
    sigma = config.sigma_schedule()
    dt = config.dt
    eps = rng.standard_normal((n_paths, config.horizon_days))
    return -0.5 * sigma ** 2 * dt + sigma * math.sqrt(dt) * eps


def _terminal_block(config, block_index, size):
    rng = _rng.stream(config.master_seed, _rng.TAG_VAR_BLOCK, block_index)
    return np.exp(_log_increments(config, rng, size).sum(axis=1))


def _run_blocks(worker, sizes, workers, event_name):
    def job(item):
        index, size = item
        result = worker(index, size)
        EventSystem.publish(event_name, index, len(sizes))
        return result

    items = list(enumerate(sizes))
    if workers is None or workers <= 1:
        return [job(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # map preserves block order whatever the completion order
        return list(pool.map(job, items))


def simulate_terminal_ratios(config, n_paths, workers=None, block_size=DEFAULT_BLOCK_SIZE):
    """S_T / S_0 for ``n_paths`` driftless GBM paths, in block order."""
    sizes = _rng.block_sizes(n_paths, block_size)
    blocks = _run_blocks(
        lambda i, n: _terminal_block(config, i, n), sizes, workers, "mc.block_done")
    return np.concatenate(blocks)


def mc_var(config, value, percentile, n_paths, workers=None, block_size=DEFAULT_BLOCK_SIZE):
    """
    Monte Carlo VaR: the (1 - percentile) quantile of value * |S_T / S_0 - 1|.

    Deterministic for a given ``config.master_seed``, whatever ``workers`` is.
    """
    _check_mc(percentile, n_paths)
    ratios = simulate_terminal_ratios(config, n_paths, workers, block_size)
    losses = value * np.abs(ratios - 1.0)
    return float(np.quantile(losses, 1.0 - percentile))


def exact_lognormal_var(config, value, percentile):
    """Exact (1 - percentile) quantile of value * |S_T / S_0 - 1| under driftless GBM."""
    if not 0.0 < percentile <= 0.5:
        raise ParameterError("percentile must be in (0, 0.5]")
    sigma = config.sigma_schedule()
    total_var = float(np.sum(sigma ** 2) * config.dt)
    if total_var == 0.0:
        return 0.0
    mean, sd = -0.5 * total_var, math.sqrt(total_var)

    def tail(x):
        up = stats.norm.sf((math.log1p(x) - mean) / sd)
        down = stats.norm.cdf((math.log1p(-x) - mean) / sd) if x < 1.0 else 0.0
        return up + down - percentile

    upper = 1.0
    while tail(upper) > 0:
        upper *= 2.0
    return value * optimize.brentq(tail, 0.0, upper, xtol=1e-14)


def residual_var_profile(config, value, unwind_days, z):
    """
    Residual VaR of a uniform (TWAP) unwind over ``unwind_days``.

    The entry for day d is z * sigma_daily * value * sqrt(sum over the remaining
    days k of ((N - k + 1) / N)^2); it reaches 0 at day N.
    """
    if unwind_days < 1:
        raise ParameterError("unwind_days must be >= 1")
    n = int(unwind_days)
    fractions = (np.arange(n, 0, -1) / n) ** 2
    # Suffix sums: remaining[d] = sum_{k=d+1..N} ((N-k+1)/N)^2
    remaining = np.concatenate((np.cumsum(fractions[::-1])[::-1], [0.0]))
    scale = z * config.sigma_daily * value
    return [(d, float(scale * math.sqrt(remaining[d]))) for d in range(n + 1)]


def residual_var_durations(config, value, z, durations=(30, 60, 90, 120)):
    """Day-0 residual VaR for several unwind lengths."""
    return {n: residual_var_profile(config, value, n, z)[0][1] for n in durations}


def var_report(config, value, percentile, n_paths, unwind_days=None, workers=None,
               block_size=DEFAULT_BLOCK_SIZE):
    """Closed form, Monte Carlo and residual profile in one report."""
    z = z_for_percentile(percentile)
    query = VarQuery(value, z, config.sigma_annual, config.horizon_days,
                     config.trading_days_per_year)
    return VarReport(
        closed_form=closed_form_var(query),
        mc_estimate=mc_var(config, value, percentile, n_paths, workers, block_size),
        mc_paths=n_paths,
        percentile=percentile,
        residual_profile=tuple(residual_var_profile(config, value,
                                                    unwind_days or config.horizon_days, z)),
        exact_lognormal=exact_lognormal_var(config, value, percentile),
    )


def _fan_block(config, block_index, size):
    rng = _rng.stream(config.master_seed, _rng.TAG_FAN_BLOCK, block_index)
    return config.initial_price * np.exp(np.cumsum(_log_increments(config, rng, size), axis=1))


def fan_chart(config, n_paths, value=1.0, percentiles=(0.01, 0.05), workers=None,
              block_size=DEFAULT_BLOCK_SIZE):
    """
    Fan chart data: per-day adverse-move VaR curves plus terminal prices.

    Returns:
        tuple: (curves DataFrame with one ``var_<pct>`` column per percentile,
                terminal prices as a 1-D array)
    """
    sizes = _rng.block_sizes(n_paths, block_size)
    prices = np.vstack(_run_blocks(
        lambda i, n: _fan_block(config, i, n), sizes, workers, "mc.block_done"))
    moves = np.abs(prices / config.initial_price - 1.0)
    curves = {"day_index": np.arange(config.horizon_days)}
    for pct in percentiles:
        curves[f"var_{pct:g}"] = value * np.quantile(moves, 1.0 - pct, axis=0)
    return pd.DataFrame(curves), prices[:, -1]


def residual_profile_frame(profile):
    return pd.DataFrame(profile, columns=["day_index", "residual_var"])
