"""
Probability experiments behind the broker's optional-stopping advantage.

The coin game: flip a fair coin between ``n_min`` and ``n_max`` times and win
if heads lead tails when you stop. With a fixed horizon the win probability
is just under one half (ties lose); being allowed to stop anywhere inside a
window pushes it well above. The same structure lets a broker with a
discretionary completion date beat a running-average benchmark almost
surely, which ``benchmark_beat_study`` measures on simulated paths.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction

import numpy as np
import pandas as pd

from core.benchmarks import purchase_stats, realized_bogus_benchmark
from core.helper import _rng
from core.market_model import generate_path
from core.strategies import run_strategy
from core.utils.errors import InfeasibleError, ParameterError
from core.utils.event_system import EventSystem
from core.utils.logger import debug

MAX_DP_FLIPS = 10_000
MIN_STUDY_PATHS = 1_000
DEFAULT_PERCENTILES = (1, 5, 25, 50, 75, 95, 99)


class StoppingPolicy(str, Enum):
    FIXED_HORIZON = "FIXED_HORIZON"
    STOP_WHEN_AHEAD = "STOP_WHEN_AHEAD"
    STOP_OPTIMAL = "STOP_OPTIMAL"


@dataclass(frozen=True)
class CoinGameSpec:
    n_min: int = 100
    n_max: int = 150
    policy: StoppingPolicy = StoppingPolicy.FIXED_HORIZON
    trials: int = 1

    def __post_init__(self):
        object.__setattr__(self, "policy", StoppingPolicy(self.policy))
        if not 1 <= self.n_min <= self.n_max:
            raise ParameterError("need 1 <= n_min <= n_max")
        if self.trials < 1:
            raise ParameterError("trials must be >= 1")


@dataclass(frozen=True)
class CoinGameResult:
    win_probability: float
    tie_probability: float
    layer_masses: tuple = ()


@dataclass(frozen=True)
class StudyResult:
    win_probability: float
    underperformance_rate: float
    outperformance_distribution: dict
    completion_rate: float = 1.0
    mean_completion_day: float = float("nan")
    n_paths: int = 0
    outperformance: tuple = field(default=(), repr=False)
    untraded_paths: int = 0


def fixed_horizon_exact(n):
    """P(heads strictly ahead after n flips) as an exact fraction."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    tie = Fraction(math.comb(n, n // 2), 2 ** n) if n % 2 == 0 else Fraction(0)
    return (1 - tie) / 2


def _lead_grid(spec):
    """Lead values -offset..offset; wide enough that np.roll never wraps live mass."""
    offset = spec.n_max + 1
    return offset, np.arange(-offset, offset + 1)


def _forward(spec, stop_sets):
    """
    Forward DP over (flips, lead) for a stopping rule.

    ``stop_sets`` maps a flip count to the boolean mask of leads at which play
    stops; stopped mass wins where the lead is positive. Sums use ``math.fsum``
    so results do not depend on the grid layout.
    """
    offset, leads = _lead_grid(spec)
    ahead = leads > 0
    live = np.zeros(leads.size)
    live[offset] = 1.0
    won = lost = tie = 0.0
    masses = []
    last = max(stop_sets)
    for t in range(1, last + 1):
        # One fair flip
        live = 0.5 * (np.roll(live, 1) + np.roll(live, -1))
        if t == last:
            tie = math.fsum(live[leads == 0])
        stop = stop_sets.get(t)
        if stop is not None:
            # Stopped mass leaves the game for good
            won += math.fsum(live[stop & ahead])
            lost += math.fsum(live[stop & ~ahead])
            live[stop] = 0.0
        # Total mass stays 1
        masses.append(won + lost + math.fsum(live))
    return won, tie, tuple(masses)


def _optimal_stop_sets(spec):
    """Backward induction: stop wherever stopping is worth at least continuing."""
    offset, leads = _lead_grid(spec)
    stop_value = (leads > 0).astype(float)
    value = stop_value.copy()
    # Play must end at n_max
    sets = {spec.n_max: np.ones(leads.size, dtype=bool)}
    for t in range(spec.n_max - 1, -1, -1):
        cont = 0.5 * (np.roll(value, 1) + np.roll(value, -1))
        if t >= spec.n_min:
            sets[t] = stop_value >= cont
            value = np.maximum(stop_value, cont)
        else:
            # Stopping not allowed yet
            value = cont
    return {t: s for t, s in sets.items() if t >= 1}


def coin_game_exact(spec):
    """
    Exact win probability of the coin game by dynamic programming.

    Win means heads strictly ahead when play stops; the tie mass at the end is
    reported separately.
    """
    if spec.n_max > MAX_DP_FLIPS:
        raise ParameterError(f"n_max above {MAX_DP_FLIPS} is not supported")
    _, leads = _lead_grid(spec)
    ahead = leads > 0
    if spec.policy == StoppingPolicy.FIXED_HORIZON:
        stop_sets = {spec.n_min: ahead}
    elif spec.policy == StoppingPolicy.STOP_WHEN_AHEAD:
        stop_sets = {t: ahead for t in range(spec.n_min, spec.n_max + 1)}
    else:
        stop_sets = _optimal_stop_sets(spec)
    won, tie, masses = _forward(spec, stop_sets)
    return CoinGameResult(won, tie, masses)


def _coin_block(spec, seed, block_index, size):
    rng = _rng.stream(seed, _rng.TAG_COIN_BLOCK, block_index)
    # +1 heads, -1 tails
    steps = rng.integers(0, 2, size=(size, spec.n_max), dtype=np.int8) * 2 - 1
    leads = np.cumsum(steps, axis=1, dtype=np.int32)
    if spec.policy == StoppingPolicy.FIXED_HORIZON:
        return int((leads[:, spec.n_min - 1] > 0).sum())
    window = leads[:, spec.n_min - 1:]
    return int((window > 0).any(axis=1).sum())


def coin_game_mc(spec, seed=0, workers=None, block_size=100_000):
    """Monte Carlo estimate of the win probability; STOP_OPTIMAL plays stop-when-ahead."""
    sizes = _rng.block_sizes(spec.trials, block_size)

    def job(item):
        index, size = item
        wins = _coin_block(spec, seed, index, size)
        EventSystem.publish("mc.block_done", index, len(sizes))
        return wins

    items = list(enumerate(sizes))
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            wins = sum(pool.map(job, items))
    else:
        wins = sum(job(item) for item in items)
    return wins / spec.trials


def comparison_table(n_min=100, n_max=150, trials=None, seed=0):
    """Fixed horizon against optional stopping, exact and (optionally) simulated."""
    rows = []
    for policy in StoppingPolicy:
        spec = CoinGameSpec(n_min, n_max, policy, trials or 1)
        exact = coin_game_exact(spec)
        row = {"policy": policy.value, "n_min": n_min, "n_max": n_max,
               "win_probability": exact.win_probability, "tie_probability": exact.tie_probability}
        if trials:
            row["mc_win_probability"] = coin_game_mc(spec, seed=seed)
        rows.append(row)
    return pd.DataFrame(rows)


def _summary(values, percentiles=DEFAULT_PERCENTILES):
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return {"mean": float("nan"), "std": float("nan"),
                **{f"p{p}": float("nan") for p in percentiles}}
    summary = {"mean": float(arr.mean()), "std": float(arr.std(ddof=1)) if arr.size > 1 else 0.0}
    for p, q in zip(percentiles, np.percentile(arr, percentiles)):
        summary[f"p{p}"] = float(q)
    return summary


def _study_block(params, config, limits, start, size):
    """Outperformance per traded path, completion day per path, untraded path count."""
    outs, completions, untraded = [], [], 0
    for i in range(start, start + size):
        path = generate_path(config, i)
        try:
            blotter = run_strategy(path, params, limits)
        except InfeasibleError as e:
            debug(f"study path {i}: {e}")
            completions.append(None)
            untraded += 1
            continue
        completions.append(blotter.completion_day if blotter.completed else None)
        # Fully gated runs buy nothing and have no average price
        if blotter.total_shares <= 0:
            untraded += 1
            continue
        stats = purchase_stats(blotter, realized_bogus_benchmark(path, blotter))
        outs.append(stats.outperformance)
    return outs, completions, untraded


def benchmark_beat_study(strategy_params, config, n_paths, limits, workers=None,
                         block_size=500):
    """
    Run a strategy on ``n_paths`` simulated paths and summarise its outperformance
    against the bogus benchmark over each run's realized window.

    Paths where nothing was bought are counted in ``untraded_paths`` and left
    out of the outperformance statistics; rates are over traded paths.
    """
    if n_paths < MIN_STUDY_PATHS:
        raise ParameterError(f"need at least {MIN_STUDY_PATHS} paths, got {n_paths}")
    if config.horizon_days < limits.max_days:
        config = config.with_changes(horizon_days=limits.max_days)
    sizes = _rng.block_sizes(n_paths, block_size)
    starts = np.concatenate(([0], np.cumsum(sizes)[:-1])).astype(int)

    def job(item):
        index, (start, size) = item
        result = _study_block(strategy_params, config, limits, int(start), size)
        EventSystem.publish("study.block_done", index, len(sizes))
        return result

    items = list(enumerate(zip(starts, sizes)))
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(job, items))
    else:
        blocks = [job(item) for item in items]

    # Reduce in block order
    outs = np.array([o for b in blocks for o in b[0]], dtype=float)
    completions = [c for b in blocks for c in b[1]]
    untraded = sum(b[2] for b in blocks)
    done = [c for c in completions if c is not None]
    debug(f"study: {n_paths} paths, {len(done)} completed, {untraded} untraded")
    return StudyResult(
        win_probability=float((outs > 0).mean()) if outs.size else float("nan"),
        underperformance_rate=float((outs < 0).mean()) if outs.size else float("nan"),
        outperformance_distribution=_summary(outs),
        completion_rate=len(done) / n_paths,
        mean_completion_day=float(np.mean(done)) if done else float("nan"),
        n_paths=n_paths,
        outperformance=tuple(float(o) for o in outs),
        untraded_paths=untraded,
    )


def multiplier_sensitivity(strategy_params, config, n_paths, limits,
                           fast_mults=(2.0, 4.0, 6.0), trickle_mults=(0.0, 0.15, 0.5),
                           workers=None):
    """Study results over a grid of fast/trickle multipliers."""
    rows = []
    for fast in fast_mults:
        for trickle in trickle_mults:
            if trickle >= fast:
                continue
            params = replace(strategy_params, fast_mult=fast, trickle_mult=trickle)
            result = benchmark_beat_study(params, config, n_paths, limits, workers)
            rows.append({
                "fast_mult": fast,
                "trickle_mult": trickle,
                "win_probability": result.win_probability,
                "underperformance_rate": result.underperformance_rate,
                "mean_outperformance": result.outperformance_distribution["mean"],
                "mean_completion_day": result.mean_completion_day,
            })
    return pd.DataFrame(rows)


def volatility_collapse_comparison(strategy_params, config, n_paths, limits,
                                   collapse_day=10, sigma_after=0.001, workers=None):
    """Mean outperformance with constant sigma against sigma collapsing after ``collapse_day``."""
    constant = benchmark_beat_study(strategy_params, config, n_paths, limits, workers)
    collapsed_config = config.with_changes(regime_change_day=collapse_day, sigma_after=sigma_after)
    collapsed = benchmark_beat_study(strategy_params, collapsed_config, n_paths, limits, workers)
    return {
        "constant_mean_outperformance": constant.outperformance_distribution["mean"],
        "collapse_mean_outperformance": collapsed.outperformance_distribution["mean"],
        "constant_underperformance_rate": constant.underperformance_rate,
        "collapse_underperformance_rate": collapsed.underperformance_rate,
    }


def outperformance_histogram(result, bins=50):
    """Histogram of a study's outperformance values, for CSV export."""
    counts, edges = np.histogram(np.asarray(result.outperformance), bins=bins)
    return pd.DataFrame({"bin_low": edges[:-1], "bin_high": edges[1:], "count": counts})
