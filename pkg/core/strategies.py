"""
Buy-back execution strategies.

Every strategy runs the same daily loop: a pacer proposes a day's order
(a value or a share count) using information up to the previous close, the
loop applies the valuation gate, the participation cap, the optional linear
impact and the remaining-value truncation, then fills at that day's VWAP.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import pandas as pd

from core.helper._fields import coerce_whole_numbers
from core.utils.errors import ConfigurationError, InfeasibleError, ParameterError
from core.utils.logger import debug

BLOTTER_CSV_COLUMNS = [
    "day_index", "shares", "value", "fill_price", "cumulative_pct_value", "pct_time_elapsed",
]

# Remaining value below this fraction of the target counts as done
COMPLETION_TOLERANCE = 1e-9


class StrategyKind(str, Enum):
    TWAP = "TWAP"
    POV = "POV"
    ADAPTIVE_BROKER = "ADAPTIVE_BROKER"
    VALUATION_GATED = "VALUATION_GATED"


@dataclass(frozen=True)
class RegulatoryLimits:
    max_participation: float = 0.25
    min_days: int = 1
    max_days: int = 125

    def __post_init__(self):
        coerce_whole_numbers(self, ("min_days", "max_days"))
        if not 0 < self.max_participation <= 1:
            raise ConfigurationError("max_participation", "must be in (0, 1]")
        if self.min_days < 1:
            raise ConfigurationError("min_days", "must be >= 1")
        if self.max_days < self.min_days:
            raise ConfigurationError("max_days", "must be >= min_days")


@dataclass(frozen=True)
class StrategyParams:
    kind: StrategyKind
    target_value: float
    pov_rate: float = 0.10
    fast_mult: float = 4.0
    trickle_mult: float = 0.15
    impact_kappa: float = 0.0
    valuation_ceiling: Optional[float] = None
    # Strategy wrapped by VALUATION_GATED
    base_kind: StrategyKind = StrategyKind.TWAP

    def __post_init__(self):
        object.__setattr__(self, "kind", StrategyKind(self.kind))
        object.__setattr__(self, "base_kind", StrategyKind(self.base_kind))
        if not self.target_value > 0:
            raise ConfigurationError("target_value", "must be > 0")
        if not 0 <= self.trickle_mult < self.fast_mult:
            raise ConfigurationError("trickle_mult", "need 0 <= trickle_mult < fast_mult")
        if not self.impact_kappa >= 0:
            raise ConfigurationError("impact_kappa", "must be >= 0")
        if not 0 < self.pov_rate <= 1:
            raise ConfigurationError("pov_rate", "must be in (0, 1]")
        if self.base_kind == StrategyKind.VALUATION_GATED:
            raise ConfigurationError("base_kind", "a gate cannot wrap another gate")
        if self.valuation_ceiling is not None and not self.valuation_ceiling > 0:
            raise ConfigurationError("valuation_ceiling", "must be > 0")


@dataclass(frozen=True)
class Fill:
    day_index: int
    shares: float
    value: float
    fill_price: float


@dataclass(frozen=True)
class TradeBlotter:
    """
    Daily fills of one strategy run.

    ``completion_day`` counts trading days used (1-based) and is None while the
    target is not reached.
    """
    fills: tuple
    completed: bool
    completion_day: Optional[int]
    target_value: float
    window_days: int
    diagnostic: str = ""

    @property
    def gross_value(self):
        return math.fsum(f.value for f in self.fills)

    @property
    def total_shares(self):
        return math.fsum(f.shares for f in self.fills)

    def to_frame(self):
        """Plot series: fills with cumulative value and elapsed-time fractions."""
        rows = []
        cumulative = 0.0
        for f in self.fills:
            cumulative += f.value
            rows.append({
                "day_index": f.day_index,
                "shares": f.shares,
                "value": f.value,
                "fill_price": f.fill_price,
                "cumulative_pct_value": cumulative / self.target_value,
                "pct_time_elapsed": (f.day_index + 1) / self.window_days,
            })
        return pd.DataFrame(rows, columns=BLOTTER_CSV_COLUMNS)


@dataclass
class _RunState:
    day: int
    remaining: float
    days_left: int
    vwap_sum: float = 0.0


def _fill_price(vwap, shares, volume, kappa):
    return vwap * (1.0 + kappa * shares / volume) if kappa else vwap


def _shares_for_value(value, vwap, volume, kappa):
    """Shares whose impacted fill costs exactly ``value``."""
    if value <= 0:
        return 0.0
    if not kappa:
        return value / vwap
    # kappa*vwap/volume * s^2 + vwap * s - value = 0
    a = kappa * vwap / volume
    return (-vwap + math.sqrt(vwap * vwap + 4.0 * a * value)) / (2.0 * a)


def _window(path, limits):
    if len(path) < limits.max_days:
        raise ParameterError(
            f"path has {len(path)} days but the execution window needs {limits.max_days}")
    days = path.days[: limits.max_days]
    return (
        [d.vwap for d in days],
        [d.volume for d in days],
        [float(c) for c in path.previous_closes[: limits.max_days]],
    )


def _execute(path, params, limits, pacer, gate=None):
    """Run the daily loop for one pacer; see the module docstring."""
    vwaps, volumes, prev_closes = _window(path, limits)
    n_days = limits.max_days
    target = params.target_value
    kappa = params.impact_kappa
    state = _RunState(day=0, remaining=target, days_left=n_days)
    fills = []
    completion_day = None

    for t in range(n_days):
        state.day, state.days_left = t, n_days - t
        vwap, volume = vwaps[t], volumes[t]

        if gate is not None and prev_closes[t] > gate:
            # Gated day: recorded with zero shares
            fills.append(Fill(t, 0.0, 0.0, vwap))
        else:
            unit, amount = pacer(state, prev_closes[t])
            if unit == "value":
                shares = _shares_for_value(min(amount, state.remaining), vwap, volume, kappa)
            else:
                shares = max(amount, 0.0)
            # Participation cap
            shares = min(shares, limits.max_participation * volume)
            price = _fill_price(vwap, shares, volume, kappa)
            # Never spend more than what is left
            if shares * price > state.remaining:
                shares = _shares_for_value(state.remaining, vwap, volume, kappa)
                price = _fill_price(vwap, shares, volume, kappa)
            value = shares * price
            fills.append(Fill(t, shares, value, price))
            state.remaining -= value

        # Running bogus benchmark includes today's VWAP from tomorrow on
        state.vwap_sum += vwap
        if state.remaining <= COMPLETION_TOLERANCE * target:
            completion_day = t + 1
            break

    completed = completion_day is not None
    diagnostic = ""
    if not completed:
        diagnostic = (f"{state.remaining:,.2f} of {target:,.2f} left unexecuted after "
                      f"{n_days} days")
        debug(diagnostic)
    return TradeBlotter(
        fills=tuple(fills),
        completed=completed,
        completion_day=completion_day,
        target_value=target,
        window_days=n_days,
        diagnostic=diagnostic,
    )


def daily_capacity(path, limits, impact_kappa=0.0):
    """Value each day of the window can absorb at the participation cap."""
    vwaps, volumes, _ = _window(path, limits)
    cap = limits.max_participation
    return [cap * q * v * (1.0 + impact_kappa * cap) for v, q in zip(vwaps, volumes)]


def max_feasible_value(path, limits, impact_kappa=0.0):
    """Largest programme value the participation cap admits over the whole window."""
    return math.fsum(daily_capacity(path, limits, impact_kappa))


def guaranteed_value(path, limits, impact_kappa=0.0):
    """
    Largest target whose even daily pace fits under every day's cap.

    Up to this value a pacer that never buys less than ``remaining / days_left``
    (TWAP, and the adaptive broker through its forced ramp) is sure to complete
    by ``max_days``: the required pace never rises above ``target / max_days``.
    Above it, completion depends on where the cap binds.
    """
    return limits.max_days * min(daily_capacity(path, limits, impact_kappa))


def _twap_pacer(params, limits):
    def pace(state, prev_close):
        return "value", state.remaining / state.days_left
    return pace


def _pov_pacer(params, limits, path):
    if not 0 < params.pov_rate <= limits.max_participation:
        raise ParameterError(
            f"pov_rate {params.pov_rate} must be in (0, max_participation={limits.max_participation}]")
    volumes = [d.volume for d in path.days]

    def pace(state, prev_close):
        return "shares", params.pov_rate * volumes[state.day]
    return pace


def _adaptive_pacer(params, limits):
    baseline = params.target_value / limits.max_days

    def pace(state, prev_close):
        t = state.day
        if t == 0:
            value = baseline
        elif prev_close < state.vwap_sum / t:
            value = params.fast_mult * baseline
        else:
            value = params.trickle_mult * baseline
        # Forced ramp: never fall behind the pace that still finishes on time
        value = max(value, state.remaining / state.days_left)
        # Do not finish before the earliest allowed day
        if t + 1 < limits.min_days:
            value = min(value, state.remaining / (limits.min_days - t))
        return "value", value
    return pace


def _pacer_for(kind, params, limits, path):
    if kind == StrategyKind.TWAP:
        return _twap_pacer(params, limits)
    if kind == StrategyKind.POV:
        return _pov_pacer(params, limits, path)
    if kind == StrategyKind.ADAPTIVE_BROKER:
        return _adaptive_pacer(params, limits)
    raise ParameterError(f"no pacer for strategy kind {kind}")


def run_twap(path, params, limits):
    """
    Equal value per day over ``max_days``, filled at the daily VWAP.

    Raises:
        InfeasibleError: The even daily pace does not fit under some day's cap;
            carries ``guaranteed_value`` as the max feasible value
    """
    feasible = guaranteed_value(path, limits, params.impact_kappa)
    if params.target_value > feasible:
        raise InfeasibleError(
            f"target {params.target_value:,.2f} needs more than the participation cap "
            f"allows on at least one day", feasible)
    blotter = _execute(path, params, limits, _twap_pacer(params, limits))
    if not blotter.completed:
        raise InfeasibleError(blotter.diagnostic, feasible)
    return blotter


def run_pov(path, params, limits):
    """Buy ``pov_rate`` of each day's volume until the target value is reached."""
    return _execute(path, params, limits, _pov_pacer(params, limits, path))


def run_adaptive_broker(path, params, limits):
    """
    Benchmark-chasing broker.

    From day 1 on, buys ``fast_mult`` times the even daily value when the
    previous close is below the running bogus benchmark and ``trickle_mult``
    times it otherwise, with a forced ramp. Completion by ``max_days`` is
    certain up to ``guaranteed_value``; above it the run may end incomplete
    with a diagnostic.
    """
    if params.kind != StrategyKind.ADAPTIVE_BROKER:
        raise ParameterError(f"expected ADAPTIVE_BROKER params, got {params.kind.value}")
    guaranteed = guaranteed_value(path, limits, params.impact_kappa)
    if params.target_value > guaranteed:
        debug(f"target {params.target_value:,.2f} above the guaranteed value {guaranteed:,.2f}")
    blotter = _execute(path, params, limits, _adaptive_pacer(params, limits))
    if not blotter.completed:
        blotter = _with_diagnostic(
            blotter, f"participation cap made the forced ramp infeasible (guaranteed value "
                     f"{guaranteed:,.2f}); " + blotter.diagnostic)
    return blotter


def run_valuation_gated(path, params, limits, gate=None):
    """
    Run ``params.base_kind`` but skip every day whose previous close is above the
    valuation ceiling. The programme may finish incomplete.
    """
    ceiling = params.valuation_ceiling if gate is None else gate
    if ceiling is None or not ceiling > 0:
        raise ParameterError("valuation ceiling must be > 0")
    pacer = _pacer_for(params.base_kind, params, limits, path)
    return _execute(path, params, limits, pacer, gate=ceiling)


def run_strategy(path, params, limits):
    """Dispatch on ``params.kind``."""
    runners = {
        StrategyKind.TWAP: run_twap,
        StrategyKind.POV: run_pov,
        StrategyKind.ADAPTIVE_BROKER: run_adaptive_broker,
        StrategyKind.VALUATION_GATED: run_valuation_gated,
    }
    return runners[params.kind](path, params, limits)


def _with_diagnostic(blotter, diagnostic):
    return TradeBlotter(
        fills=blotter.fills,
        completed=blotter.completed,
        completion_day=blotter.completion_day,
        target_value=blotter.target_value,
        window_days=blotter.window_days,
        diagnostic=diagnostic,
    )
