"""
Daily market paths under geometric Brownian motion.

A path is a pure function of ``(ScenarioConfig, path_index)``: each path owns
its random stream, so paths can be generated in any order or in parallel and
still come out bit-identical.
"""

import hashlib
import json
import math
from dataclasses import dataclass, asdict, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from core.helper import _rng
from core.helper._fields import coerce_whole_numbers
from core.utils.errors import ConfigurationError, ValidationError

PATH_CSV_COLUMNS = ["day_index", "close", "vwap", "volume"]


@dataclass(frozen=True)
class ScenarioConfig:
    """Market scenario for path generation. Rates are annualised."""
    initial_price: float = 100.0
    sigma_annual: float = 0.35
    drift_annual: float = 0.0
    trading_days_per_year: int = 250
    horizon_days: int = 125
    adv_shares: float = 1_000_000.0
    volume_sigma: float = 0.3
    intraday_noise_sigma: float = 0.0
    master_seed: int = 0
    # Optional volatility regime change: sigma switches to sigma_after from this day on
    regime_change_day: Optional[int] = None
    sigma_after: Optional[float] = None

    def __post_init__(self):
        coerce_whole_numbers(
            self, ("trading_days_per_year", "horizon_days", "master_seed", "regime_change_day"),
            optional=("regime_change_day",))
        self.validate()

    def validate(self):
        """Raise ConfigurationError naming the first offending field."""
        if not self.initial_price > 0:
            raise ConfigurationError("initial_price", "must be > 0")
        if not self.sigma_annual >= 0 or not math.isfinite(self.sigma_annual):
            raise ConfigurationError("sigma_annual", "must be a finite value >= 0")
        if not math.isfinite(self.drift_annual):
            raise ConfigurationError("drift_annual", "must be finite")
        if self.trading_days_per_year <= 0:
            raise ConfigurationError("trading_days_per_year", "must be a positive whole number of days")
        if self.horizon_days < 1:
            raise ConfigurationError("horizon_days", "must be an integer >= 1")
        if not self.adv_shares > 0:
            raise ConfigurationError("adv_shares", "must be > 0")
        if not self.volume_sigma >= 0:
            raise ConfigurationError("volume_sigma", "must be >= 0")
        if not self.intraday_noise_sigma >= 0:
            raise ConfigurationError("intraday_noise_sigma", "must be >= 0")
        if self.master_seed < 0 or self.master_seed >= 2 ** 64:
            raise ConfigurationError("master_seed", "must be an unsigned 64-bit integer")
        if (self.regime_change_day is None) != (self.sigma_after is None):
            raise ConfigurationError("regime_change_day", "regime_change_day and sigma_after go together")
        if self.regime_change_day is not None:
            if self.regime_change_day < 0:
                raise ConfigurationError("regime_change_day", "must be >= 0")
            if not self.sigma_after >= 0:
                raise ConfigurationError("sigma_after", "must be >= 0")
        return self

    @property
    def dt(self):
        return 1.0 / self.trading_days_per_year

    @property
    def sigma_daily(self):
        return self.sigma_annual * math.sqrt(self.dt)

    def sigma_schedule(self):
        """Annualised sigma applying to each day of the horizon."""
        sigma = np.full(self.horizon_days, float(self.sigma_annual))
        if self.regime_change_day is not None:
            sigma[self.regime_change_day:] = float(self.sigma_after)
        return sigma

    def digest(self):
        """Short stable identifier of the scenario contents."""
        payload = json.dumps(asdict(self), sort_keys=True, default=str)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]

    def with_changes(self, **changes):
        """Return a validated copy with some fields replaced."""
        data = asdict(self)
        data.update(changes)
        return ScenarioConfig(**data)


@dataclass(frozen=True)
class MarketDay:
    day_index: int
    close: float
    vwap: float
    volume: float


@dataclass(frozen=True)
class PricePath:
    """
    One simulated or ingested market path.

    ``initial_price`` is the close before day 0; strategies use it as the
    previous close on the first day.
    """
    config_digest: str
    initial_price: float
    days: tuple = field(default_factory=tuple)

    def __len__(self):
        return len(self.days)

    @cached_property
    def closes(self):
        return np.array([d.close for d in self.days], dtype=float)

    @cached_property
    def vwaps(self):
        return np.array([d.vwap for d in self.days], dtype=float)

    @cached_property
    def volumes(self):
        return np.array([d.volume for d in self.days], dtype=float)

    @cached_property
    def previous_closes(self):
        """Close known at the start of each day (initial price for day 0)."""
        return np.concatenate(([self.initial_price], self.closes[:-1]))

    def to_frame(self):
        return pd.DataFrame(
            {
                "day_index": [d.day_index for d in self.days],
                "close": self.closes,
                "vwap": self.vwaps,
                "volume": self.volumes,
            },
            columns=PATH_CSV_COLUMNS,
        )


def generate_path(config, path_index):
    """
    Generate one GBM path.

    Args:
        config (ScenarioConfig): Scenario; validated on construction
        path_index (int): Index of the path inside the seed family

    Returns:
        PricePath: ``config.horizon_days`` days of close, daily VWAP and volume
    """
    if path_index < 0:
        raise ConfigurationError("path_index", "must be >= 0")
    config.validate()
    horizon = config.horizon_days
    rng = _rng.stream(config.master_seed, _rng.TAG_PATH, path_index)
    # Draw order is part of the reproducibility contract
    eps = rng.standard_normal(horizon)
    eta = rng.standard_normal(horizon)
    vol_z = rng.standard_normal(horizon)

    dt = config.dt
    sigma = config.sigma_schedule()
    log_steps = (config.drift_annual - 0.5 * sigma ** 2) * dt + sigma * math.sqrt(dt) * eps
    closes = config.initial_price * np.exp(np.cumsum(log_steps))
    previous = np.concatenate(([config.initial_price], closes[:-1]))
    vwaps = np.sqrt(previous * closes) * np.exp(config.intraday_noise_sigma * eta)
    volumes = config.adv_shares * np.exp(config.volume_sigma * vol_z)

    return _build_path(config.digest(), config.initial_price, closes, vwaps, volumes)


def generate_paths(config, n_paths, start_index=0):
    """Generate ``n_paths`` consecutive paths of a seed family."""
    return [generate_path(config, i) for i in range(start_index, start_index + n_paths)]


def _build_path(digest, initial_price, closes, vwaps, volumes):
    days = tuple(
        MarketDay(i, float(c), float(v), float(q))
        for i, (c, v, q) in enumerate(zip(closes, vwaps, volumes))
    )
    return PricePath(config_digest=digest, initial_price=float(initial_price), days=days)


def path_from_series(closes: Sequence[float], vwaps=None, volumes=1_000_000.0,
                     initial_price=None, label="ingested"):
    """
    Build a PricePath from explicit series.

    Missing VWAPs default to the geometric midpoint of adjacent closes; a scalar
    volume is broadcast to every day.
    """
    closes = np.asarray(closes, dtype=float)
    if closes.ndim != 1 or len(closes) == 0:
        raise ValidationError("closes must be a non-empty 1-D series")
    initial_price = float(closes[0] if initial_price is None else initial_price)
    if vwaps is None:
        previous = np.concatenate(([initial_price], closes[:-1]))
        vwaps = np.sqrt(previous * closes)
    vwaps = np.asarray(vwaps, dtype=float)
    volumes = np.broadcast_to(np.asarray(volumes, dtype=float), closes.shape)
    if vwaps.shape != closes.shape:
        raise ValidationError("vwaps and closes differ in length")
    if initial_price <= 0 or (closes <= 0).any() or (vwaps <= 0).any() or (volumes <= 0).any():
        raise ValidationError("prices and volumes must be positive")
    return _build_path(label, initial_price, closes, vwaps, volumes)


def constant_path(price, volume, days):
    """Flat market: every close and VWAP equals ``price``."""
    return path_from_series([price] * days, vwaps=[price] * days, volumes=volume,
                            initial_price=price, label="constant")


def write_path_csv(path, destination):
    """Write a path as CSV (day_index, close, vwap, volume)."""
    path.to_frame().to_csv(destination, index=False)


def read_path_csv(source, initial_price=None):
    """Read a path CSV written by ``write_path_csv`` (or by hand)."""
    frame = pd.read_csv(source)
    missing = [c for c in PATH_CSV_COLUMNS if c not in frame.columns]
    if missing:
        raise ValidationError(f"path CSV missing columns: {', '.join(missing)}")
    if not (frame["day_index"].to_numpy() == np.arange(len(frame))).all():
        raise ValidationError("day_index must run 0, 1, 2, ... without gaps")
    return path_from_series(
        frame["close"].to_numpy(),
        vwaps=frame["vwap"].to_numpy(),
        volumes=frame["volume"].to_numpy(),
        initial_price=initial_price,
        label=str(source),
    )
