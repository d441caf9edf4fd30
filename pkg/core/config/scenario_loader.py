"""
Scenario Loader

Reads one scenario per JSON file. Sections::

    {
        "market":   {... ScenarioConfig fields ...},
        "limits":   {"max_participation": 0.25, "min_days": 1, "max_days": 125},
        "strategy": {"kind": "ADAPTIVE_BROKER", "target_value": 1e8, ...},
        "fees":     {"kind": "VWAP_MINUS", "guarantee_bps": 30, "share_pct": 0.7},
        "taxes":    {"stamp_bps": 50},
        "risk":     {"value": 8.7e8, "percentile": 0.05, "n_paths": 100000},
        "audit":    {"tape": "tapes/example2_synthetic.csv", "total_allowed_days": 125},
        "path_csv": "paths/v_shape.csv"
    }

Every section is optional. Relative file references resolve against the
scenario file's directory. Unknown keys raise ConfigurationError naming the
dotted field.
"""

import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

from core.fees import FeeTerms, TaxTerms
from core.market_model import ScenarioConfig
from core.strategies import RegulatoryLimits, StrategyParams
from core.utils.errors import ConfigurationError, ParameterError
from core.utils.logger import debug

RISK_KEYS = {"value", "z", "percentile", "n_paths", "unwind_days", "days_per_year"}
AUDIT_KEYS = {
    "tape", "total_allowed_days", "total_returned", "stamp_bps", "reported_costs",
    "at_value_fraction", "fees_paid_outside_capital",
}
TOP_LEVEL_KEYS = {"name", "market", "limits", "strategy", "fees", "taxes", "risk", "audit",
                  "path_csv"}


@dataclass(frozen=True)
class Scenario:
    """A loaded scenario file."""
    name: str
    source: Optional[Path]
    market: ScenarioConfig
    limits: RegulatoryLimits
    strategy: Optional[StrategyParams]
    fees: FeeTerms
    taxes: TaxTerms
    risk: dict
    audit: dict
    path_csv: Optional[Path] = None

    def resolve(self, reference):
        """Resolve a file reference relative to the scenario file."""
        ref = Path(reference)
        if ref.is_absolute() or self.source is None:
            return ref
        return self.source.parent / ref


def _build(section, cls, data):
    """Instantiate a config dataclass, turning bad keys and values into ConfigurationError."""
    if not isinstance(data, dict):
        raise ConfigurationError(section, "must be an object")
    known = {f.name for f in fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigurationError(f"{section}.{key}", "unknown key")
    try:
        return cls(**data)
    except ConfigurationError as e:
        raise ConfigurationError(f"{section}.{e.field}", str(e).split(": ", 1)[-1]) from e
    except (TypeError, ValueError, ParameterError) as e:
        raise ConfigurationError(section, str(e)) from e


def _check_keys(section, data, allowed):
    if not isinstance(data, dict):
        raise ConfigurationError(section, "must be an object")
    for key in data:
        if key not in allowed:
            raise ConfigurationError(f"{section}.{key}", "unknown key")
    return dict(data)


def scenario_from_dict(data, source=None):
    """Build a Scenario from an already-parsed document."""
    if not isinstance(data, dict):
        raise ConfigurationError("<root>", "scenario must be a JSON object")
    for key in data:
        if key not in TOP_LEVEL_KEYS:
            raise ConfigurationError(key, "unknown section")

    limits = _build("limits", RegulatoryLimits, data.get("limits", {}))
    market_data = dict(data.get("market", {}))
    market = _build("market", ScenarioConfig, market_data)
    strategy = None
    if "strategy" in data:
        strategy = _build("strategy", StrategyParams, data["strategy"])

    scenario = Scenario(
        name=data.get("name") or (source.stem if source else "scenario"),
        source=source,
        market=market,
        limits=limits,
        strategy=strategy,
        fees=_build("fees", FeeTerms, data.get("fees", {})),
        taxes=_build("taxes", TaxTerms, data.get("taxes", {})),
        risk=_check_keys("risk", data.get("risk", {}), RISK_KEYS),
        audit=_check_keys("audit", data.get("audit", {}), AUDIT_KEYS),
    )
    if data.get("path_csv"):
        scenario = Scenario(**{**vars(scenario), "path_csv": scenario.resolve(data["path_csv"])})
    return scenario


def load_scenario(config_path):
    """
    Load a scenario file.

    Args:
        config_path (str | Path): JSON scenario file

    Returns:
        Scenario

    Raises:
        ConfigurationError: missing file, invalid JSON, unknown keys or bad values
    """
    path = Path(config_path)
    if not path.is_file():
        raise ConfigurationError(str(path), "config file not found")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigurationError(str(path), f"invalid JSON: {e}") from e
    scenario = scenario_from_dict(data, source=path)
    debug(f"Loaded scenario '{scenario.name}' from {path} (digest {scenario.market.digest()})")
    return scenario
