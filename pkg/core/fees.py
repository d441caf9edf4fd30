"""
Broker fee contracts and friction accounting.

Fee kinds:

* VWAP_GUARANTEE: the broker keeps all outperformance above the guarantee.
* VWAP_MINUS: the broker keeps ``share_pct`` of the outperformance above the
  guarantee; a shortfall below the guarantee is owed in full.
* FLAT_AGENCY: a fixed commission regardless of performance.

All fee arithmetic is in basis points of gross purchase value.
"""

import math
from dataclasses import dataclass
from enum import Enum

from core.utils.errors import ConfigurationError, DomainError

BPS = 10_000.0


class FeeKind(str, Enum):
    VWAP_GUARANTEE = "VWAP_GUARANTEE"
    VWAP_MINUS = "VWAP_MINUS"
    FLAT_AGENCY = "FLAT_AGENCY"


@dataclass(frozen=True)
class FeeTerms:
    kind: FeeKind = FeeKind.FLAT_AGENCY
    guarantee_bps: float = 0.0
    share_pct: float = 1.0
    agency_bps: float = 0.0
    allow_negative_fee: bool = True

    def __post_init__(self):
        object.__setattr__(self, "kind", FeeKind(self.kind))
        if not 0.0 <= self.share_pct <= 1.0:
            raise ConfigurationError("share_pct", "must be in [0, 1]")
        for name in ("guarantee_bps", "agency_bps"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigurationError(name, "must be finite")


@dataclass(frozen=True)
class TaxTerms:
    stamp_bps: float = 0.0
    excise_bps: float = 0.0

    def __post_init__(self):
        if self.stamp_bps < 0:
            raise ConfigurationError("stamp_bps", "must be >= 0")
        if self.excise_bps < 0:
            raise ConfigurationError("excise_bps", "must be >= 0")


UK_STAMP = TaxTerms(stamp_bps=50.0)
US_EXCISE = TaxTerms(excise_bps=100.0)


@dataclass(frozen=True)
class CostBreakdown:
    gross_value: float
    stamp: float
    excise: float
    fee: float
    total_cost: float
    fee_bps_of_gross: float
    # Fee settled by the company outside the capital allocated to the programme
    fees_paid_outside_capital: bool = False


def compute_fee_bps(outperformance_bps, terms):
    """
    Broker fee in bps for a given outperformance (bps) of the benchmark.

    Examples:
        >>> compute_fee_bps(100, FeeTerms(FeeKind.VWAP_GUARANTEE, guarantee_bps=40))
        60.0
        >>> round(compute_fee_bps(100, FeeTerms(FeeKind.VWAP_MINUS, guarantee_bps=30, share_pct=0.7)), 9)
        49.0
    """
    excess = float(outperformance_bps) - terms.guarantee_bps
    if terms.kind == FeeKind.VWAP_GUARANTEE:
        fee = excess
    elif terms.kind == FeeKind.VWAP_MINUS:
        fee = terms.share_pct * max(excess, 0.0) + min(excess, 0.0)
    else:
        fee = float(terms.agency_bps)

    if not terms.allow_negative_fee:
        fee = max(fee, 0.0)
    return fee


def retained_outperformance_bps(outperformance_bps, terms):
    """Outperformance left to shareholders after the broker's fee."""
    return float(outperformance_bps) - compute_fee_bps(outperformance_bps, terms)


def cost_breakdown(blotter_gross, out_bps, terms, taxes, fees_paid_outside_capital=False):
    """Fee plus taxes on a programme's gross purchase value."""
    if not blotter_gross > 0:
        raise DomainError("gross purchase value must be positive")
    fee_bps = compute_fee_bps(out_bps, terms)
    fee = blotter_gross * fee_bps / BPS
    stamp = blotter_gross * taxes.stamp_bps / BPS
    excise = blotter_gross * taxes.excise_bps / BPS
    return CostBreakdown(
        gross_value=blotter_gross,
        stamp=stamp,
        excise=excise,
        fee=fee,
        total_cost=math.fsum((blotter_gross, stamp, excise, fee)),
        fee_bps_of_gross=BPS * fee / blotter_gross,
        fees_paid_outside_capital=fees_paid_outside_capital,
    )


def agency_multiple(fee_bps, agency_bps):
    """How many times an agency commission the fee amounts to."""
    if not agency_bps > 0:
        raise DomainError("agency commission must be positive")
    return fee_bps / agency_bps
